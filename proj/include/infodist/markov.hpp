#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "infodist/alphabet.hpp"
#include "infodist/errors.hpp"

namespace infodist {

namespace detail {

inline std::uint64_t checked_pow(std::uint64_t base, unsigned exp, std::uint64_t limit,
                                 const char* what) {
    std::uint64_t v = 1;
    for (unsigned i = 0; i < exp; ++i) {
        if (v > limit / base)
            throw Error(errc::alphabet_too_large, std::string(what) + ": state space exceeds limit");
        v *= base;
    }
    return v;
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t sample_index(std::span<const double> probs, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    // u fell into the float slack past the last positive entry
    for (std::size_t i = probs.size(); i-- > 0;)
        if (probs[i] > 0.0) return i;
    return 0;
}

} // namespace detail

/// Finite-order stationary Markov source over an alphabet. States are the
/// last `order` symbols, encoded base |A| with the most recent symbol in the
/// least significant digit; emitting a maps state s to (s*|A| + a) mod |A|^k.
class MarkovSource {
  public:
    MarkovSource(AlphabetPtr alphabet, unsigned order, std::vector<double> transition)
        : alphabet_(std::move(alphabet)), order_(order), transition_(std::move(transition)) {
        const std::uint64_t a = alphabet_->size();
        state_count_ = detail::checked_pow(a, order_, 1u << 20, "MarkovSource");
        if (transition_.size() != state_count_ * a)
            throw Error(errc::invalid_spec,
                        "transition table has " + std::to_string(transition_.size()) +
                            " entries, expected " + std::to_string(state_count_ * a));
        for (std::uint64_t s = 0; s < state_count_; ++s) {
            double sum = 0.0;
            for (std::uint64_t i = 0; i < a; ++i) {
                const double p = transition_[s * a + i];
                if (p < 0.0)
                    throw Error(errc::invalid_spec, "negative transition probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw Error(errc::invalid_spec, "row " + std::to_string(s) +
                                                    " sums to " + std::to_string(sum));
        }
        check_unichain();
    }

    const AlphabetPtr& alphabet() const noexcept { return alphabet_; }
    unsigned order() const noexcept { return order_; }
    std::uint64_t state_count() const noexcept { return state_count_; }
    std::span<const double> row(std::uint64_t state) const {
        return {transition_.data() + state * alphabet_->size(), alphabet_->size()};
    }
    double prob(std::uint64_t state, std::uint32_t symbol) const {
        return transition_[state * alphabet_->size() + symbol];
    }
    std::uint64_t next_state(std::uint64_t state, std::uint32_t symbol) const {
        return (state * alphabet_->size() + symbol) % state_count_;
    }

  private:
    // Unique stationary distribution requires a single closed communicating
    // class; transient states (reachable constructions like a copy channel
    // produce them) are allowed.
    void check_unichain() const {
        const std::size_t m = state_count_;
        const std::size_t a = alphabet_->size();
        // Tarjan SCC, iterative.
        std::vector<int> idx(m, -1), low(m, 0), comp(m, -1);
        std::vector<bool> on_stack(m, false);
        std::vector<std::size_t> stack;
        int counter = 0, ncomp = 0;
        struct Frame { std::size_t v; std::size_t edge; };
        for (std::size_t root = 0; root < m; ++root) {
            if (idx[root] >= 0) continue;
            std::vector<Frame> frames{{root, 0}};
            idx[root] = low[root] = counter++;
            stack.push_back(root);
            on_stack[root] = true;
            while (!frames.empty()) {
                auto& [v, edge] = frames.back();
                if (edge < a) {
                    const std::size_t e = edge++;
                    if (transition_[v * a + e] <= 0.0) continue;
                    const std::size_t w = (v * a + e) % m;
                    if (idx[w] < 0) {
                        idx[w] = low[w] = counter++;
                        stack.push_back(w);
                        on_stack[w] = true;
                        frames.push_back({w, 0});
                    } else if (on_stack[w]) {
                        low[v] = std::min(low[v], idx[w]);
                    }
                } else {
                    if (low[v] == idx[v]) {
                        while (true) {
                            const std::size_t w = stack.back();
                            stack.pop_back();
                            on_stack[w] = false;
                            comp[w] = ncomp;
                            if (w == v) break;
                        }
                        ++ncomp;
                    }
                    const std::size_t vv = v;
                    frames.pop_back();
                    if (!frames.empty())
                        low[frames.back().v] = std::min(low[frames.back().v], low[vv]);
                }
            }
        }
        // A component is closed if no positive edge leaves it.
        std::vector<bool> closed(ncomp, true);
        for (std::size_t v = 0; v < m; ++v)
            for (std::size_t e = 0; e < a; ++e)
                if (transition_[v * a + e] > 0.0 && comp[(v * a + e) % m] != comp[v])
                    closed[comp[v]] = false;
        int nclosed = 0;
        for (bool c : closed) nclosed += c;
        if (nclosed != 1)
            throw Error(errc::not_irreducible,
                        "chain has " + std::to_string(nclosed) + " closed classes");
    }

    AlphabetPtr alphabet_;
    unsigned order_;
    std::uint64_t state_count_;
    std::vector<double> transition_;
};

/// Stationary distribution over states: solves pi P = pi, sum pi = 1 by
/// dense Gaussian elimination (state spaces here are small).
inline std::vector<double> stationary_distribution(const MarkovSource& src) {
    const std::size_t m = src.state_count();
    const std::size_t a = src.alphabet()->size();
    // M = P^T - I with the last row replaced by all-ones; solve M pi = e_m.
    std::vector<double> mat(m * m, 0.0);
    for (std::size_t s = 0; s < m; ++s)
        for (std::size_t e = 0; e < a; ++e) {
            const double p = src.prob(s, static_cast<std::uint32_t>(e));
            if (p > 0.0) mat[src.next_state(s, static_cast<std::uint32_t>(e)) * m + s] += p;
        }
    for (std::size_t s = 0; s < m; ++s) mat[s * m + s] -= 1.0;
    std::vector<double> rhs(m, 0.0);
    for (std::size_t s = 0; s < m; ++s) mat[(m - 1) * m + s] = 1.0;
    rhs[m - 1] = 1.0;

    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(mat[r * m + col]) > std::abs(mat[piv * m + col])) piv = r;
        if (std::abs(mat[piv * m + col]) < 1e-300)
            throw Error(errc::not_irreducible, "singular stationary system");
        if (piv != col) {
            for (std::size_t c = 0; c < m; ++c) std::swap(mat[piv * m + c], mat[col * m + c]);
            std::swap(rhs[piv], rhs[col]);
        }
        const double d = mat[col * m + col];
        for (std::size_t r = col + 1; r < m; ++r) {
            const double f = mat[r * m + col] / d;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < m; ++c) mat[r * m + c] -= f * mat[col * m + c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> pi(m, 0.0);
    for (std::size_t r = m; r-- > 0;) {
        double v = rhs[r];
        for (std::size_t c = r + 1; c < m; ++c) v -= mat[r * m + c] * pi[c];
        pi[r] = v / mat[r * m + r];
    }
    double total = 0.0;
    for (double& v : pi) {
        if (v < 0.0 && v > -1e-9) v = 0.0;
        total += v;
    }
    for (double& v : pi) v /= total;
    return pi;
}

/// Exact entropy rate in bits per symbol.
inline double exact_entropy_rate(const MarkovSource& src) {
    const auto pi = stationary_distribution(src);
    const std::size_t a = src.alphabet()->size();
    double h = 0.0;
    for (std::uint64_t s = 0; s < src.state_count(); ++s) {
        if (pi[s] <= 0.0) continue;
        double hs = 0.0;
        for (std::size_t e = 0; e < a; ++e) {
            const double p = src.prob(s, static_cast<std::uint32_t>(e));
            if (p > 0.0) hs -= p * std::log2(p);
        }
        h += pi[s] * hs;
    }
    return h < 0.0 ? 0.0 : h;
}

/// Lift a source to a higher order; the new states just carry extra history.
inline MarkovSource lift_source(const MarkovSource& src, unsigned order) {
    if (order < src.order())
        throw Error(errc::order_mismatch, "cannot lift to a lower order");
    if (order == src.order()) return src;
    const std::uint64_t a = src.alphabet()->size();
    const std::uint64_t states = detail::checked_pow(a, order, 1u << 20, "lift_source");
    std::vector<double> rows(states * a);
    for (std::uint64_t s = 0; s < states; ++s) {
        const std::uint64_t base = s % src.state_count();
        for (std::uint64_t e = 0; e < a; ++e)
            rows[s * a + e] = src.prob(base, static_cast<std::uint32_t>(e));
    }
    return MarkovSource(src.alphabet(), order, std::move(rows));
}

/// Exact relative entropy rate D(q || p) in bits per symbol. Returns
/// +infinity when q puts mass where p has none (support violation).
inline double exact_divergence_rate(const MarkovSource& q, const MarkovSource& p) {
    if (!same_alphabet(q.alphabet(), p.alphabet()))
        throw Error(errc::alphabet_mismatch, "divergence requires a shared alphabet");
    const unsigned order = std::max(q.order(), p.order());
    const MarkovSource ql = lift_source(q, order);
    const MarkovSource pl = lift_source(p, order);
    const auto pi = stationary_distribution(ql);
    const std::size_t a = ql.alphabet()->size();
    double d = 0.0;
    for (std::uint64_t s = 0; s < ql.state_count(); ++s) {
        if (pi[s] <= 1e-13) continue;
        for (std::size_t e = 0; e < a; ++e) {
            const double qa = ql.prob(s, static_cast<std::uint32_t>(e));
            if (qa <= 0.0) continue;
            const double pa = pl.prob(s, static_cast<std::uint32_t>(e));
            if (pa <= 0.0) return std::numeric_limits<double>::infinity();
            d += pi[s] * qa * std::log2(qa / pa);
        }
    }
    return d < 0.0 ? 0.0 : d;
}

/// Deterministic sample of length n. The initial state is drawn from the
/// stationary distribution, so the output is stationary from position 0.
inline std::vector<std::uint32_t> sample_indices(const MarkovSource& src, std::size_t n,
                                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint32_t> out;
    out.reserve(n);
    if (n == 0) return out;
    const auto pi = stationary_distribution(src);
    std::uint64_t state = detail::sample_index(pi, detail::uniform_unit(rng));
    for (std::size_t t = 0; t < n; ++t) {
        const auto sym = static_cast<std::uint32_t>(
            detail::sample_index(src.row(state), detail::uniform_unit(rng)));
        out.push_back(sym);
        state = src.next_state(state, sym);
    }
    return out;
}

inline SymbolString sample(const MarkovSource& src, std::size_t n, std::uint64_t seed) {
    return SymbolString(src.alphabet(), sample_indices(src, n, seed));
}

/// A pair source (X, Y) as one Markov chain over the product alphabet A x A.
/// Only constructions whose marginals stay finite-order Markov are supported:
/// independent products and symbol-wise channels.
class JointMarkovSource {
  public:
    enum class Kind { independent, channel };

    static JointMarkovSource independent(MarkovSource x, MarkovSource y) {
        if (!same_alphabet(x.alphabet(), y.alphabet()))
            throw Error(errc::alphabet_mismatch, "pair sources must share an alphabet");
        const unsigned k = std::max(x.order(), y.order());
        const MarkovSource xl = lift_source(x, k);
        const MarkovSource yl = lift_source(y, k);
        const std::uint64_t a = x.alphabet()->size();
        const std::uint64_t a2 = a * a;
        const std::uint64_t states = detail::checked_pow(a2, k, 1u << 20, "independent joint");
        std::vector<double> rows(states * a2);
        for (std::uint64_t s = 0; s < states; ++s) {
            const auto [sx, sy] = split_state(s, a, k);
            for (std::uint64_t ea = 0; ea < a; ++ea)
                for (std::uint64_t eb = 0; eb < a; ++eb)
                    rows[s * a2 + ea * a + eb] =
                        xl.prob(sx, static_cast<std::uint32_t>(ea)) *
                        yl.prob(sy, static_cast<std::uint32_t>(eb));
        }
        MarkovSource chain(make_product_alphabet(x.alphabet()), k, std::move(rows));
        return JointMarkovSource(std::move(chain), Kind::independent, std::move(x),
                                 std::move(y), {});
    }

    /// y_t is x_t passed through the memoryless channel W (row a = P(b | a)).
    static JointMarkovSource channel(MarkovSource x, std::vector<double> w) {
        const std::uint64_t a = x.alphabet()->size();
        if (w.size() != a * a)
            throw Error(errc::invalid_spec, "channel matrix must be |A| x |A|");
        for (std::uint64_t r = 0; r < a; ++r) {
            double sum = 0.0;
            for (std::uint64_t c = 0; c < a; ++c) {
                if (w[r * a + c] < 0.0)
                    throw Error(errc::invalid_spec, "negative channel probability");
                sum += w[r * a + c];
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw Error(errc::invalid_spec, "channel row does not sum to 1");
        }
        const unsigned k = x.order();
        const std::uint64_t a2 = a * a;
        const std::uint64_t states = detail::checked_pow(a2, k, 1u << 20, "channel joint");
        std::vector<double> rows(states * a2);
        for (std::uint64_t s = 0; s < states; ++s) {
            const auto [sx, sy] = split_state(s, a, k);
            (void)sy;
            for (std::uint64_t ea = 0; ea < a; ++ea)
                for (std::uint64_t eb = 0; eb < a; ++eb)
                    rows[s * a2 + ea * a + eb] =
                        x.prob(sx, static_cast<std::uint32_t>(ea)) * w[ea * a + eb];
        }
        MarkovSource chain(make_product_alphabet(x.alphabet()), k, std::move(rows));
        return JointMarkovSource(std::move(chain), Kind::channel, std::move(x), std::nullopt,
                                 std::move(w));
    }

    const MarkovSource& chain() const noexcept { return chain_; }
    Kind kind() const noexcept { return kind_; }

    const MarkovSource& marginal_x() const noexcept { return src_x_; }

    /// Marginal law of the Y stream, when it is finite-order Markov.
    MarkovSource marginal_y() const {
        if (kind_ == Kind::independent) return *src_y_;
        const std::uint64_t a = src_x_.alphabet()->size();
        if (src_x_.order() == 0) {
            // Memoryless input: Y is i.i.d. with the pushed-forward law.
            std::vector<double> row(a, 0.0);
            for (std::uint64_t ea = 0; ea < a; ++ea)
                for (std::uint64_t eb = 0; eb < a; ++eb)
                    row[eb] += src_x_.prob(0, static_cast<std::uint32_t>(ea)) *
                               channel_[ea * a + eb];
            return MarkovSource(src_x_.alphabet(), 0, std::move(row));
        }
        // Deterministic injective channel: Y is X relabeled.
        std::vector<std::int64_t> map(a, -1);
        std::vector<bool> hit(a, false);
        for (std::uint64_t r = 0; r < a; ++r) {
            for (std::uint64_t c = 0; c < a; ++c) {
                const double v = channel_[r * a + c];
                if (v != 0.0 && v != 1.0)
                    throw Error(errc::marginal_not_markov,
                                "noisy channel over a Markov input has a hidden-Markov marginal");
                if (v == 1.0) map[r] = static_cast<std::int64_t>(c);
            }
            if (map[r] < 0 || hit[map[r]])
                throw Error(errc::marginal_not_markov,
                            "non-injective channel over a Markov input");
            hit[map[r]] = true;
        }
        const unsigned k = src_x_.order();
        const std::uint64_t states = src_x_.state_count();
        std::vector<double> rows(states * a, 0.0);
        for (std::uint64_t s = 0; s < states; ++s) {
            const std::uint64_t ys = relabel_state(s, a, k, map);
            for (std::uint64_t ea = 0; ea < a; ++ea)
                rows[ys * a + static_cast<std::uint64_t>(map[ea])] =
                    src_x_.prob(s, static_cast<std::uint32_t>(ea));
        }
        return MarkovSource(src_x_.alphabet(), k, std::move(rows));
    }

  private:
    JointMarkovSource(MarkovSource chain, Kind kind, MarkovSource x,
                      std::optional<MarkovSource> y, std::vector<double> w)
        : chain_(std::move(chain)), kind_(kind), src_x_(std::move(x)), src_y_(std::move(y)),
          channel_(std::move(w)) {}

    // Product state digits are pair symbols xi*|A| + yi; peel them apart.
    static std::pair<std::uint64_t, std::uint64_t> split_state(std::uint64_t s, std::uint64_t a,
                                                               unsigned k) {
        std::uint64_t sx = 0, sy = 0, mul = 1;
        for (unsigned i = 0; i < k; ++i) {
            const std::uint64_t digit = s % (a * a);
            s /= a * a;
            sx += (digit / a) * mul;
            sy += (digit % a) * mul;
            mul *= a;
        }
        return {sx, sy};
    }

    static std::uint64_t relabel_state(std::uint64_t s, std::uint64_t a, unsigned k,
                                       const std::vector<std::int64_t>& map) {
        std::uint64_t out = 0, mul = 1;
        for (unsigned i = 0; i < k; ++i) {
            out += static_cast<std::uint64_t>(map[s % a]) * mul;
            s /= a;
            mul *= a;
        }
        return out;
    }

    MarkovSource chain_;
    Kind kind_;
    MarkovSource src_x_;
    std::optional<MarkovSource> src_y_;
    std::vector<double> channel_;
};

inline double exact_joint_entropy_rate(const JointMarkovSource& joint) {
    return exact_entropy_rate(joint.chain());
}

enum class ConditionalDirection { x_given_y, y_given_x };

inline double exact_conditional_entropy_rate(const JointMarkovSource& joint,
                                             ConditionalDirection dir) {
    const double hj = exact_joint_entropy_rate(joint);
    const double hm = dir == ConditionalDirection::x_given_y
                          ? exact_entropy_rate(joint.marginal_y())
                          : exact_entropy_rate(joint.marginal_x());
    const double h = hj - hm;
    return (h < 0.0 && h >= -1e-10) ? 0.0 : h;
}

/// Samples of the pair stream, as supersymbols over the base alphabet.
inline SuperString sample_joint(const JointMarkovSource& joint, std::size_t n,
                                std::uint64_t seed) {
    auto data = sample_indices(joint.chain(), n, seed);
    return SuperString(joint.marginal_x().alphabet(), std::move(data));
}

} // namespace infodist
