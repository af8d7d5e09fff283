#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "infodist/alphabet.hpp"
#include "infodist/divergence.hpp"
#include "infodist/errors.hpp"
#include "infodist/estimators.hpp"

namespace infodist {

/// Below this marginal-entropy level the normalized distance is meaningless
/// (both strings nearly constant), so e2 refuses rather than divides.
inline constexpr double kDegenerateEntropyFloor = 1e-3;

struct DistanceSpec {
    enum class Metric { e1, e2, kl_sym_max, kl_sym_sum };
    Metric metric = Metric::e2;
    EstimatorSpec estimator = EstimatorSpec::kt(2);
    // KL metrics only: which directed-divergence estimator to symmetrize.
    DivergenceMethod divergence = DivergenceMethod::cross_code;
    // Negative directed estimates are clamped to 0 before combining.
    bool clamp = true;
    // e1/e2 numerator: false = side-information coding (never negative),
    // true = chain rule H(X,Y) - H(Y) (can go negative; clamped, flagged).
    bool indirect_conditional = false;

    std::string metric_id() const {
        switch (metric) {
            case Metric::e1: return "e1";
            case Metric::e2: return "e2";
            case Metric::kl_sym_max: return "kl-sym-max";
            case Metric::kl_sym_sum: return "kl-sym-sum";
        }
        return "?";
    }
};

struct DistanceValue {
    double value = 0.0;
    bool clamped = false;
};

namespace detail {

struct ConditionalPair {
    double x_given_y;
    double y_given_x;
    bool clamped;
};

inline ConditionalPair conditional_rates(const SymbolString& x, const SymbolString& y,
                                         const DistanceSpec& spec) {
    ConditionalPair p{0.0, 0.0, false};
    if (spec.indirect_conditional) {
        p.x_given_y = conditional_entropy_indirect(x, y, spec.estimator);
        p.y_given_x = conditional_entropy_indirect(y, x, spec.estimator);
        if (p.x_given_y < 0.0 || p.y_given_x < 0.0) {
            p.clamped = true;
            p.x_given_y = std::max(p.x_given_y, 0.0);
            p.y_given_x = std::max(p.y_given_x, 0.0);
        }
    } else {
        if (spec.estimator.kind != EstimatorSpec::Kind::kt)
            throw Error(errc::usage,
                        "side-information conditional coding requires the kt estimator; "
                        "use the indirect mode for lz78 or external");
        p.x_given_y = conditional_entropy_direct(x, y, spec.estimator.order);
        p.y_given_x = conditional_entropy_direct(y, x, spec.estimator.order);
    }
    return p;
}

} // namespace detail

/// Unnormalized distance: min(|x|,|y|) * max of the two conditional rates.
inline DistanceValue e1_distance(const SymbolString& x, const SymbolString& y,
                                 const DistanceSpec& spec) {
    const auto p = detail::conditional_rates(x, y, spec);
    const auto n = static_cast<double>(std::min(x.size(), y.size()));
    return {n * std::max(p.x_given_y, p.y_given_x), p.clamped};
}

inline double e1_distance(const SymbolString& x, const SymbolString& y, unsigned order) {
    DistanceSpec spec;
    spec.metric = DistanceSpec::Metric::e1;
    spec.estimator = EstimatorSpec::kt(order);
    return e1_distance(x, y, spec).value;
}

/// Normalized distance in [0, ~1]: max{h(x|y), h(y|x)} / max{h(x), h(y)}.
/// Finite-length estimates may slightly exceed 1; they are not clipped.
inline DistanceValue e2_distance(const SymbolString& x, const SymbolString& y,
                                 const DistanceSpec& spec) {
    const auto p = detail::conditional_rates(x, y, spec);
    const double hx = entropy_estimate(x, spec.estimator);
    const double hy = entropy_estimate(y, spec.estimator);
    const double den = std::max(hx, hy);
    if (den < kDegenerateEntropyFloor)
        throw Error(errc::degenerate_denominator,
                    "both marginal entropy estimates are below " +
                        std::to_string(kDegenerateEntropyFloor));
    return {std::max(p.x_given_y, p.y_given_x) / den, p.clamped};
}

inline double e2_distance(const SymbolString& x, const SymbolString& y, unsigned order) {
    DistanceSpec spec;
    spec.metric = DistanceSpec::Metric::e2;
    spec.estimator = EstimatorSpec::kt(order);
    return e2_distance(x, y, spec).value;
}

/// Symmetrized divergence: max or sum of the two directed estimates, each
/// clamped (when requested) before combining.
inline DistanceValue kl_sym_distance(const SymbolString& x, const SymbolString& y,
                                     DivergenceMethod method, bool sum_variant, unsigned order,
                                     bool clamp = true) {
    const DivergenceEstimate dxy = divergence_estimate(x, y, method, order, clamp);
    const DivergenceEstimate dyx = divergence_estimate(y, x, method, order, clamp);
    const bool clamped = dxy.clamped || dyx.clamped;
    if (sum_variant) return {dxy.value + dyx.value, clamped};
    return {std::max(dxy.value, dyx.value), clamped};
}

inline DistanceValue kl_sym_distance(const SymbolString& x, const SymbolString& y,
                                     const DistanceSpec& spec) {
    return kl_sym_distance(x, y, spec.divergence,
                           spec.metric == DistanceSpec::Metric::kl_sym_sum,
                           spec.estimator.order, spec.clamp);
}

inline DistanceValue pairwise_distance(const SymbolString& x, const SymbolString& y,
                                       const DistanceSpec& spec) {
    switch (spec.metric) {
        case DistanceSpec::Metric::e1: return e1_distance(x, y, spec);
        case DistanceSpec::Metric::e2: return e2_distance(x, y, spec);
        case DistanceSpec::Metric::kl_sym_max:
        case DistanceSpec::Metric::kl_sym_sum: return kl_sym_distance(x, y, spec);
    }
    throw Error(errc::usage, "unknown metric");
}

// ---------------------------------------------------------------------------
// Distance matrices
// ---------------------------------------------------------------------------

struct DistanceMatrix {
    std::vector<std::string> labels;
    std::vector<double> values;        // row-major, labels.size() squared
    std::vector<std::uint8_t> clamp_flags;
    std::vector<std::size_t> input_lengths;  // per item; pair (i,j) used min
    std::string metric_id;
    std::string estimator_id;
    std::size_t clamp_count = 0;

    std::size_t size() const noexcept { return labels.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * labels.size() + j]; }
    bool clamped_at(std::size_t i, std::size_t j) const {
        return clamp_flags[i * labels.size() + j] != 0;
    }
    std::size_t effective_n(std::size_t i, std::size_t j) const {
        return std::min(input_lengths[i], input_lengths[j]);
    }
};

/// All pairwise distances over labeled strings. Every unordered pair is
/// computed once and mirrored; the diagonal is computed, not assumed zero.
/// Any residual negative value is clamped to 0 and flagged. `jobs` > 1 farms
/// pairs out to threads; results land in fixed slots, so the matrix is
/// identical regardless of scheduling.
inline DistanceMatrix distance_matrix(const std::vector<std::string>& labels,
                                      const std::vector<SymbolString>& items,
                                      const DistanceSpec& spec, unsigned jobs = 1) {
    if (labels.size() != items.size())
        throw Error(errc::length_mismatch, "labels and items differ in count");
    const std::size_t n = items.size();
    if (n < 2) throw Error(errc::too_few_items, "a distance matrix needs >= 2 items");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (labels[i] == labels[j])
                throw Error(errc::duplicate_label, "duplicate label: " + labels[i]);
    for (std::size_t i = 1; i < n; ++i)
        if (!same_alphabet(items[i].alphabet(), items[0].alphabet()))
            throw Error(errc::alphabet_mismatch, "all items must share one alphabet");

    DistanceMatrix m;
    m.labels = labels;
    m.values.assign(n * n, 0.0);
    m.clamp_flags.assign(n * n, 0);
    m.input_lengths.resize(n);
    for (std::size_t i = 0; i < n; ++i) m.input_lengths[i] = items[i].size();
    m.metric_id = spec.metric_id();
    m.estimator_id = spec.estimator.id();

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n + 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) pairs.emplace_back(i, j);

    std::exception_ptr first_error = nullptr;
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t at = cursor.fetch_add(1);
            if (at >= pairs.size()) return;
            const auto [i, j] = pairs[at];
            try {
                DistanceValue d = pairwise_distance(items[i], items[j], spec);
                if (d.value < 0.0) {
                    d.value = 0.0;
                    d.clamped = true;
                }
                m.values[i * n + j] = d.value;
                m.values[j * n + i] = d.value;
                const std::uint8_t flag = d.clamped ? 1 : 0;
                m.clamp_flags[i * n + j] = flag;
                m.clamp_flags[j * n + i] = flag;
            } catch (...) {
                if (!failed.exchange(true)) first_error = std::current_exception();
                return;
            }
        }
    };

    const unsigned workers = std::max(1u, jobs);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            if (m.clamp_flags[i * n + j]) ++m.clamp_count;
    return m;
}

} // namespace infodist
