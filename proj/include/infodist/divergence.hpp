#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "infodist/alphabet.hpp"
#include "infodist/errors.hpp"
#include "infodist/estimators.hpp"
#include "infodist/suffix_automaton.hpp"

namespace infodist {

// ---------------------------------------------------------------------------
// Cross-parsing
// ---------------------------------------------------------------------------

/// Decomposition of z into phrases, each the longest prefix of the remaining
/// input that occurs somewhere in a fixed reference string.
struct CrossParse {
    std::vector<std::pair<std::size_t, std::size_t>> phrases;
    std::size_t phrase_count = 0;
};

namespace detail {

inline CrossParse cross_parse_core(std::span<const std::uint32_t> z,
                                   std::span<const std::uint32_t> x) {
    CrossParse out;
    const SuffixAutomaton sa(x);
    std::size_t pos = 0;
    while (pos < z.size()) {
        // A symbol absent from the reference still forms a phrase of its own.
        const std::size_t len = std::max<std::size_t>(sa.longest_match(z, pos), 1);
        out.phrases.emplace_back(pos, len);
        pos += len;
    }
    out.phrase_count = out.phrases.size();
    return out;
}

} // namespace detail

inline CrossParse cross_parse(const SymbolString& z, const SymbolString& x) {
    if (!same_alphabet(z.alphabet(), x.alphabet()))
        throw Error(errc::alphabet_mismatch, "cross-parsing requires a shared alphabet");
    if (x.empty()) throw Error(errc::empty_reference, "cross-parsing needs a nonempty reference");
    return detail::cross_parse_core(z.data(), x.data());
}

// ---------------------------------------------------------------------------
// Divergence-rate estimators
// ---------------------------------------------------------------------------

/// Divergence estimate with the pre-clamp value kept visible.
struct DivergenceEstimate {
    double value = 0.0;
    double raw = 0.0;
    bool clamped = false;
    std::string method;
};

/// Cross-parsing estimate of D(Z || X):
/// [ c(z|x) * log2 |z|  -  c(z) * log2 c(z) ] / |z|.
/// The raw value can be negative (e.g. z == x); with `clamp` set, negative
/// results are reported as 0 and flagged.
inline DivergenceEstimate zm_divergence(const SymbolString& z, const SymbolString& x,
                                        bool clamp = true) {
    if (z.size() < 2) throw Error(errc::input_too_short, "divergence needs |z| >= 2");
    const CrossParse cross = cross_parse(z, x);
    const auto self = static_cast<double>(lz78_parse(z).phrase_count);
    const auto n = static_cast<double>(z.size());
    DivergenceEstimate d;
    d.raw = (static_cast<double>(cross.phrase_count) * std::log2(n) - self * std::log2(self)) / n;
    d.clamped = clamp && d.raw < 0.0;
    d.value = d.clamped ? 0.0 : d.raw;
    d.method = "zm";
    return d;
}

/// Frozen-model estimate of D(Z || X): train an order-k KT model on x, freeze
/// it, code z against it (contexts drawn from z's own history), and subtract
/// z's own KT rate. The frozen rate approximates H(Z) + D(Z||X). Returned
/// unclamped; finite-n noise below zero is information, not an error.
inline double cross_code_divergence(const SymbolString& z, const SymbolString& x,
                                    unsigned order) {
    if (!same_alphabet(z.alphabet(), x.alphabet()))
        throw Error(errc::alphabet_mismatch, "cross-coding requires a shared alphabet");
    if (x.empty()) throw Error(errc::empty_reference, "cross-coding needs a nonempty reference");
    if (z.empty()) throw Error(errc::input_too_short, "cross-coding needs a nonempty input");
    const std::uint64_t a = z.alphabet()->size();

    detail::ContextTracker train_ctx(a, order);
    detail::KtCounts counts(a, train_ctx.num_contexts());
    for (std::uint32_t sym : x.data()) {
        counts.code_and_update(train_ctx.id(), sym);
        train_ctx.push(sym);
    }

    detail::ContextTracker code_ctx(a, order);
    double frozen_bits = 0.0;
    for (std::uint32_t sym : z.data()) {
        frozen_bits += counts.bits_frozen(code_ctx.id(), sym);
        code_ctx.push(sym);
    }
    const double frozen_rate = frozen_bits / static_cast<double>(z.size());
    return frozen_rate - kt_entropy(z, order);
}

enum class DivergenceMethod { zm, cross_code };

inline std::string divergence_method_id(DivergenceMethod m) {
    return m == DivergenceMethod::zm ? "zm" : "cross-code";
}

/// Uniform front end over the two directed estimators; `order` feeds the
/// cross-coding method only.
inline DivergenceEstimate divergence_estimate(const SymbolString& z, const SymbolString& x,
                                              DivergenceMethod method, unsigned order,
                                              bool clamp = true) {
    if (method == DivergenceMethod::zm) return zm_divergence(z, x, clamp);
    DivergenceEstimate d;
    d.raw = cross_code_divergence(z, x, order);
    d.clamped = clamp && d.raw < 0.0;
    d.value = d.clamped ? 0.0 : d.raw;
    d.method = "cross-code(k=" + std::to_string(order) + ")";
    return d;
}

/// The divergence method that shares machinery with an estimator family:
/// LZ78 pairs with cross-parsing, KT pairs with frozen-model cross-coding.
inline DivergenceMethod matched_divergence_method(const EstimatorSpec& spec) {
    switch (spec.kind) {
        case EstimatorSpec::Kind::lz78: return DivergenceMethod::zm;
        case EstimatorSpec::Kind::kt: return DivergenceMethod::cross_code;
        case EstimatorSpec::Kind::external:
            throw Error(errc::usage, "divergence estimation supports lz78 and kt only");
    }
    throw Error(errc::usage, "unknown estimator");
}

// ---------------------------------------------------------------------------
// Concatenation conjecture harness
// ---------------------------------------------------------------------------

/// Exact rates supplied by a caller who knows the generating sources.
struct ReferenceRates {
    double entropy_x = 0.0;
    double entropy_y = 0.0;
    double divergence_y_given_x = 0.0;
};

/// Compression rate of x+y compared against H(X) + H(Y) + D(Y||X). The
/// harness measures; it does not assume the approximation holds.
struct ConjectureReport {
    double measured_rate = 0.0;   // total codelength of x+y divided by |x|
    double baseline_rate = 0.0;   // H(X) + H(Y)
    double predicted_rate = 0.0;  // baseline + D(Y||X)
    double excess = 0.0;          // measured_rate - baseline_rate, exactly
    std::string estimator_id;
};

inline ConjectureReport concat_conjecture(const SymbolString& x, const SymbolString& y,
                                          const EstimatorSpec& spec,
                                          std::optional<ReferenceRates> reference = {}) {
    if (!same_alphabet(x.alphabet(), y.alphabet()))
        throw Error(errc::alphabet_mismatch, "conjecture check requires a shared alphabet");
    if (x.size() != y.size())
        throw Error(errc::length_mismatch, "conjecture check requires |x| == |y|");
    if (x.empty()) throw Error(errc::input_too_short, "conjecture check needs nonempty inputs");
    if (spec.kind == EstimatorSpec::Kind::external)
        throw Error(errc::usage, "conjecture check supports lz78 and kt only");

    const SymbolString xy = concat(x, y);
    const std::uint64_t a = x.alphabet()->size();
    ConjectureReport r;
    r.measured_rate =
        detail::total_bits_core(xy.data(), a, 1, spec) / static_cast<double>(x.size());
    if (reference) {
        r.baseline_rate = reference->entropy_x + reference->entropy_y;
        r.predicted_rate = r.baseline_rate + reference->divergence_y_given_x;
    } else {
        r.baseline_rate = entropy_estimate(x, spec) + entropy_estimate(y, spec);
        r.predicted_rate =
            r.baseline_rate +
            divergence_estimate(y, x, matched_divergence_method(spec), spec.order).value;
    }
    r.excess = r.measured_rate - r.baseline_rate;
    r.estimator_id = spec.id();
    return r;
}

} // namespace infodist
