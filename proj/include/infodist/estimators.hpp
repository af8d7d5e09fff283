#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <unistd.h>

#include "infodist/alphabet.hpp"
#include "infodist/errors.hpp"

namespace infodist {

// ---------------------------------------------------------------------------
// LZ78 incremental parsing
// ---------------------------------------------------------------------------

/// Phrase decomposition of an input: (start, length) pairs tiling it exactly.
struct PhraseParse {
    std::vector<std::pair<std::size_t, std::size_t>> phrases;
    std::size_t phrase_count = 0;
};

namespace detail {

/// Incremental parse: each phrase is the shortest prefix of the remaining
/// input not yet in the dictionary; a trailing partial phrase may duplicate
/// an entry. Trie edges live in one map keyed by node * |A| + symbol.
inline PhraseParse lz78_parse_core(std::span<const std::uint32_t> z, std::uint64_t alphabet_size) {
    PhraseParse out;
    std::unordered_map<std::uint64_t, std::uint32_t> edges;
    edges.reserve(64);
    std::uint32_t next_node = 1;
    std::uint32_t node = 0;
    std::size_t phrase_start = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const std::uint64_t key = static_cast<std::uint64_t>(node) * alphabet_size + z[i];
        auto it = edges.find(key);
        if (it != edges.end()) {
            node = it->second;
            continue;
        }
        edges.emplace(key, next_node++);
        out.phrases.emplace_back(phrase_start, i - phrase_start + 1);
        phrase_start = i + 1;
        node = 0;
    }
    if (phrase_start < z.size())
        out.phrases.emplace_back(phrase_start, z.size() - phrase_start);
    out.phrase_count = out.phrases.size();
    return out;
}

inline double lz78_rate_core(std::span<const std::uint32_t> z, std::uint64_t alphabet_size) {
    if (z.size() < 2) throw Error(errc::input_too_short, "lz78 entropy needs length >= 2");
    const auto c = static_cast<double>(lz78_parse_core(z, alphabet_size).phrase_count);
    return c * std::log2(c) / static_cast<double>(z.size());
}

} // namespace detail

inline PhraseParse lz78_parse(const SymbolString& z) {
    return detail::lz78_parse_core(z.data(), z.alphabet()->size());
}

/// Phrase-count entropy estimate c * log2(c) / n, bits per symbol.
inline double lz78_entropy(const SymbolString& z) {
    return detail::lz78_rate_core(z.data(), z.alphabet()->size());
}

// ---------------------------------------------------------------------------
// Krichevsky-Trofimov context coding
// ---------------------------------------------------------------------------

/// Codelength of one input under one estimator.
struct CodelengthReport {
    double total_bits = 0.0;
    std::size_t input_length = 0;
    double rate = 0.0;
    std::string estimator_id;
};

namespace detail {

/// Rolling order-k context over a sequence. Positions t < k form their own
/// shorter context classes, so no boundary symbols are invented.
class ContextTracker {
  public:
    ContextTracker(std::uint64_t alphabet_size, unsigned order)
        : a_(alphabet_size), k_(order) {
        offsets_.resize(k_ + 1);
        offsets_[0] = 0;
        std::uint64_t power = 1;
        for (unsigned len = 1; len <= k_; ++len) {
            offsets_[len] = offsets_[len - 1] + power;
            if (power > (std::uint64_t(1) << 62) / a_)
                throw Error(errc::alphabet_too_large, "context space exceeds 2^62");
            power *= a_;
        }
        full_states_ = power;
        if (offsets_[k_] > (std::uint64_t(1) << 62) - full_states_)
            throw Error(errc::alphabet_too_large, "context space exceeds 2^62");
    }

    std::uint64_t id() const noexcept { return offsets_[len_] + value_; }
    std::uint64_t num_contexts() const noexcept { return offsets_[k_] + full_states_; }

    void push(std::uint32_t sym) noexcept {
        if (k_ == 0) return;
        if (len_ < k_) {
            value_ = value_ * a_ + sym;
            ++len_;
        } else {
            value_ = (value_ * a_ + sym) % full_states_;
        }
    }

    void reset() noexcept {
        value_ = 0;
        len_ = 0;
    }

  private:
    std::uint64_t a_;
    unsigned k_;
    std::vector<std::uint64_t> offsets_;
    std::uint64_t full_states_ = 1;
    std::uint64_t value_ = 0;
    unsigned len_ = 0;
};

/// Add-half counts per (context, symbol); dense storage when the table is
/// small, one hash map otherwise.
class KtCounts {
  public:
    KtCounts(std::uint64_t alphabet_size, std::uint64_t num_contexts)
        : a_(alphabet_size), contexts_(num_contexts) {
        if (contexts_ > (std::uint64_t(1) << 62) / a_)
            throw Error(errc::alphabet_too_large, "count table exceeds 2^62 cells");
        dense_ = contexts_ * a_ <= (std::uint64_t(1) << 22);
        if (dense_) {
            counts_.assign(contexts_ * a_, 0);
            totals_.assign(contexts_, 0);
        }
    }

    double code_and_update(std::uint64_t ctx, std::uint32_t sym) {
        if (dense_) {
            std::uint32_t& c = counts_[ctx * a_ + sym];
            std::uint64_t& t = totals_[ctx];
            const double bits = bits_for(c, t);
            ++c;
            ++t;
            return bits;
        }
        std::uint64_t& c = sparse_counts_[ctx * a_ + sym];
        std::uint64_t& t = sparse_totals_[ctx];
        const double bits = bits_for(c, t);
        ++c;
        ++t;
        return bits;
    }

    double bits_frozen(std::uint64_t ctx, std::uint32_t sym) const {
        if (dense_) return bits_for(counts_[ctx * a_ + sym], totals_[ctx]);
        const auto c = sparse_counts_.find(ctx * a_ + sym);
        const auto t = sparse_totals_.find(ctx);
        return bits_for(c == sparse_counts_.end() ? 0 : c->second,
                        t == sparse_totals_.end() ? 0 : t->second);
    }

  private:
    double bits_for(std::uint64_t count, std::uint64_t total) const {
        // -log2((count + 1/2) / (total + |A|/2))
        return std::log2(static_cast<double>(total) + static_cast<double>(a_) * 0.5) -
               std::log2(static_cast<double>(count) + 0.5);
    }

    std::uint64_t a_;
    std::uint64_t contexts_;
    bool dense_ = false;
    std::vector<std::uint32_t> counts_;
    std::vector<std::uint64_t> totals_;
    std::unordered_map<std::uint64_t, std::uint64_t> sparse_counts_;
    std::unordered_map<std::uint64_t, std::uint64_t> sparse_totals_;
};

inline double kt_total_bits_core(std::span<const std::uint32_t> z, std::uint64_t alphabet_size,
                                 unsigned order) {
    ContextTracker ctx(alphabet_size, order);
    KtCounts counts(alphabet_size, ctx.num_contexts());
    double total = 0.0;
    for (std::uint32_t sym : z) {
        total += counts.code_and_update(ctx.id(), sym);
        ctx.push(sym);
    }
    return total;
}

} // namespace detail

/// Sequential KT codelength with order-k contexts.
inline CodelengthReport kt_codelength(const SymbolString& z, unsigned order) {
    CodelengthReport r;
    r.total_bits = detail::kt_total_bits_core(z.data(), z.alphabet()->size(), order);
    r.input_length = z.size();
    r.rate = z.empty() ? 0.0 : r.total_bits / static_cast<double>(z.size());
    r.estimator_id = "kt(k=" + std::to_string(order) + ")";
    return r;
}

inline double kt_entropy(const SymbolString& z, unsigned order) {
    if (z.empty()) throw Error(errc::input_too_short, "kt entropy needs length >= 1");
    return kt_codelength(z, order).rate;
}

// ---------------------------------------------------------------------------
// External compressor adapter
// ---------------------------------------------------------------------------

/// Shell command template with {in} and {out} placeholders; the compressed
/// size of {out} is the codelength.
struct ExternalCompressor {
    std::string command_template;
};

namespace detail {

inline std::string substitute(std::string templ, const std::string& key,
                              const std::string& value) {
    std::size_t pos = 0;
    while ((pos = templ.find(key, pos)) != std::string::npos) {
        templ.replace(pos, key.size(), value);
        pos += value.size();
    }
    return templ;
}

inline std::filesystem::path unique_temp_path(const char* suffix) {
    static std::atomic<std::uint64_t> counter{0};
    const auto id = counter.fetch_add(1);
    return std::filesystem::temp_directory_path() /
           ("infodist-" + std::to_string(::getpid()) + "-" + std::to_string(id) + suffix);
}

/// Serializes symbols (1 byte) or pair indices (1 or 2 bytes LE), runs the
/// adapter, returns 8 * compressed bytes / length.
inline double external_rate_core(std::span<const std::uint32_t> data, unsigned bytes_per_symbol,
                                 const ExternalCompressor& adapter) {
    if (data.empty()) throw Error(errc::input_too_short, "external entropy needs length >= 1");
    const auto in_path = unique_temp_path(".in");
    const auto out_path = unique_temp_path(".out");
    {
        std::ofstream out(in_path, std::ios::binary);
        if (!out) throw Error(errc::io_failure, "cannot write " + in_path.string());
        for (std::uint32_t v : data) {
            char buf[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
            out.write(buf, bytes_per_symbol);
        }
    }
    const std::string cmd = substitute(
        substitute(adapter.command_template, "{in}", in_path.string()), "{out}",
        out_path.string());
    const int status = std::system(cmd.c_str());
    std::error_code ec;
    const auto size = std::filesystem::file_size(out_path, ec);
    std::filesystem::remove(in_path);
    std::filesystem::remove(out_path);
    if (status != 0)
        throw Error(errc::adapter_failure, "adapter exited with status " + std::to_string(status));
    if (ec) throw Error(errc::adapter_failure, "adapter produced no output file");
    return 8.0 * static_cast<double>(size) / static_cast<double>(data.size());
}

} // namespace detail

inline double external_entropy(const SymbolString& z, const ExternalCompressor& adapter) {
    if (z.alphabet()->size() > 256)
        throw Error(errc::alphabet_too_large, "1-byte serialization needs |A| <= 256");
    return detail::external_rate_core(z.data(), 1, adapter);
}

inline double external_entropy(const SuperString& s, const ExternalCompressor& adapter) {
    const std::uint64_t a2 =
        static_cast<std::uint64_t>(s.base_alphabet()->size()) * s.base_alphabet()->size();
    if (a2 > 65536)
        throw Error(errc::alphabet_too_large, "supersymbol serialization needs |A|^2 <= 65536");
    return detail::external_rate_core(s.data(), a2 <= 256 ? 1 : 2, adapter);
}

// ---------------------------------------------------------------------------
// Estimator selection and the joint / conditional estimators
// ---------------------------------------------------------------------------

struct EstimatorSpec {
    enum class Kind { lz78, kt, external };
    Kind kind = Kind::kt;
    unsigned order = 0;
    std::optional<ExternalCompressor> adapter;

    static EstimatorSpec lz78() { return {Kind::lz78, 0, std::nullopt}; }
    static EstimatorSpec kt(unsigned order) { return {Kind::kt, order, std::nullopt}; }
    static EstimatorSpec external(ExternalCompressor c) {
        return {Kind::external, 0, std::move(c)};
    }

    std::string id() const {
        switch (kind) {
            case Kind::lz78: return "lz78";
            case Kind::kt: return "kt(k=" + std::to_string(order) + ")";
            case Kind::external: return "external";
        }
        return "?";
    }
};

namespace detail {

inline double entropy_core(std::span<const std::uint32_t> data, std::uint64_t alphabet_size,
                           unsigned bytes_per_symbol, const EstimatorSpec& spec) {
    switch (spec.kind) {
        case EstimatorSpec::Kind::lz78: return lz78_rate_core(data, alphabet_size);
        case EstimatorSpec::Kind::kt:
            if (data.empty()) throw Error(errc::input_too_short, "kt entropy needs length >= 1");
            return kt_total_bits_core(data, alphabet_size, spec.order) /
                   static_cast<double>(data.size());
        case EstimatorSpec::Kind::external:
            if (!spec.adapter)
                throw Error(errc::adapter_failure, "external estimator has no adapter");
            if (bytes_per_symbol == 1 && alphabet_size > 256)
                throw Error(errc::alphabet_too_large, "1-byte serialization needs |A| <= 256");
            return external_rate_core(data, bytes_per_symbol, spec.adapter.value());
    }
    throw Error(errc::usage, "unknown estimator");
}

inline double total_bits_core(std::span<const std::uint32_t> data, std::uint64_t alphabet_size,
                              unsigned bytes_per_symbol, const EstimatorSpec& spec) {
    switch (spec.kind) {
        case EstimatorSpec::Kind::lz78: {
            const auto c = static_cast<double>(lz78_parse_core(data, alphabet_size).phrase_count);
            return c > 0.0 ? c * std::log2(c) : 0.0;
        }
        case EstimatorSpec::Kind::kt:
            return kt_total_bits_core(data, alphabet_size, spec.order);
        case EstimatorSpec::Kind::external:
            return entropy_core(data, alphabet_size, bytes_per_symbol, spec) *
                   static_cast<double>(data.size());
    }
    throw Error(errc::usage, "unknown estimator");
}

} // namespace detail

/// Entropy-rate estimate of one string under the chosen estimator.
inline double entropy_estimate(const SymbolString& z, const EstimatorSpec& spec) {
    return detail::entropy_core(z.data(), z.alphabet()->size(), 1, spec);
}

/// Joint entropy-rate estimate: pair into supersymbols, then compress the
/// supersymbol string over A x A. Bits per supersymbol.
inline double joint_entropy(const SymbolString& x, const SymbolString& y,
                            const EstimatorSpec& spec) {
    const SuperString s = pair_supersymbols(x, y, PairPolicy::truncate_to_min);
    const std::uint64_t a2 =
        static_cast<std::uint64_t>(s.base_alphabet()->size()) * s.base_alphabet()->size();
    if (spec.kind == EstimatorSpec::Kind::external && a2 > 65536)
        throw Error(errc::alphabet_too_large, "supersymbol serialization needs |A|^2 <= 65536");
    return detail::entropy_core(s.data(), a2, a2 <= 256 ? 1 : 2, spec);
}

/// Side-information codelength: x_t is KT-coded in the context (y_t, last k
/// symbols of x). An actual codelength, so never negative.
inline double conditional_entropy_direct(const SymbolString& x, const SymbolString& y,
                                         unsigned order) {
    if (!same_alphabet(x.alphabet(), y.alphabet()))
        throw Error(errc::alphabet_mismatch, "conditional coding requires a shared alphabet");
    const std::size_t n = std::min(x.size(), y.size());
    if (n == 0) throw Error(errc::input_too_short, "conditional entropy needs length >= 1");
    const std::uint64_t a = x.alphabet()->size();
    detail::ContextTracker hist(a, order);
    if (hist.num_contexts() > ((std::uint64_t(1) << 62) / a))
        throw Error(errc::alphabet_too_large, "side-information context space exceeds 2^62");
    detail::KtCounts counts(a, hist.num_contexts() * a);
    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const std::uint64_t ctx = static_cast<std::uint64_t>(y[t]) * hist.num_contexts() + hist.id();
        total += counts.code_and_update(ctx, x[t]);
        hist.push(x[t]);
    }
    return total / static_cast<double>(n);
}

/// Chain-rule estimate H(X,Y) - H(Y). Deliberately unclamped: short or
/// noisy inputs can drive it negative, and that has to stay observable.
inline double conditional_entropy_indirect(const SymbolString& x, const SymbolString& y,
                                           const EstimatorSpec& spec) {
    return joint_entropy(x, y, spec) - entropy_estimate(y, spec);
}

} // namespace infodist
