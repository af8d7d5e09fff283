#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "infodist/errors.hpp"

namespace infodist {

/// Finite ordered alphabet. Symbol index = position in the token list.
class Alphabet {
  public:
    explicit Alphabet(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
        if (tokens_.size() < 2)
            throw Error(errc::too_small, "alphabet needs at least 2 symbols, got " +
                                             std::to_string(tokens_.size()));
        for (std::uint32_t i = 0; i < tokens_.size(); ++i) {
            auto [it, inserted] = index_.emplace(tokens_[i], i);
            if (!inserted)
                throw Error(errc::duplicate_symbol, "token '" + tokens_[i] + "' appears twice");
        }
    }

    std::size_t size() const noexcept { return tokens_.size(); }
    const std::string& token(std::uint32_t index) const { return tokens_.at(index); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    /// Index of a token, or -1 when absent.
    std::int64_t find(std::string_view tok) const {
        auto it = index_.find(std::string(tok));
        return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
    }

    bool operator==(const Alphabet& other) const noexcept { return tokens_ == other.tokens_; }

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

using AlphabetPtr = std::shared_ptr<const Alphabet>;

inline AlphabetPtr make_alphabet(std::vector<std::string> tokens) {
    return std::make_shared<const Alphabet>(std::move(tokens));
}

/// Alphabet from single-character tokens, e.g. "ACGT".
inline AlphabetPtr make_alphabet(std::string_view chars) {
    std::vector<std::string> tokens;
    tokens.reserve(chars.size());
    for (char c : chars) tokens.emplace_back(1, c);
    return make_alphabet(std::move(tokens));
}

/// Compatibility is by value: two alphabets pair if their token lists match.
inline bool same_alphabet(const AlphabetPtr& a, const AlphabetPtr& b) {
    return a == b || (a && b && *a == *b);
}

/// Sequence of symbol indices over an alphabet.
class SymbolString {
  public:
    SymbolString(AlphabetPtr alphabet, std::vector<std::uint32_t> data)
        : alphabet_(std::move(alphabet)), data_(std::move(data)) {
        for (std::uint32_t v : data_)
            if (v >= alphabet_->size())
                throw Error(errc::unknown_symbol,
                            "index " + std::to_string(v) + " outside alphabet of size " +
                                std::to_string(alphabet_->size()));
    }

    const AlphabetPtr& alphabet() const noexcept { return alphabet_; }
    std::span<const std::uint32_t> data() const noexcept { return data_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    std::uint32_t operator[](std::size_t i) const { return data_[i]; }

    /// Token view of the data, concatenated (readable only for 1-char tokens).
    std::string to_text() const {
        std::string out;
        for (std::uint32_t v : data_) out += alphabet_->token(v);
        return out;
    }

  private:
    AlphabetPtr alphabet_;
    std::vector<std::uint32_t> data_;
};

inline SymbolString encode_string(std::span<const std::string> raw, AlphabetPtr alphabet) {
    std::vector<std::uint32_t> data;
    data.reserve(raw.size());
    for (std::size_t pos = 0; pos < raw.size(); ++pos) {
        std::int64_t idx = alphabet->find(raw[pos]);
        if (idx < 0)
            throw Error(errc::unknown_symbol,
                        "token '" + raw[pos] + "' at position " + std::to_string(pos));
        data.push_back(static_cast<std::uint32_t>(idx));
    }
    return SymbolString(std::move(alphabet), std::move(data));
}

/// Encode a character string, one token per byte.
inline SymbolString encode_string(std::string_view raw, AlphabetPtr alphabet) {
    std::vector<std::uint32_t> data;
    data.reserve(raw.size());
    for (std::size_t pos = 0; pos < raw.size(); ++pos) {
        std::int64_t idx = alphabet->find(std::string_view(&raw[pos], 1));
        if (idx < 0)
            throw Error(errc::unknown_symbol, "token '" + std::string(1, raw[pos]) +
                                                  "' at position " + std::to_string(pos));
        data.push_back(static_cast<std::uint32_t>(idx));
    }
    return SymbolString(std::move(alphabet), std::move(data));
}

/// Sequence of pair indices over the product alphabet A x A.
/// The pair (i, j) is stored as i * |A| + j; this layout is fixed everywhere.
class SuperString {
  public:
    SuperString(AlphabetPtr base_alphabet, std::vector<std::uint32_t> data,
                std::size_t truncated = 0)
        : base_(std::move(base_alphabet)), data_(std::move(data)), truncated_(truncated) {
        const std::uint64_t limit =
            static_cast<std::uint64_t>(base_->size()) * base_->size();
        for (std::uint32_t v : data_)
            if (v >= limit)
                throw Error(errc::unknown_symbol, "pair index " + std::to_string(v) +
                                                      " outside product alphabet");
    }

    const AlphabetPtr& base_alphabet() const noexcept { return base_; }
    std::span<const std::uint32_t> data() const noexcept { return data_; }
    std::size_t size() const noexcept { return data_.size(); }
    /// Symbols dropped from the longer input under the truncate-to-min policy.
    std::size_t truncated() const noexcept { return truncated_; }

    std::pair<std::uint32_t, std::uint32_t> decode(std::size_t i) const {
        const auto a = static_cast<std::uint32_t>(base_->size());
        return {data_[i] / a, data_[i] % a};
    }

  private:
    AlphabetPtr base_;
    std::vector<std::uint32_t> data_;
    std::size_t truncated_;
};

enum class PairPolicy { truncate_to_min, strict };

inline SuperString pair_supersymbols(const SymbolString& x, const SymbolString& y,
                                     PairPolicy policy = PairPolicy::truncate_to_min) {
    if (!same_alphabet(x.alphabet(), y.alphabet()))
        throw Error(errc::alphabet_mismatch, "pairing requires a shared alphabet");
    if (policy == PairPolicy::strict && x.size() != y.size())
        throw Error(errc::length_mismatch, "strict pairing: lengths " +
                                               std::to_string(x.size()) + " vs " +
                                               std::to_string(y.size()));
    const std::size_t n = std::min(x.size(), y.size());
    const auto a = static_cast<std::uint32_t>(x.alphabet()->size());
    std::vector<std::uint32_t> data(n);
    for (std::size_t t = 0; t < n; ++t) data[t] = x[t] * a + y[t];
    const std::size_t truncated = std::max(x.size(), y.size()) - n;
    return SuperString(x.alphabet(), std::move(data), truncated);
}

inline SymbolString project_first(const SuperString& s) {
    const auto a = static_cast<std::uint32_t>(s.base_alphabet()->size());
    std::vector<std::uint32_t> data(s.size());
    for (std::size_t t = 0; t < s.size(); ++t) data[t] = s.data()[t] / a;
    return SymbolString(s.base_alphabet(), std::move(data));
}

inline SymbolString project_second(const SuperString& s) {
    const auto a = static_cast<std::uint32_t>(s.base_alphabet()->size());
    std::vector<std::uint32_t> data(s.size());
    for (std::size_t t = 0; t < s.size(); ++t) data[t] = s.data()[t] % a;
    return SymbolString(s.base_alphabet(), std::move(data));
}

inline SymbolString concat(const SymbolString& x, const SymbolString& y) {
    if (!same_alphabet(x.alphabet(), y.alphabet()))
        throw Error(errc::alphabet_mismatch, "concat requires a shared alphabet");
    std::vector<std::uint32_t> data;
    data.reserve(x.size() + y.size());
    data.insert(data.end(), x.data().begin(), x.data().end());
    data.insert(data.end(), y.data().begin(), y.data().end());
    return SymbolString(x.alphabet(), std::move(data));
}

/// Product alphabet A x A with tokens "tx|ty", ordered to match the pair
/// index layout i * |A| + j.
inline AlphabetPtr make_product_alphabet(const AlphabetPtr& base) {
    std::vector<std::string> tokens;
    tokens.reserve(base->size() * base->size());
    for (const auto& tx : base->tokens())
        for (const auto& ty : base->tokens()) tokens.push_back(tx + "|" + ty);
    return make_alphabet(std::move(tokens));
}

} // namespace infodist
