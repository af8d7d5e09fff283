#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace infodist::detail {

/// Suffix automaton over one reference string. Built in O(n); recognizes
/// exactly the substrings of the reference, which makes greedy
/// longest-match walks amortized O(1) per consumed symbol.
class SuffixAutomaton {
  public:
    explicit SuffixAutomaton(std::span<const std::uint32_t> text) {
        states_.reserve(2 * text.size() + 2);
        states_.push_back({0, -1, {}});
        std::int64_t last = 0;
        for (std::uint32_t c : text) {
            const std::int64_t cur = static_cast<std::int64_t>(states_.size());
            states_.push_back({states_[last].len + 1, -1, {}});
            std::int64_t p = last;
            while (p >= 0 && !states_[p].next.contains(c)) {
                states_[p].next.emplace(c, cur);
                p = states_[p].link;
            }
            if (p < 0) {
                states_[cur].link = 0;
            } else {
                const std::int64_t q = states_[p].next.at(c);
                if (states_[p].len + 1 == states_[q].len) {
                    states_[cur].link = q;
                } else {
                    const std::int64_t clone = static_cast<std::int64_t>(states_.size());
                    states_.push_back({states_[p].len + 1, states_[q].link, states_[q].next});
                    while (p >= 0) {
                        auto it = states_[p].next.find(c);
                        if (it == states_[p].next.end() || it->second != q) break;
                        it->second = clone;
                        p = states_[p].link;
                    }
                    states_[q].link = clone;
                    states_[cur].link = clone;
                }
            }
            last = cur;
        }
    }

    /// Longest prefix of `z` starting at `pos` that occurs as a substring of
    /// the reference. Zero when z[pos] never occurs.
    std::size_t longest_match(std::span<const std::uint32_t> z, std::size_t pos) const {
        std::int64_t node = 0;
        std::size_t len = 0;
        while (pos + len < z.size()) {
            const auto it = states_[node].next.find(z[pos + len]);
            if (it == states_[node].next.end()) break;
            node = it->second;
            ++len;
        }
        return len;
    }

  private:
    struct State {
        std::int64_t len;
        std::int64_t link;
        std::unordered_map<std::uint32_t, std::int64_t> next;
    };
    std::vector<State> states_;
};

} // namespace infodist::detail
