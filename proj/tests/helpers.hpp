#pragma once

// Shared fixtures for the test suite: tiny alphabets, random tree generation
// with known topology, and Robinson-Foulds comparison against that oracle.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "infodist/distances.hpp"
#include "infodist/phylo.hpp"

namespace testutil {

/// True when fn() throws an infodist::Error carrying exactly `want`.
template <typename Fn>
bool throws_code(infodist::errc want, Fn&& fn) {
    try {
        std::forward<Fn>(fn)();
    } catch (const infodist::Error& e) {
        return e.code() == want;
    } catch (...) {
        return false;
    }
    return false;
}

inline infodist::AlphabetPtr bin() {
    static const auto a = infodist::make_alphabet("01");
    return a;
}

inline infodist::AlphabetPtr quad() {
    static const auto a = infodist::make_alphabet("0123");
    return a;
}

inline infodist::SymbolString str(const infodist::AlphabetPtr& a, std::string_view text) {
    return infodist::encode_string(text, a);
}

inline infodist::DistanceMatrix matrix_from(std::vector<std::string> labels,
                                            std::vector<double> values) {
    infodist::DistanceMatrix m;
    m.labels = std::move(labels);
    m.values = std::move(values);
    m.clamp_flags.assign(m.values.size(), 0);
    m.input_lengths.assign(m.labels.size(), 0);
    m.metric_id = "fixture";
    m.estimator_id = "fixture";
    return m;
}

// --- random trees with known topology --------------------------------------

/// Unrooted binary tree grown by repeated edge subdivision. Leaves are
/// labeled "L0".."L<n-1>"; branch lengths are positive, so leaf-to-leaf path
/// sums form an additive matrix that neighbor joining must invert.
struct RandomTree {
    // adjacency: node -> (neighbor, edge length)
    std::vector<std::vector<std::pair<std::size_t, double>>> adj;
    std::vector<std::size_t> leaves;  // node id of Li
};

inline RandomTree random_additive_tree(std::size_t n_leaves, std::mt19937_64& rng,
                                       double min_len = 0.1, double max_len = 2.0) {
    RandomTree t;
    auto rnd_len = [&] {
        return min_len + (max_len - min_len) *
                             (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };
    auto add_node = [&] {
        t.adj.emplace_back();
        return t.adj.size() - 1;
    };
    auto link = [&](std::size_t a, std::size_t b, double len) {
        t.adj[a].emplace_back(b, len);
        t.adj[b].emplace_back(a, len);
    };
    auto unlink = [&](std::size_t a, std::size_t b) {
        auto& va = t.adj[a];
        va.erase(std::find_if(va.begin(), va.end(),
                              [&](const auto& e) { return e.first == b; }));
        auto& vb = t.adj[b];
        vb.erase(std::find_if(vb.begin(), vb.end(),
                              [&](const auto& e) { return e.first == a; }));
    };

    const std::size_t l0 = add_node(), l1 = add_node();
    t.leaves = {l0, l1};
    link(l0, l1, rnd_len());
    std::vector<std::pair<std::size_t, std::size_t>> edges{{l0, l1}};
    while (t.leaves.size() < n_leaves) {
        const auto pick = static_cast<std::size_t>(rng() % edges.size());
        const auto [a, b] = edges[pick];
        const std::size_t mid = add_node();
        const std::size_t leaf = add_node();
        unlink(a, b);
        link(a, mid, rnd_len());
        link(mid, b, rnd_len());
        link(mid, leaf, rnd_len());
        edges[pick] = {a, mid};
        edges.emplace_back(mid, b);
        edges.emplace_back(mid, leaf);
        t.leaves.push_back(leaf);
    }
    return t;
}

inline std::vector<double> path_distances(const RandomTree& t) {
    const std::size_t n = t.leaves.size();
    std::vector<double> m(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        // BFS from leaf i accumulating path lengths.
        std::vector<double> dist(t.adj.size(), -1.0);
        std::vector<std::size_t> queue{t.leaves[i]};
        dist[t.leaves[i]] = 0.0;
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const std::size_t v = queue[q];
            for (const auto& [w, len] : t.adj[v])
                if (dist[w] < 0.0) {
                    dist[w] = dist[v] + len;
                    queue.push_back(w);
                }
        }
        for (std::size_t j = 0; j < n; ++j) m[i * n + j] = dist[t.leaves[j]];
    }
    return m;
}

/// Nontrivial bipartitions of the leaf set {0..n-1} induced by internal
/// edges, as bitmasks normalized to exclude leaf 0's side.
inline std::set<std::uint64_t> generator_bipartitions(const RandomTree& t) {
    const std::size_t n = t.leaves.size();
    std::map<std::size_t, std::size_t> leaf_index;
    for (std::size_t i = 0; i < n; ++i) leaf_index[t.leaves[i]] = i;
    std::set<std::uint64_t> out;
    for (std::size_t a = 0; a < t.adj.size(); ++a) {
        for (const auto& [b, len] : t.adj[a]) {
            if (b < a) continue;
            // Leaves on a's side of the edge (a, b).
            std::uint64_t mask = 0;
            std::vector<std::size_t> queue{a};
            std::vector<char> seen(t.adj.size(), 0);
            seen[a] = 1;
            seen[b] = 1;
            for (std::size_t q = 0; q < queue.size(); ++q) {
                const std::size_t v = queue[q];
                if (auto it = leaf_index.find(v); it != leaf_index.end())
                    mask |= std::uint64_t(1) << it->second;
                for (const auto& [w, l2] : t.adj[v])
                    if (!seen[w]) {
                        seen[w] = 1;
                        queue.push_back(w);
                    }
            }
            const std::uint64_t full = (n == 64) ? ~std::uint64_t(0)
                                                 : ((std::uint64_t(1) << n) - 1);
            if (mask & 1) mask = full & ~mask;
            const auto bits = static_cast<std::size_t>(__builtin_popcountll(mask));
            if (bits >= 2 && bits <= n - 2) out.insert(mask);
        }
    }
    return out;
}

/// Same bipartition encoding for a constructed PhyloTree whose leaf labels
/// are "L<i>".
inline std::set<std::uint64_t> tree_bipartitions(const infodist::PhyloTree& t) {
    const std::size_t n = t.leaf_count;
    std::vector<std::uint64_t> below(t.nodes.size(), 0);
    // Children precede parents is not guaranteed after rerooting, so walk
    // depth-first explicitly.
    std::set<std::uint64_t> out;
    const std::uint64_t full = (n == 64) ? ~std::uint64_t(0) : ((std::uint64_t(1) << n) - 1);
    struct Frame {
        std::size_t node;
        std::size_t child;
    };
    std::vector<Frame> stack{{t.root, 0}};
    while (!stack.empty()) {
        auto& [v, c] = stack.back();
        if (t.nodes[v].children.empty()) {
            below[v] = std::uint64_t(1) << std::stoul(t.nodes[v].label.substr(1));
            stack.pop_back();
            continue;
        }
        if (c < t.nodes[v].children.size()) {
            stack.push_back({t.nodes[v].children[c++], 0});
            continue;
        }
        for (const std::size_t ch : t.nodes[v].children) below[v] |= below[ch];
        stack.pop_back();
    }
    for (std::size_t v = 0; v < t.nodes.size(); ++v) {
        if (t.nodes[v].children.empty() || t.nodes[v].parent < 0) continue;
        std::uint64_t mask = below[v];
        if (mask & 1) mask = full & ~mask;
        const auto bits = static_cast<std::size_t>(__builtin_popcountll(mask));
        if (bits >= 2 && bits <= n - 2) out.insert(mask);
    }
    return out;
}

inline std::size_t rf_distance(const std::set<std::uint64_t>& a,
                               const std::set<std::uint64_t>& b) {
    std::size_t sym = 0;
    for (const auto m : a)
        if (!b.count(m)) ++sym;
    for (const auto m : b)
        if (!a.count(m)) ++sym;
    return sym;
}

// --- random ultrametric matrices --------------------------------------------

/// Rooted random binary tree with strictly decreasing internal heights;
/// d(i,j) = 2 * height(lca) is ultrametric by construction.
inline std::vector<double> random_ultrametric(std::size_t n, std::mt19937_64& rng) {
    struct Cluster {
        std::vector<std::size_t> members;
        double height;
    };
    std::vector<Cluster> live;
    for (std::size_t i = 0; i < n; ++i) live.push_back({{i}, 0.0});
    std::vector<double> m(n * n, 0.0);
    double height = 0.0;
    while (live.size() > 1) {
        height += 0.1 + (static_cast<double>(rng() >> 11) * 0x1.0p-53);
        const auto i = static_cast<std::size_t>(rng() % live.size());
        auto j = static_cast<std::size_t>(rng() % (live.size() - 1));
        if (j >= i) ++j;
        for (const auto a : live[i].members)
            for (const auto b : live[j].members) {
                m[a * n + b] = 2.0 * height;
                m[b * n + a] = 2.0 * height;
            }
        auto merged = live[i];
        merged.members.insert(merged.members.end(), live[j].members.begin(),
                              live[j].members.end());
        merged.height = height;
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(std::max(i, j)));
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(std::min(i, j)));
        live.push_back(std::move(merged));
    }
    return m;
}

/// Root-to-leaf path lengths of a rooted tree, for ultrametric checks.
inline std::vector<double> root_leaf_depths(const infodist::PhyloTree& t) {
    std::vector<double> depth(t.nodes.size(), 0.0);
    std::vector<double> out;
    std::vector<std::size_t> stack{t.root};
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (const std::size_t c : t.nodes[v].children) {
            depth[c] = depth[v] + t.nodes[c].branch_length;
            stack.push_back(c);
        }
        if (t.nodes[v].children.empty()) out.push_back(depth[v]);
    }
    return out;
}

} // namespace testutil
