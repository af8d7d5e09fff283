#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "infodist/distances.hpp"
#include "infodist/errors.hpp"

namespace infodist {

// ---------------------------------------------------------------------------
// Trees
// ---------------------------------------------------------------------------

struct PhyloNode {
    std::string label;                  // empty for internal nodes
    std::vector<std::size_t> children;  // indices into PhyloTree::nodes
    std::int64_t parent = -1;
    double branch_length = 0.0;         // edge to parent, clamped at zero
    double raw_branch_length = 0.0;     // pre-clamp value (NJ can go negative)
};

struct PhyloTree {
    std::vector<PhyloNode> nodes;
    std::size_t root = 0;
    std::size_t leaf_count = 0;
    std::string method;

    bool is_leaf(std::size_t i) const { return nodes[i].children.empty(); }
};

namespace detail {

inline void set_branch(PhyloTree& t, std::size_t child, std::size_t parent, double raw) {
    t.nodes[child].parent = static_cast<std::int64_t>(parent);
    t.nodes[child].raw_branch_length = raw;
    t.nodes[child].branch_length = std::max(raw, 0.0);
    t.nodes[parent].children.push_back(child);
}

inline void check_square_symmetric(const DistanceMatrix& m) {
    const std::size_t n = m.size();
    if (m.values.size() != n * n)
        throw Error(errc::invalid_spec, "matrix storage does not match label count");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(m.at(i, j) - m.at(j, i)) > 1e-9)
                throw Error(errc::asymmetric_matrix,
                            "matrix asymmetric at " + m.labels[i] + "/" + m.labels[j]);
}

inline PhyloTree leaves_only(const DistanceMatrix& m, const char* method) {
    PhyloTree t;
    t.method = method;
    t.leaf_count = m.size();
    t.nodes.reserve(2 * m.size());
    for (const auto& label : m.labels) {
        PhyloNode leaf;
        leaf.label = label;
        t.nodes.push_back(std::move(leaf));
    }
    return t;
}

/// Re-hangs an unrooted tree from `new_root`, preserving per-edge lengths
/// (clamped and raw). Children keep a deterministic order: original child
/// edges by creation index, then the edge toward the old parent.
inline void reroot(PhyloTree& t, std::size_t new_root) {
    if (t.root == new_root) return;
    struct Edge {
        std::size_t to;
        double len;
        double raw;
    };
    std::vector<std::vector<Edge>> adj(t.nodes.size());
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        const auto& nd = t.nodes[i];
        if (nd.parent < 0) continue;
        const auto p = static_cast<std::size_t>(nd.parent);
        adj[i].push_back({p, nd.branch_length, nd.raw_branch_length});
        adj[p].push_back({i, nd.branch_length, nd.raw_branch_length});
    }
    for (auto& nd : t.nodes) {
        nd.children.clear();
        nd.parent = -1;
        nd.branch_length = 0.0;
        nd.raw_branch_length = 0.0;
    }
    std::vector<std::pair<std::size_t, std::int64_t>> stack{{new_root, -1}};
    while (!stack.empty()) {
        const auto [v, from] = stack.back();
        stack.pop_back();
        // Reverse push keeps visit order equal to adjacency order.
        for (auto it = adj[v].rbegin(); it != adj[v].rend(); ++it) {
            if (static_cast<std::int64_t>(it->to) == from) continue;
            t.nodes[it->to].parent = static_cast<std::int64_t>(v);
            t.nodes[it->to].branch_length = it->len;
            t.nodes[it->to].raw_branch_length = it->raw;
            stack.emplace_back(it->to, static_cast<std::int64_t>(v));
        }
        for (const auto& e : adj[v]) {
            if (static_cast<std::int64_t>(e.to) == from) continue;
            t.nodes[v].children.push_back(e.to);
        }
    }
    t.root = new_root;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Neighbor joining
// ---------------------------------------------------------------------------

/// Saitou-Nei agglomeration with the usual Q criterion. Ties break toward
/// the first pair in a fixed scan order, so the output is a deterministic
/// function of the matrix. On an additive matrix the true topology is
/// recovered exactly. The root is the trifurcating internal node of the
/// final join (or the final pair join for tiny inputs).
inline PhyloTree neighbor_joining(const DistanceMatrix& m) {
    detail::check_square_symmetric(m);
    const std::size_t n = m.size();
    if (n < 2) throw Error(errc::too_few_items, "tree construction needs >= 2 items");

    PhyloTree t = detail::leaves_only(m, "nj");

    // Working distances indexed by node id; `active` holds live cluster ids.
    std::vector<std::size_t> active(n);
    for (std::size_t i = 0; i < n; ++i) active[i] = i;
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d[i][j] = m.at(i, j);
    auto dist = [&](std::size_t a, std::size_t b) -> double& { return d[a][b]; };
    auto grow = [&] {
        const std::size_t id = t.nodes.size();
        t.nodes.emplace_back();
        for (auto& row : d) row.push_back(0.0);
        d.emplace_back(t.nodes.size(), 0.0);
        return id;
    };

    while (active.size() > 3) {
        const std::size_t r = active.size();
        std::vector<double> rowsum(r, 0.0);
        for (std::size_t a = 0; a < r; ++a)
            for (std::size_t b = 0; b < r; ++b) rowsum[a] += dist(active[a], active[b]);

        double best_q = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 1;
        for (std::size_t a = 0; a < r; ++a)
            for (std::size_t b = a + 1; b < r; ++b) {
                const double q = (static_cast<double>(r) - 2.0) * dist(active[a], active[b]) -
                                 rowsum[a] - rowsum[b];
                if (q < best_q) {
                    best_q = q;
                    bi = a;
                    bj = b;
                }
            }

        const std::size_t i = active[bi], j = active[bj];
        const double dij = dist(i, j);
        const double li =
            0.5 * dij + (rowsum[bi] - rowsum[bj]) / (2.0 * (static_cast<double>(r) - 2.0));
        const std::size_t u = grow();
        detail::set_branch(t, i, u, li);
        detail::set_branch(t, j, u, dij - li);
        for (std::size_t a = 0; a < r; ++a) {
            if (a == bi || a == bj) continue;
            const std::size_t k = active[a];
            const double duk = 0.5 * (dist(i, k) + dist(j, k) - dij);
            dist(u, k) = duk;
            dist(k, u) = duk;
        }
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
        active[bi] = u;
    }

    if (active.size() == 3) {
        const std::size_t a = active[0], b = active[1], c = active[2];
        const double dab = dist(a, b), dac = dist(a, c), dbc = dist(b, c);
        const std::size_t u = grow();
        detail::set_branch(t, a, u, 0.5 * (dab + dac - dbc));
        detail::set_branch(t, b, u, 0.5 * (dab + dbc - dac));
        detail::set_branch(t, c, u, 0.5 * (dac + dbc - dab));
        t.root = u;
    } else {
        // Two clusters left: a single edge, split evenly for serialization.
        const std::size_t a = active[0], b = active[1];
        const std::size_t u = grow();
        detail::set_branch(t, a, u, 0.5 * dist(a, b));
        detail::set_branch(t, b, u, 0.5 * dist(a, b));
        t.root = u;
    }
    // Unrooted tree; serialize from the first internal node ever created so
    // the output is a deterministic function of the matrix alone.
    detail::reroot(t, n);
    return t;
}

// ---------------------------------------------------------------------------
// UPGMA
// ---------------------------------------------------------------------------

/// Average-linkage agglomeration. Heights are ultrametric by construction:
/// every leaf sits at distance height(root) from the root. Ties break toward
/// the first pair in a fixed scan order.
inline PhyloTree upgma(const DistanceMatrix& m) {
    detail::check_square_symmetric(m);
    const std::size_t n = m.size();
    if (n < 2) throw Error(errc::too_few_items, "tree construction needs >= 2 items");

    PhyloTree t = detail::leaves_only(m, "upgma");
    std::vector<std::size_t> active(n);
    for (std::size_t i = 0; i < n; ++i) active[i] = i;
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d[i][j] = m.at(i, j);
    std::vector<double> height(n, 0.0);
    std::vector<std::size_t> csize(n, 1);

    while (active.size() > 1) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 1;
        for (std::size_t a = 0; a < active.size(); ++a)
            for (std::size_t b = a + 1; b < active.size(); ++b)
                if (d[active[a]][active[b]] < best) {
                    best = d[active[a]][active[b]];
                    bi = a;
                    bj = b;
                }
        const std::size_t i = active[bi], j = active[bj];
        const std::size_t u = t.nodes.size();
        t.nodes.emplace_back();
        for (auto& row : d) row.push_back(0.0);
        d.emplace_back(t.nodes.size(), 0.0);
        height.push_back(0.5 * best);
        csize.push_back(csize[i] + csize[j]);
        detail::set_branch(t, i, u, 0.5 * best - height[i]);
        detail::set_branch(t, j, u, 0.5 * best - height[j]);
        for (std::size_t a = 0; a < active.size(); ++a) {
            if (a == bi || a == bj) continue;
            const std::size_t k = active[a];
            const double duk = (static_cast<double>(csize[i]) * d[i][k] +
                                static_cast<double>(csize[j]) * d[j][k]) /
                               static_cast<double>(csize[i] + csize[j]);
            d[u][k] = duk;
            d[k][u] = duk;
        }
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
        active[bi] = u;
    }
    t.root = active[0];
    return t;
}

// ---------------------------------------------------------------------------
// Newick serialization
// ---------------------------------------------------------------------------

namespace detail {

inline bool newick_needs_quotes(const std::string& label) {
    if (label.empty()) return true;
    return label.find_first_of(" \t\n()[]':;,") != std::string::npos;
}

inline std::string newick_label(const std::string& label) {
    if (!newick_needs_quotes(label)) return label;
    std::string out = "'";
    for (char c : label) {
        out += c;
        if (c == '\'') out += '\'';
    }
    out += '\'';
    return out;
}

inline std::string newick_length(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

inline void newick_node(const PhyloTree& t, std::size_t id, int precision, bool with_length,
                        std::string& out) {
    const PhyloNode& node = t.nodes[id];
    if (node.children.empty()) {
        out += newick_label(node.label);
    } else {
        out += '(';
        for (std::size_t c = 0; c < node.children.size(); ++c) {
            if (c) out += ',';
            newick_node(t, node.children[c], precision, with_length, out);
        }
        out += ')';
        if (!node.label.empty()) out += newick_label(node.label);
    }
    if (with_length && node.parent >= 0) {
        out += ':';
        out += newick_length(node.branch_length, precision);
    }
}

} // namespace detail

inline std::string to_newick(const PhyloTree& t, int precision = 6, bool with_lengths = true) {
    std::string out;
    detail::newick_node(t, t.root, precision, with_lengths, out);
    out += ';';
    return out;
}

// ---------------------------------------------------------------------------
// Newick parsing (round-trips what to_newick writes)
// ---------------------------------------------------------------------------

namespace detail {

class NewickParser {
  public:
    explicit NewickParser(const std::string& text) : s_(text) {}

    PhyloTree parse() {
        PhyloTree t;
        t.root = node(t);
        skip_space();
        if (pos_ >= s_.size() || s_[pos_] != ';')
            throw Error(errc::invalid_spec, "newick: missing trailing semicolon");
        ++pos_;
        skip_space();
        if (pos_ != s_.size()) throw Error(errc::invalid_spec, "newick: trailing characters");
        for (const auto& nd : t.nodes)
            if (nd.children.empty()) ++t.leaf_count;
        return t;
    }

  private:
    std::size_t node(PhyloTree& t) {
        skip_space();
        const std::size_t id = t.nodes.size();
        t.nodes.emplace_back();
        if (pos_ < s_.size() && s_[pos_] == '(') {
            ++pos_;
            while (true) {
                const std::size_t child = node(t);
                t.nodes[id].children.push_back(child);
                t.nodes[child].parent = static_cast<std::int64_t>(id);
                skip_space();
                if (pos_ < s_.size() && s_[pos_] == ',') {
                    ++pos_;
                    continue;
                }
                break;
            }
            if (pos_ >= s_.size() || s_[pos_] != ')')
                throw Error(errc::invalid_spec, "newick: unbalanced parenthesis");
            ++pos_;
        }
        skip_space();
        t.nodes[id].label = label();
        skip_space();
        if (pos_ < s_.size() && s_[pos_] == ':') {
            ++pos_;
            t.nodes[id].branch_length = number();
            t.nodes[id].raw_branch_length = t.nodes[id].branch_length;
        }
        return id;
    }

    std::string label() {
        if (pos_ < s_.size() && s_[pos_] == '\'') {
            ++pos_;
            std::string out;
            while (pos_ < s_.size()) {
                if (s_[pos_] == '\'') {
                    if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '\'') {
                        out += '\'';
                        pos_ += 2;
                        continue;
                    }
                    ++pos_;
                    return out;
                }
                out += s_[pos_++];
            }
            throw Error(errc::invalid_spec, "newick: unterminated quoted label");
        }
        std::string out;
        while (pos_ < s_.size() && std::string(" \t\n()[]':;,").find(s_[pos_]) == std::string::npos)
            out += s_[pos_++];
        return out;
    }

    double number() {
        skip_space();
        std::size_t consumed = 0;
        double v = 0.0;
        try {
            v = std::stod(s_.substr(pos_), &consumed);
        } catch (const std::exception&) {
            throw Error(errc::invalid_spec, "newick: bad branch length");
        }
        pos_ += consumed;
        return v;
    }

    void skip_space() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' ||
                                    s_[pos_] == '\r'))
            ++pos_;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline PhyloTree parse_newick(const std::string& text) {
    return detail::NewickParser(text).parse();
}

} // namespace infodist
