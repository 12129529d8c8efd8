#pragma once

// Metric-independent contraction: builds the augmented graph whose upward
// neighborhoods are closed under the clique property, without witness
// searches. Nodes are renumbered by rank internally; an arc slot (u, v) with
// rank(u) < rank(v) carries both travel directions.

#include <tuple>
#include <vector>

#include "catchup/graph.hpp"
#include "catchup/order.hpp"
#include "catchup/types.hpp"

namespace catchup {

struct AugmentedGraph {
    NodeId n = 0;
    NodeOrder order;  // original node id <-> rank

    // CSR over tails in rank space; arcs sorted by (tail rank, head rank)
    std::vector<ArcId> first_out;
    std::vector<NodeId> head;
    std::vector<NodeId> tail;

    // input arc realizing each direction (kInvalidArc for pure shortcuts);
    // fwd = lower-ranked endpoint to higher-ranked endpoint
    std::vector<ArcId> input_fwd;
    std::vector<ArcId> input_bwd;
    // additional parallel input arcs, rare: (cch arc, backward, input arc)
    std::vector<std::tuple<ArcId, bool, ArcId>> extra_inputs;

    // reverse adjacency: for each node, incoming arcs sorted by tail
    std::vector<ArcId> first_in;
    std::vector<ArcId> in_arc;

    ArcId arc_count() const { return static_cast<ArcId>(head.size()); }

    ArcId out_begin(NodeId u) const { return first_out[u]; }
    ArcId out_end(NodeId u) const { return first_out[u + 1]; }
    ArcId in_begin(NodeId v) const { return first_in[v]; }
    ArcId in_end(NodeId v) const { return first_in[v + 1]; }

    ArcId find_arc(NodeId u, NodeId v) const {
        // u must be the lower ranked endpoint
        auto lo = head.begin() + first_out[u];
        auto hi = head.begin() + first_out[u + 1];
        auto it = std::lower_bound(lo, hi, v);
        if (it != hi && *it == v) return static_cast<ArcId>(it - head.begin());
        return kInvalidArc;
    }

    /// Enumerates lower triangles of arc (u, v): middle nodes w with
    /// rank(w) < rank(u) and arcs (w, u), (w, v).
    template <typename F>
    void for_lower_triangles(ArcId a, F&& f) const {
        NodeId u = tail[a], v = head[a];
        ArcId iu = first_in[u], iu_end = first_in[u + 1];
        ArcId iv = first_in[v], iv_end = first_in[v + 1];
        while (iu < iu_end && iv < iv_end) {
            NodeId wu = tail[in_arc[iu]], wv = tail[in_arc[iv]];
            if (wu == wv) {
                f(wu, in_arc[iu], in_arc[iv]);
                ++iu;
                ++iv;
            } else if (wu < wv) {
                ++iu;
            } else {
                ++iv;
            }
        }
    }
};

/// Contracts the bidirected input along the order. Each node's upward
/// neighbors are inserted into the neighborhood of its lowest ranked upward
/// neighbor, which yields the full clique closure in near-linear time.
inline AugmentedGraph contract(const TDGraph& g, const NodeOrder& order) {
    NodeId n = g.node_count();
    std::vector<std::vector<NodeId>> up(n);  // rank space, sorted
    for (NodeId u_orig = 0; u_orig < n; ++u_orig) {
        for (ArcId a = g.out_begin(u_orig); a < g.out_end(u_orig); ++a) {
            NodeId v_orig = g.head(a);
            if (v_orig == u_orig) continue;
            NodeId u = order.rank[u_orig], v = order.rank[v_orig];
            if (u > v) std::swap(u, v);
            up[u].push_back(v);
        }
    }
    for (auto& l : up) {
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
    }
    std::vector<NodeId> merged;
    for (NodeId u = 0; u < n; ++u) {
        const auto& nb = up[u];
        if (nb.size() < 2) continue;
        NodeId w = nb[0];
        auto& dst = up[w];
        merged.clear();
        merged.reserve(dst.size() + nb.size() - 1);
        std::set_union(dst.begin(), dst.end(), nb.begin() + 1, nb.end(), std::back_inserter(merged));
        dst.swap(merged);
    }

    AugmentedGraph aug;
    aug.n = n;
    aug.order = order;
    aug.first_out.assign(n + 1, 0);
    for (NodeId u = 0; u < n; ++u) aug.first_out[u + 1] = aug.first_out[u] + static_cast<ArcId>(up[u].size());
    ArcId m = aug.first_out[n];
    aug.head.reserve(m);
    aug.tail.reserve(m);
    for (NodeId u = 0; u < n; ++u) {
        for (NodeId v : up[u]) {
            aug.head.push_back(v);
            aug.tail.push_back(u);
        }
    }
    aug.input_fwd.assign(m, kInvalidArc);
    aug.input_bwd.assign(m, kInvalidArc);
    for (NodeId u_orig = 0; u_orig < n; ++u_orig) {
        for (ArcId a = g.out_begin(u_orig); a < g.out_end(u_orig); ++a) {
            NodeId v_orig = g.head(a);
            if (v_orig == u_orig) continue;
            NodeId u = order.rank[u_orig], v = order.rank[v_orig];
            bool backward = u > v;
            if (backward) std::swap(u, v);
            ArcId slot = aug.find_arc(u, v);
            assert(slot != kInvalidArc);
            auto& primary = backward ? aug.input_bwd[slot] : aug.input_fwd[slot];
            if (primary == kInvalidArc) {
                primary = a;
            } else {
                aug.extra_inputs.emplace_back(slot, backward, a);
            }
        }
    }
    // reverse adjacency
    aug.first_in.assign(n + 1, 0);
    for (ArcId a = 0; a < m; ++a) ++aug.first_in[aug.head[a] + 1];
    for (NodeId v = 0; v < n; ++v) aug.first_in[v + 1] += aug.first_in[v];
    aug.in_arc.assign(m, 0);
    std::vector<ArcId> cursor(aug.first_in.begin(), aug.first_in.end() - 1);
    for (ArcId a = 0; a < m; ++a) aug.in_arc[cursor[aug.head[a]]++] = a;  // tails ascending: arcs are tail-sorted
    return aug;
}

/// Elimination tree (a forest on multi-component graphs): every node's
/// parent is its lowest ranked upward neighbor; ancestors are exactly the
/// hierarchy search space.
struct EliminationTree {
    std::vector<NodeId> parent;  // rank space; kInvalidNode at roots

    NodeId root_sentinel() const { return kInvalidNode; }
};

inline EliminationTree build_elimination_tree(const AugmentedGraph& aug) {
    EliminationTree t;
    t.parent.assign(aug.n, kInvalidNode);
    for (NodeId u = 0; u < aug.n; ++u) {
        if (aug.first_out[u] < aug.first_out[u + 1]) t.parent[u] = aug.head[aug.first_out[u]];
    }
    return t;
}

}  // namespace catchup
