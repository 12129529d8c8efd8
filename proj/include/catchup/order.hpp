#pragma once

// Node ordering for the hierarchy: a built-in nested dissection heuristic
// (BFS level-set separators with swap refinement), order file I/O, and the
// elimination tree. Order quality only affects speed, never correctness;
// externally computed orders can be loaded instead.

#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "catchup/graph.hpp"
#include "catchup/types.hpp"

namespace catchup {

struct NodeOrder {
    std::vector<Rank> rank;          // node -> rank
    std::vector<NodeId> node_at_rank;  // rank -> node

    static NodeOrder from_ranks(std::vector<Rank> ranks) {
        NodeOrder o;
        o.rank = std::move(ranks);
        o.node_at_rank.assign(o.rank.size(), kInvalidNode);
        for (NodeId v = 0; v < o.rank.size(); ++v) {
            Rank r = o.rank[v];
            if (r >= o.rank.size() || o.node_at_rank[r] != kInvalidNode)
                throw std::runtime_error("ranks are not a permutation: duplicate or out-of-range rank " +
                                         std::to_string(r) + " at node " + std::to_string(v));
            o.node_at_rank[r] = v;
        }
        return o;
    }

    NodeId n() const { return static_cast<NodeId>(rank.size()); }
};

namespace nd {

/// Undirected adjacency used by the dissection heuristic.
struct UndirectedGraph {
    std::vector<std::vector<NodeId>> adj;

    explicit UndirectedGraph(const TDGraph& g) : adj(g.node_count()) {
        for (NodeId u = 0; u < g.node_count(); ++u) {
            for (ArcId a = g.out_begin(u); a < g.out_end(u); ++a) {
                NodeId v = g.head(a);
                if (v == u) continue;
                adj[u].push_back(v);
                adj[v].push_back(u);
            }
        }
        for (auto& l : adj) {
            std::sort(l.begin(), l.end());
            l.erase(std::unique(l.begin(), l.end()), l.end());
        }
    }
};

class Dissection {
  public:
    Dissection(const UndirectedGraph& g, std::uint64_t seed)
        : g_(g), rng_(seed), rank_(g.adj.size(), 0), in_cell_(g.adj.size(), 0), level_(g.adj.size(), 0) {}

    static constexpr std::size_t kLeafSize = 4;
    static constexpr double kBalance = 0.6;

    struct Cell {
        Rank lo, hi;            // rank range [lo, hi)
        std::size_t separator;  // top `separator` ranks of the range
        std::vector<int> children;
    };

    std::vector<Rank> run() {
        std::vector<NodeId> all(g_.adj.size());
        std::iota(all.begin(), all.end(), 0);
        // components ordered independently, lowest node id first
        auto comps = components(all);
        Rank next = 0;
        for (auto& c : comps) {
            int cell = order_cell(c, next);
            next += static_cast<Rank>(c.size());
            top_cells_.push_back(cell);
        }
        return rank_;
    }

    const std::vector<Cell>& cells() const { return cells_; }
    const std::vector<int>& top_cells() const { return top_cells_; }

  private:
    std::vector<std::vector<NodeId>> components(const std::vector<NodeId>& nodes) {
        ++stamp_;
        for (NodeId v : nodes) in_cell_[v] = stamp_;
        std::vector<std::vector<NodeId>> comps;
        ++visit_stamp_;
        if (visited_.size() != g_.adj.size()) visited_.assign(g_.adj.size(), 0);
        for (NodeId v : nodes) {
            if (visited_[v] == visit_stamp_) continue;
            comps.emplace_back();
            auto& comp = comps.back();
            std::vector<NodeId> stack{v};
            visited_[v] = visit_stamp_;
            while (!stack.empty()) {
                NodeId u = stack.back();
                stack.pop_back();
                comp.push_back(u);
                for (NodeId w : g_.adj[u]) {
                    if (in_cell_[w] == stamp_ && visited_[w] != visit_stamp_) {
                        visited_[w] = visit_stamp_;
                        stack.push_back(w);
                    }
                }
            }
            std::sort(comp.begin(), comp.end());
        }
        std::sort(comps.begin(), comps.end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });
        return comps;
    }

    /// Assigns the rank range [base, base + nodes.size()) to the cell.
    int order_cell(std::vector<NodeId>& nodes, Rank base) {
        int cell_idx = static_cast<int>(cells_.size());
        cells_.push_back({base, base + static_cast<Rank>(nodes.size()), 0, {}});
        if (nodes.size() <= kLeafSize) {
            order_leaf(nodes, base);
            return cell_idx;
        }
        auto separator = find_separator(nodes);
        std::vector<NodeId> rest;
        ++stamp_;
        for (NodeId v : separator) in_cell_[v] = stamp_;
        for (NodeId v : nodes)
            if (in_cell_[v] != stamp_) rest.push_back(v);
        if (separator.empty() || rest.empty()) {
            order_leaf(nodes, base);
            return cell_idx;
        }
        // separator nodes get the highest ranks of this cell, ordered by id
        std::sort(separator.begin(), separator.end());
        Rank sep_base = base + static_cast<Rank>(rest.size());
        for (std::size_t i = 0; i < separator.size(); ++i)
            rank_[separator[i]] = sep_base + static_cast<Rank>(i);
        cells_[cell_idx].separator = separator.size();
        auto comps = components(rest);
        Rank next = base;
        for (auto& c : comps) {
            int child = order_cell(c, next);
            cells_[cell_idx].children.push_back(child);
            next += static_cast<Rank>(c.size());
        }
        return cell_idx;
    }

    /// Fill-in minimizing greedy order inside small cells: repeatedly pick
    /// the node of minimum degree in the remaining subgraph.
    void order_leaf(std::vector<NodeId>& nodes, Rank base) {
        ++stamp_;
        for (NodeId v : nodes) in_cell_[v] = stamp_;
        std::vector<std::vector<NodeId>> local(nodes.size());
        std::vector<NodeId> local_id(g_.adj.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) local_id[nodes[i]] = static_cast<NodeId>(i);
        for (std::size_t i = 0; i < nodes.size(); ++i)
            for (NodeId w : g_.adj[nodes[i]])
                if (in_cell_[w] == stamp_) local[i].push_back(local_id[w]);
        std::vector<bool> done(nodes.size(), false);
        for (std::size_t step = 0; step < nodes.size(); ++step) {
            std::size_t best = 0, best_deg = SIZE_MAX;
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                if (done[i]) continue;
                std::size_t deg = 0;
                for (NodeId w : local[i])
                    if (!done[w]) ++deg;
                if (deg < best_deg) {
                    best_deg = deg;
                    best = i;
                }
            }
            done[best] = true;
            rank_[nodes[best]] = base + static_cast<Rank>(step);
            // connect remaining neighbors (greedy elimination)
            std::vector<NodeId> nb;
            for (NodeId w : local[best])
                if (!done[w]) nb.push_back(w);
            for (std::size_t x = 0; x < nb.size(); ++x) {
                for (std::size_t y = x + 1; y < nb.size(); ++y) {
                    auto& lx = local[nb[x]];
                    if (std::find(lx.begin(), lx.end(), nb[y]) == lx.end()) {
                        lx.push_back(nb[y]);
                        local[nb[y]].push_back(nb[x]);
                    }
                }
            }
        }
    }

    /// BFS level-set separator from a pseudo-peripheral start, then a swap
    /// refinement pass that drops separator nodes touching only one side.
    std::vector<NodeId> find_separator(const std::vector<NodeId>& nodes) {
        ++stamp_;
        for (NodeId v : nodes) in_cell_[v] = stamp_;
        std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
        NodeId start = nodes[pick(rng_)];
        start = bfs_far(start);  // double sweep for a pseudo-peripheral node
        start = bfs_far(start);

        // BFS levels from start
        for (NodeId v : nodes) level_[v] = kInvalidNode;
        std::vector<NodeId> frontier{start}, order{start};
        level_[start] = 0;
        std::size_t lvl = 0;
        std::vector<std::size_t> level_sizes{1};
        while (!frontier.empty()) {
            std::vector<NodeId> next;
            for (NodeId u : frontier) {
                for (NodeId w : g_.adj[u]) {
                    if (in_cell_[w] == stamp_ && level_[w] == kInvalidNode) {
                        level_[w] = static_cast<NodeId>(lvl + 1);
                        next.push_back(w);
                        order.push_back(w);
                    }
                }
            }
            if (!next.empty()) level_sizes.push_back(next.size());
            frontier = std::move(next);
            ++lvl;
        }
        std::size_t total = order.size();
        // choose the smallest level keeping both sides <= kBalance; break
        // ties towards the most balanced split
        std::size_t best_level = level_sizes.size() / 2;
        std::size_t best_size = SIZE_MAX;
        std::size_t best_imbalance = SIZE_MAX;
        std::size_t limit = static_cast<std::size_t>(kBalance * static_cast<double>(total));
        std::size_t run = 0;
        for (std::size_t l = 0; l + 1 < level_sizes.size(); ++l) {
            run += level_sizes[l];
            std::size_t below = run - level_sizes[l];  // nodes strictly below level l
            std::size_t above = total - run;
            std::size_t imbalance = below > above ? below - above : above - below;
            if (below <= limit && above <= limit &&
                (level_sizes[l] < best_size ||
                 (level_sizes[l] == best_size && imbalance < best_imbalance))) {
                best_size = level_sizes[l];
                best_level = l;
                best_imbalance = imbalance;
            }
        }
        std::vector<NodeId> sep;
        for (NodeId v : order)
            if (level_[v] == best_level) sep.push_back(v);
        if (sep.size() == total) sep.pop_back();

        // refinement: drop separator nodes adjacent to only one side
        ++stamp2_;
        if (in_sep_.size() != g_.adj.size()) in_sep_.assign(g_.adj.size(), 0);
        for (NodeId v : sep) in_sep_[v] = stamp2_;
        std::vector<NodeId> refined;
        for (NodeId v : sep) {
            bool lower = false, upper = false;
            for (NodeId w : g_.adj[v]) {
                if (in_cell_[w] != stamp_ || in_sep_[w] == stamp2_) continue;
                if (level_[w] < best_level) lower = true;
                else upper = true;
            }
            if (lower && upper) refined.push_back(v);
            else in_sep_[v] = 0;  // rejoin its side
        }
        if (refined.empty()) return sep;  // keep connectivity-safe fallback
        return refined;
    }

    NodeId bfs_far(NodeId start) {
        for (;;) {
            ++visit_stamp_;
            if (visited_.size() != g_.adj.size()) visited_.assign(g_.adj.size(), 0);
            std::vector<NodeId> frontier{start};
            visited_[start] = visit_stamp_;
            NodeId last = start;
            while (!frontier.empty()) {
                std::vector<NodeId> next;
                for (NodeId u : frontier) {
                    for (NodeId w : g_.adj[u]) {
                        if (in_cell_[w] == stamp_ && visited_[w] != visit_stamp_) {
                            visited_[w] = visit_stamp_;
                            next.push_back(w);
                        }
                    }
                }
                if (!next.empty()) last = next.back();
                frontier = std::move(next);
            }
            return last;
        }
    }

    const UndirectedGraph& g_;
    std::mt19937_64 rng_;
    std::vector<Rank> rank_;
    std::vector<std::uint32_t> in_cell_, in_sep_;
    std::vector<NodeId> level_;
    std::vector<std::uint32_t> visited_;
    std::uint32_t stamp_ = 0, stamp2_ = 0, visit_stamp_ = 0;
    std::vector<Cell> cells_;
    std::vector<int> top_cells_;
};

}  // namespace nd

/// Separator tree recorded by the built-in dissection; drives the task
/// parallel customization schedule.
struct SeparatorTree {
    struct Cell {
        Rank lo, hi;
        std::size_t separator;
        std::vector<int> children;
    };
    std::vector<Cell> cells;
    std::vector<int> top_cells;

    bool empty() const { return cells.empty(); }
};

struct OrderResult {
    NodeOrder order;
    SeparatorTree tree;
};

/// Nested dissection order from recursive balanced edge-separator bisection.
/// Deterministic for a given seed.
inline OrderResult compute_order(const TDGraph& g, std::uint64_t seed = 1) {
    nd::UndirectedGraph ug(g);
    nd::Dissection d(ug, seed);
    auto ranks = d.run();
    OrderResult res;
    res.order = NodeOrder::from_ranks(std::move(ranks));
    for (const auto& c : d.cells()) res.tree.cells.push_back({c.lo, c.hi, c.separator, c.children});
    res.tree.top_cells = d.top_cells();
    return res;
}

/// Order file: binary u32[n] ranks, little-endian.
inline void save_order(const NodeOrder& order, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write(reinterpret_cast<const char*>(order.rank.data()),
             static_cast<std::streamsize>(order.rank.size() * sizeof(Rank)));
}

inline NodeOrder load_order(const std::string& path, NodeId n) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::vector<Rank> ranks(n);
    is.read(reinterpret_cast<char*>(ranks.data()), static_cast<std::streamsize>(n * sizeof(Rank)));
    if (!is) throw std::runtime_error("order file too short for " + std::to_string(n) + " nodes");
    return NodeOrder::from_ranks(std::move(ranks));
}

}  // namespace catchup
