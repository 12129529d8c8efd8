#include "catchup/contraction.hpp"
#include "catchup/order.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>

#include "catchup/oracle.hpp"

using namespace catchup;

namespace {

TDGraph path_graph(NodeId n) {
    std::vector<std::tuple<NodeId, NodeId, TravelTimeFunction>> arcs;
    for (NodeId v = 0; v + 1 < n; ++v) {
        arcs.emplace_back(v, v + 1, TravelTimeFunction::constant(1));
        arcs.emplace_back(v + 1, v, TravelTimeFunction::constant(1));
    }
    return TDGraph::from_arcs(n, std::move(arcs));
}

TEST(ComputeOrder, PathMiddleNodeRankedHighest) {
    auto g = path_graph(7);
    auto res = compute_order(g, 1);
    NodeId top = res.order.node_at_rank[6];
    EXPECT_EQ(top, 3u);  // the separator of a path is its midpoint
}

TEST(ComputeOrder, StarHubRankedLast) {
    std::vector<std::tuple<NodeId, NodeId, TravelTimeFunction>> arcs;
    // hub = 0, leaves 1..80 (big enough that the leaf threshold is not hit)
    NodeId n = 81;
    for (NodeId v = 1; v < n; ++v) {
        arcs.emplace_back(0, v, TravelTimeFunction::constant(1));
        arcs.emplace_back(v, 0, TravelTimeFunction::constant(1));
    }
    auto g = TDGraph::from_arcs(n, std::move(arcs));
    auto res = compute_order(g, 1);
    EXPECT_EQ(res.order.node_at_rank[n - 1], 0u);
}

TEST(ComputeOrder, GridArcCountLogged) {
    GeneratorParams p;
    p.n = 1024;  // 32x32 grid
    p.td_fraction = 0.0;
    auto g = generate(p);
    auto res = compute_order(g, 1);
    auto aug = contract(g, res.order);
    // comparative sanity: logged, not asserted (order quality affects speed only)
    std::printf("[ info ] 32x32 grid: %u cch arcs for %u input arcs\n", aug.arc_count(), g.arc_count());
    ASSERT_GT(aug.arc_count(), 0u);
}

TEST(OrderIo, IdentityReversedAndRoundTrip) {
    std::vector<Rank> ranks(10);
    std::iota(ranks.begin(), ranks.end(), 0);
    auto id = NodeOrder::from_ranks(ranks);
    for (NodeId v = 0; v < 10; ++v) EXPECT_EQ(id.rank[v], v);
    std::reverse(ranks.begin(), ranks.end());
    auto rev = NodeOrder::from_ranks(ranks);
    EXPECT_EQ(rev.node_at_rank[0], 9u);

    auto path = std::string(::testing::TempDir()) + "/order.bin";
    save_order(rev, path);
    auto back = load_order(path, 10);
    EXPECT_EQ(back.rank, rev.rank);
}

TEST(OrderIo, NonPermutationRejected) {
    std::vector<Rank> ranks = {0, 1, 1, 3};
    EXPECT_THROW(NodeOrder::from_ranks(ranks), std::runtime_error);
    std::vector<Rank> oob = {0, 1, 2, 7};
    EXPECT_THROW(NodeOrder::from_ranks(oob), std::runtime_error);
}

TEST(EliminationTreeTest, FullyConnectedTriangle) {
    std::vector<std::tuple<NodeId, NodeId, TravelTimeFunction>> arcs;
    for (NodeId u = 0; u < 3; ++u)
        for (NodeId v = 0; v < 3; ++v)
            if (u != v) arcs.emplace_back(u, v, TravelTimeFunction::constant(1));
    auto g = TDGraph::from_arcs(3, std::move(arcs));
    auto order = NodeOrder::from_ranks({0, 1, 2});
    auto aug = contract(g, order);
    auto t = build_elimination_tree(aug);
    EXPECT_EQ(t.parent[0], 1u);
    EXPECT_EQ(t.parent[1], 2u);
    EXPECT_EQ(t.parent[2], kInvalidNode);
}

TEST(EliminationTreeTest, IsolatedTopNodeIsRoot) {
    auto g = TDGraph::from_arcs(3, {{0, 1, TravelTimeFunction::constant(1)},
                                    {1, 0, TravelTimeFunction::constant(1)}});
    auto order = NodeOrder::from_ranks({0, 1, 2});
    auto aug = contract(g, order);
    auto t = build_elimination_tree(aug);
    EXPECT_EQ(t.parent[2], kInvalidNode);
    EXPECT_EQ(t.parent[0], 1u);
}

TEST(EliminationTreeTest, AncestorsEqualUpwardReachableSet) {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 10; ++rep) {
        GeneratorParams p;
        p.topology = GeneratorParams::RandomPlanarLike;
        p.n = 100;
        p.seed = 100 + rep;
        auto g = generate(p);
        auto res = compute_order(g, 2);
        auto aug = contract(g, res.order);
        auto t = build_elimination_tree(aug);
        // parent rank strictly greater than child rank
        for (NodeId u = 0; u < aug.n; ++u)
            if (t.parent[u] != kInvalidNode) EXPECT_GT(t.parent[u], u);
        for (NodeId v = 0; v < aug.n; ++v) {
            std::set<NodeId> ancestors;
            for (NodeId a = t.parent[v]; a != kInvalidNode; a = t.parent[a]) ancestors.insert(a);
            // BFS over upward arcs
            std::set<NodeId> reach;
            std::vector<NodeId> stack{v};
            while (!stack.empty()) {
                NodeId u = stack.back();
                stack.pop_back();
                for (ArcId a = aug.out_begin(u); a < aug.out_end(u); ++a) {
                    NodeId w = aug.head[a];
                    if (reach.insert(w).second) stack.push_back(w);
                }
            }
            EXPECT_EQ(ancestors, reach) << "node " << v;
        }
    }
}

TEST(Contraction, PathShortcutInserted) {
    // path a-b-c ordered b < a < c: contracting b inserts shortcut a-c
    auto g = TDGraph::from_arcs(3, {{0, 1, TravelTimeFunction::constant(1)},
                                    {1, 0, TravelTimeFunction::constant(1)},
                                    {1, 2, TravelTimeFunction::constant(1)},
                                    {2, 1, TravelTimeFunction::constant(1)}});
    // ranks: node1(b)=0, node0(a)=1, node2(c)=2
    auto order = NodeOrder::from_ranks({1, 0, 2});
    auto aug = contract(g, order);
    EXPECT_EQ(aug.arc_count(), 3u);  // (b,a), (b,c), shortcut (a,c)
    ArcId sc = aug.find_arc(1, 2);
    ASSERT_NE(sc, kInvalidArc);
    EXPECT_EQ(aug.input_fwd[sc], kInvalidArc);  // pure shortcut
    EXPECT_EQ(aug.input_bwd[sc], kInvalidArc);
}

TEST(Contraction, TriangleAddsNothing) {
    std::vector<std::tuple<NodeId, NodeId, TravelTimeFunction>> arcs;
    for (NodeId u = 0; u < 3; ++u)
        for (NodeId v = 0; v < 3; ++v)
            if (u != v) arcs.emplace_back(u, v, TravelTimeFunction::constant(1));
    auto g = TDGraph::from_arcs(3, std::move(arcs));
    auto aug = contract(g, NodeOrder::from_ranks({2, 0, 1}));
    EXPECT_EQ(aug.arc_count(), 3u);
}

/// Quadratic reference contraction: maintain full adjacency, connect all
/// higher-ranked neighbor pairs when a node is contracted.
std::set<std::pair<NodeId, NodeId>> naive_contract(const TDGraph& g, const NodeOrder& order) {
    NodeId n = g.node_count();
    std::vector<std::set<NodeId>> adj(n);  // rank space, undirected among remaining
    for (NodeId u = 0; u < n; ++u) {
        for (ArcId a = g.out_begin(u); a < g.out_end(u); ++a) {
            if (g.head(a) == u) continue;
            NodeId x = order.rank[u], y = order.rank[g.head(a)];
            adj[x].insert(y);
            adj[y].insert(x);
        }
    }
    std::set<std::pair<NodeId, NodeId>> arcs;
    for (NodeId w = 0; w < n; ++w) {
        std::vector<NodeId> up;
        for (NodeId x : adj[w])
            if (x > w) up.push_back(x);
        for (NodeId x : up) arcs.insert({w, x});
        for (std::size_t i = 0; i < up.size(); ++i)
            for (std::size_t j = i + 1; j < up.size(); ++j) {
                adj[up[i]].insert(up[j]);
                adj[up[j]].insert(up[i]);
            }
    }
    return arcs;
}

TEST(Contraction, ClosureAndNaiveOracleEquality) {
    for (int rep = 0; rep < 8; ++rep) {
        GeneratorParams p;
        p.topology = rep % 2 ? GeneratorParams::Grid : GeneratorParams::RandomPlanarLike;
        p.n = 100;
        p.seed = 500 + rep;
        auto g = generate(p);
        auto res = compute_order(g, 3);
        auto aug = contract(g, res.order);
        auto naive = naive_contract(g, res.order);
        std::set<std::pair<NodeId, NodeId>> ours;
        for (ArcId a = 0; a < aug.arc_count(); ++a) ours.insert({aug.tail[a], aug.head[a]});
        EXPECT_EQ(ours, naive);
        // clique closure: for upward arcs (u,w), (u,v) with w < v, arc (w,v) exists
        for (NodeId u = 0; u < aug.n; ++u) {
            for (ArcId a = aug.out_begin(u); a < aug.out_end(u); ++a) {
                for (ArcId b = a + 1; b < aug.out_end(u); ++b) {
                    EXPECT_NE(aug.find_arc(aug.head[a], aug.head[b]), kInvalidArc);
                }
            }
        }
    }
}

}  // namespace
