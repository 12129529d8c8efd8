#pragma once

// Ground-truth algorithms and instance/query generation: time-dependent
// Dijkstra, the exact profile variant, and a seeded synthetic network
// generator. These are deliberately simple, independent reference
// implementations used to verify the engine.

#include <queue>
#include <random>
#include <string>

#include "catchup/graph.hpp"
#include "catchup/ttf.hpp"

namespace catchup {

struct EaOracleResult {
    double arrival = kInfTime;
    std::vector<NodeId> path;  // empty when unreachable
    std::size_t settled = 0;
};

/// Label-setting time-dependent Dijkstra. Exact earliest arrival.
inline EaOracleResult td_dijkstra(const TDGraph& g, NodeId s, NodeId t, double tau,
                                  bool check_label_setting = false) {
    EaOracleResult res;
    if (s == t) {
        res.arrival = tau;
        res.path = {s};
        return res;
    }
    std::vector<double> ea(g.node_count(), kInfTime);
    std::vector<NodeId> parent(g.node_count(), kInvalidNode);
    std::vector<bool> settled(g.node_count(), false);
    using Entry = std::pair<double, NodeId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    ea[s] = tau;
    queue.push({tau, s});
    while (!queue.empty()) {
        auto [key, u] = queue.top();
        queue.pop();
        if (settled[u] || key > ea[u]) continue;
        settled[u] = true;
        ++res.settled;
        if (u == t) break;
        for (ArcId a = g.out_begin(u); a < g.out_end(u); ++a) {
            NodeId v = g.head(a);
            double arr = ea[u] + g.ttf(a).evaluate(ea[u]);
            if (arr < ea[v]) {
                if (check_label_setting && settled[v]) {
                    throw std::logic_error("label-setting violated: settled node improved");
                }
                ea[v] = arr;
                parent[v] = u;
                queue.push({arr, v});
            }
        }
    }
    if (ea[t] == kInfTime) return res;
    res.arrival = ea[t];
    for (NodeId v = t; v != kInvalidNode; v = parent[v]) res.path.push_back(v);
    std::reverse(res.path.begin(), res.path.end());
    return res;
}

/// Exact travel time profile between s and t via label-correcting search
/// over whole functions. Memory grows quadratically with path length; only
/// meant for small instances. Throws when the breakpoint budget is exceeded.
inline TravelTimeFunction td_profile_dijkstra(const TDGraph& g, NodeId s, NodeId t,
                                              std::size_t breakpoint_budget = 10'000'000) {
    double period = g.period();
    if (s == t) return TravelTimeFunction::constant(0.0, period);
    std::vector<TravelTimeFunction> profile(g.node_count());
    using Entry = std::pair<double, NodeId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    // Seed s's neighbors directly so every stored profile is positive.
    for (ArcId a = g.out_begin(s); a < g.out_end(s); ++a) {
        NodeId v = g.head(a);
        if (v == s) continue;
        if (profile[v].empty()) {
            profile[v] = g.ttf(a);
        } else {
            profile[v] = merge(profile[v], g.ttf(a)).fn;
        }
    }
    std::size_t stored = 0;
    for (NodeId v = 0; v < g.node_count(); ++v) {
        if (!profile[v].empty()) {
            stored += profile[v].size();
            queue.push({profile[v].min_value(), v});
        }
    }
    while (!queue.empty()) {
        auto [key, u] = queue.top();
        queue.pop();
        if (profile[u].empty() || key > profile[u].min_value() + 1e-12) continue;
        if (!profile[t].empty() && key > profile[t].max_value()) break;
        if (u == t) continue;
        for (ArcId a = g.out_begin(u); a < g.out_end(u); ++a) {
            NodeId v = g.head(a);
            if (v == s || v == u) continue;
            auto candidate = link(profile[u], g.ttf(a));
            bool improved;
            if (profile[v].empty()) {
                profile[v] = std::move(candidate);
                improved = true;
            } else {
                auto merged = merge(profile[v], candidate);
                improved = !merged.second_wins.empty();
                if (improved) profile[v] = std::move(merged.fn);
            }
            if (improved) {
                stored += profile[v].size();
                if (stored > breakpoint_budget)
                    throw std::runtime_error("profile oracle breakpoint budget exceeded at node " +
                                             std::to_string(v));
                queue.push({profile[v].min_value(), v});
            }
        }
    }
    return profile[t];  // empty when unreachable
}

// --- instance generation -----------------------------------------------------

struct GeneratorParams {
    enum Topology { Grid, RandomPlanarLike, Path };
    Topology topology = Grid;
    NodeId n = 100;
    double td_fraction = 0.3;        // fraction of arcs with non-constant function
    int min_points = 4;              // breakpoints per TD arc
    int max_points = 30;
    double delay_amplitude = 0.75;   // peak delay relative to the base travel time
    std::uint64_t seed = 1;
    double period = kDefaultPeriod;
};

namespace detail {

/// A plausible commute-like delay profile: sum of two smooth bumps at
/// seeded times of day, sampled at sorted random times and clamped to FIFO.
inline TravelTimeFunction random_td_function(std::mt19937_64& rng, double base,
                                             const GeneratorParams& p) {
    std::uniform_int_distribution<int> npd(p.min_points, p.max_points);
    std::uniform_real_distribution<double> ud(0.0, p.period);
    std::uniform_real_distribution<double> amp(0.3 * p.delay_amplitude, p.delay_amplitude);
    std::uniform_real_distribution<double> width(0.03 * p.period, 0.12 * p.period);
    int n = npd(rng);
    double c1 = ud(rng), c2 = ud(rng);
    double a1 = amp(rng), a2 = amp(rng);
    double w1 = width(rng), w2 = width(rng);
    auto bump = [&](double t, double c, double a, double w) {
        double d = std::fabs(t - c);
        d = std::min(d, p.period - d);  // cyclic distance
        double x = d / w;
        return x >= 1.0 ? 0.0 : a * (1.0 - x * x) * (1.0 - x * x);
    };
    std::vector<double> times;
    times.reserve(n);
    for (int i = 0; i < n; ++i) times.push_back(ud(rng));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [](double a, double b) { return b - a < 1.0; }),
                times.end());
    std::vector<Breakpoint> pts;
    pts.reserve(times.size());
    for (double t : times)
        pts.push_back({t, base * (1.0 + bump(t, c1, a1, w1) + bump(t, c2, a2, w2))});
    // clamp slopes to >= -1 + 1e-6, cyclically
    for (int pass = 0; pass < 4; ++pass) {
        bool changed = false;
        auto clamp_pair = [&](Breakpoint& from, Breakpoint& to, double dt) {
            double lo = from.val - dt * (1.0 - 1e-6);
            if (to.val < lo) {
                to.val = lo;
                changed = true;
            }
        };
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            clamp_pair(pts[i], pts[i + 1], pts[i + 1].at - pts[i].at);
        if (pts.size() > 1)
            clamp_pair(pts.back(), pts.front(), pts.front().at + p.period - pts.back().at);
        if (!changed) break;
    }
    return TravelTimeFunction::from_points(std::move(pts), p.period);
}

}  // namespace detail

/// Deterministic synthetic road-network-like instance for the given seed.
inline TDGraph generate(const GeneratorParams& p) {
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> base_dist(20.0, 400.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<std::tuple<NodeId, NodeId, TravelTimeFunction>> arcs;
    auto add_arc = [&](NodeId u, NodeId v) {
        double base = base_dist(rng);
        if (coin(rng) < p.td_fraction) {
            arcs.emplace_back(u, v, detail::random_td_function(rng, base, p));
        } else {
            arcs.emplace_back(u, v, TravelTimeFunction::constant(base, p.period));
        }
    };
    switch (p.topology) {
        case GeneratorParams::Path: {
            for (NodeId v = 0; v + 1 < p.n; ++v) {
                add_arc(v, v + 1);
                add_arc(v + 1, v);
            }
            break;
        }
        case GeneratorParams::Grid: {
            NodeId side = static_cast<NodeId>(std::max(1.0, std::round(std::sqrt(double(p.n)))));
            NodeId rows = side, cols = (p.n + side - 1) / side;
            auto id = [&](NodeId r, NodeId c) { return r * cols + c; };
            for (NodeId r = 0; r < rows; ++r) {
                for (NodeId c = 0; c < cols; ++c) {
                    if (id(r, c) >= p.n) continue;
                    if (c + 1 < cols && id(r, c + 1) < p.n) {
                        add_arc(id(r, c), id(r, c + 1));
                        add_arc(id(r, c + 1), id(r, c));
                    }
                    if (r + 1 < rows && id(r + 1, c) < p.n) {
                        add_arc(id(r, c), id(r + 1, c));
                        add_arc(id(r + 1, c), id(r, c));
                    }
                }
            }
            break;
        }
        case GeneratorParams::RandomPlanarLike: {
            // random points on a unit square, each connected to its nearest
            // neighbors; yields a connected, road-like sparse graph
            std::vector<std::pair<double, double>> xy(p.n);
            for (auto& c : xy) c = {coin(rng), coin(rng)};
            std::vector<std::pair<NodeId, NodeId>> undirected;
            for (NodeId v = 0; v < p.n; ++v) {
                std::vector<std::pair<double, NodeId>> near;
                for (NodeId u = 0; u < p.n; ++u) {
                    if (u == v) continue;
                    double dx = xy[v].first - xy[u].first, dy = xy[v].second - xy[u].second;
                    near.push_back({dx * dx + dy * dy, u});
                }
                std::partial_sort(near.begin(), near.begin() + std::min<std::size_t>(3, near.size()),
                                  near.end());
                for (std::size_t i = 0; i < std::min<std::size_t>(3, near.size()); ++i)
                    undirected.push_back({std::min(v, near[i].second), std::max(v, near[i].second)});
            }
            std::sort(undirected.begin(), undirected.end());
            undirected.erase(std::unique(undirected.begin(), undirected.end()), undirected.end());
            for (auto [u, v] : undirected) {
                add_arc(u, v);
                add_arc(v, u);
            }
            break;
        }
    }
    return TDGraph::from_arcs(p.n, std::move(arcs), p.period);
}

inline std::vector<QuerySpec> uniform_queries(const TDGraph& g, std::uint64_t seed, std::size_t count) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_int_distribution<NodeId> nd(0, g.node_count() - 1);
    std::uniform_real_distribution<double> td(0.0, g.period());
    std::vector<QuerySpec> qs;
    qs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) qs.push_back({nd(rng), nd(rng), td(rng)});
    return qs;
}

struct RankedQuery {
    QuerySpec query;
    unsigned rank;  // target was the 2^rank-th settled node
};

/// Runs a time-dependent Dijkstra from s and records the 2^i-th settled
/// node as the target of a query of rank i. Ranks beyond the reachable
/// component are absent.
inline std::vector<RankedQuery> rank_queries_from_source(const TDGraph& g, NodeId s, double tau) {
    std::vector<RankedQuery> out;
    std::vector<double> ea(g.node_count(), kInfTime);
    std::vector<bool> settled(g.node_count(), false);
    using Entry = std::pair<double, NodeId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    ea[s] = tau;
    queue.push({tau, s});
    std::size_t n_settled = 0;
    std::size_t next_pow = 1;
    unsigned rank = 0;
    while (!queue.empty()) {
        auto [key, u] = queue.top();
        queue.pop();
        if (settled[u] || key > ea[u]) continue;
        settled[u] = true;
        ++n_settled;
        if (n_settled == next_pow) {
            if (u != s) out.push_back({{s, u, tau}, rank});
            next_pow *= 2;
            ++rank;
        }
        for (ArcId a = g.out_begin(u); a < g.out_end(u); ++a) {
            NodeId v = g.head(a);
            double arr = ea[u] + g.ttf(a).evaluate(ea[u]);
            if (arr < ea[v]) {
                ea[v] = arr;
                queue.push({arr, v});
            }
        }
    }
    return out;
}

/// Ranked query sets for local-query evaluation: for each of `count` random
/// sources, the 2^i-th settled node becomes the target of a rank-i query.
inline std::vector<RankedQuery> dijkstra_rank_queries(const TDGraph& g, std::uint64_t seed,
                                                      std::size_t count) {
    std::mt19937_64 rng(seed ^ 0x2545f4914f6cdd1dull);
    std::uniform_int_distribution<NodeId> nd(0, g.node_count() - 1);
    std::uniform_real_distribution<double> td(0.0, g.period());
    std::vector<RankedQuery> out;
    for (std::size_t q = 0; q < count; ++q) {
        NodeId s = nd(rng);
        double tau = td(rng);
        auto qs = rank_queries_from_source(g, s, tau);
        out.insert(out.end(), qs.begin(), qs.end());
    }
    return out;
}

}  // namespace catchup
