#pragma once

// Expansion storage and the unpacking operations built on it: travel time
// evaluation, path unpacking, exact travel time function reconstruction,
// and path profiles. A shortcut stores *which path is fastest when* as
// timestamped triples instead of a travel time function.
//
// All operations are templated over a resolver mapping an arc-direction key
// to its expansion list, so they work against the final index, the
// customization working state, and profile-query overlays alike.

#include <span>
#include <vector>

#include "catchup/graph.hpp"
#include "catchup/ttf.hpp"
#include "catchup/types.hpp"

namespace catchup {

/// One timestamped unpacking triple. Three encodings:
///   (first, second) both valid  -> lower triangle: descend first, then second
///   first invalid, second valid -> original input arc `second`
///   both invalid                -> no path during this interval
struct ExpansionEntry {
    double start;
    ArcId first;
    ArcId second;

    bool is_triangle() const { return first != kInvalidArc; }
    bool is_original() const { return first == kInvalidArc && second != kInvalidArc; }
    bool is_none() const { return first == kInvalidArc && second == kInvalidArc; }

    friend bool operator==(const ExpansionEntry&, const ExpansionEntry&) = default;
    bool same_target(const ExpansionEntry& o) const { return first == o.first && second == o.second; }
};
static_assert(sizeof(ExpansionEntry) == 16, "expansion entries are stored in 16 bytes");

/// Keys of the two legs of a triangle entry: the first leg runs from the
/// shortcut's tail down to the middle node, the second leg up to the head.
inline std::uint64_t first_leg_key(const ExpansionEntry& e) { return (std::uint64_t(e.first) << 1) | 1u; }
inline std::uint64_t second_leg_key(const ExpansionEntry& e) { return std::uint64_t(e.second) << 1; }

struct UnpackStats {
    std::uint64_t ttf_evals = 0;
    std::uint64_t reconstruct_calls = 0;
};

/// The unique expansion whose cyclic validity interval contains tau.
inline const ExpansionEntry& expansion_at(std::span<const ExpansionEntry> exps, double tau,
                                          double period) {
    assert(!exps.empty());
    double t = std::fmod(tau, period);
    if (t < 0.0) t += period;
    auto it = std::upper_bound(exps.begin(), exps.end(), t,
                               [](double x, const ExpansionEntry& e) { return x < e.start; });
    if (it == exps.begin()) return exps.back();  // cyclic wrap
    return *(it - 1);
}

/// Walks the expansion pieces overlapping [from, to] in absolute time,
/// invoking f(entry, a, b) with [a, b] sub-pieces that tile the interval.
template <typename F>
inline void for_expansion_pieces(std::span<const ExpansionEntry> exps, double from, double to,
                                 double period, F&& f) {
    assert(!exps.empty());
    if (to <= from) return;
    double folded = std::fmod(from, period);
    if (folded < 0.0) folded += period;
    double shift = from - folded;
    // locate the entry containing `folded`
    std::size_t idx = 0;
    {
        auto it = std::upper_bound(exps.begin(), exps.end(), folded,
                                   [](double x, const ExpansionEntry& e) { return x < e.start; });
        if (it == exps.begin()) {
            idx = exps.size() - 1;
            shift -= period;  // entry starts in the previous cycle
        } else {
            idx = static_cast<std::size_t>(it - exps.begin() - 1);
        }
    }
    double cur_start = exps[idx].start + shift;
    while (cur_start < to) {
        double next_shift = shift;
        std::size_t next_idx = idx + 1;
        if (next_idx == exps.size()) {
            next_idx = 0;
            next_shift += period;
        }
        double cur_end = exps.size() == 1 ? cur_start + period : exps[next_idx].start + next_shift;
        double a = std::max(from, cur_start);
        double b = std::min(to, cur_end);
        if (b - a > 1e-12) f(exps[idx], a, b);
        idx = next_idx;
        shift = next_shift;
        cur_start = cur_end;
    }
}

/// Exact travel time of a shortcut entered at tau, computed by recursive
/// unpacking down to input arcs. Returns infinity on a no-path sentinel.
template <typename Resolver>
inline double eval_shortcut(const TDGraph& g, const Resolver& resolve, std::uint64_t key, double tau,
                            UnpackStats* stats = nullptr) {
    // The recursion is linear when unrolled left-to-right: keep a stack of
    // pending legs and walk the path in travel order.
    thread_local std::vector<std::uint64_t> stack;
    std::size_t base = stack.size();
    stack.push_back(key);
    double t = tau;
    double total = 0.0;
    while (stack.size() > base) {
        std::uint64_t k = stack.back();
        stack.pop_back();
        std::span<const ExpansionEntry> exps = resolve(k);
        const ExpansionEntry& e = expansion_at(exps, t, g.period());
        if (e.is_none()) {
            stack.resize(base);
            return kInfTime;
        }
        if (e.is_original()) {
            double dt = g.ttf(e.second).evaluate(t);
            if (stats) ++stats->ttf_evals;
            total += dt;
            t += dt;
        } else {
            stack.push_back(second_leg_key(e));
            stack.push_back(first_leg_key(e));
        }
    }
    return total;
}

/// The input-graph path a shortcut stands for at departure tau. `source` is
/// the original id of the shortcut's tail. Empty result on no-path.
template <typename Resolver>
inline std::vector<NodeId> unpack_path(const TDGraph& g, const Resolver& resolve, std::uint64_t key,
                                       double tau, NodeId source, UnpackStats* stats = nullptr) {
    std::vector<NodeId> path{source};
    std::vector<std::uint64_t> stack{key};
    double t = tau;
    while (!stack.empty()) {
        std::uint64_t k = stack.back();
        stack.pop_back();
        const ExpansionEntry& e = expansion_at(resolve(k), t, g.period());
        if (e.is_none()) return {};
        if (e.is_original()) {
            double dt = g.ttf(e.second).evaluate(t);
            if (stats) ++stats->ttf_evals;
            t += dt;
            path.push_back(g.head(e.second));
        } else {
            stack.push_back(second_leg_key(e));
            stack.push_back(first_leg_key(e));
        }
    }
    return path;
}

inline double eval_path(const TDGraph& g, std::span<const NodeId> path, double tau) {
    double t = tau;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        NodeId u = path[i];
        ArcId arc = kInvalidArc;
        double best = kInfTime;
        for (ArcId a = g.out_begin(u); a < g.out_end(u); ++a) {
            if (g.head(a) == path[i + 1]) {
                double dt = g.ttf(a).evaluate(t);
                if (dt < best) {
                    best = dt;
                    arc = a;
                }
            }
        }
        if (arc == kInvalidArc) return kInfTime;
        t += best;
    }
    return t - tau;
}

/// Two reusable growable buffers holding stacked intermediate curves. The
/// link step reads the two functions on top of one buffer and appends the
/// result to the other; buffers never shrink.
struct TtfBuffers {
    std::vector<Breakpoint> buf[2];

    void clear() {
        buf[0].clear();
        buf[1].clear();
    }
};

namespace detail {

template <typename Resolver>
std::pair<std::size_t, std::size_t> reconstruct_rec(const TDGraph& g, const Resolver& resolve,
                                                    std::uint64_t key, double from, double to,
                                                    TtfBuffers& bufs, int out, UnpackStats* stats) {
    if (stats) ++stats->reconstruct_calls;
    auto& out_buf = bufs.buf[out];
    auto& piece_buf = bufs.buf[1 - out];
    std::size_t out_mark = out_buf.size();
    std::size_t piece_mark = piece_buf.size();

    for_expansion_pieces(resolve(key), from, to, g.period(), [&](const ExpansionEntry& e, double a,
                                                                 double b) {
        if (e.is_none()) {
            // infinite-value segment marker
            piece_buf.push_back({a, kInfTime});
            piece_buf.push_back({b, kInfTime});
            return;
        }
        if (e.is_original()) {
            auto curve = g.ttf(e.second).unroll(a, b);
            std::size_t start = piece_buf.size();
            for (const auto& p : curve) pwl::push_canonical(piece_buf, start, p.at, p.val);
            return;
        }
        // lower triangle: reconstruct both legs into the out buffer, link
        // into the piece buffer, then pop the legs
        auto f1 = reconstruct_rec(g, resolve, first_leg_key(e), a, b, bufs, out, stats);
        std::span<const Breakpoint> c1(out_buf.data() + f1.first, f1.second - f1.first);
        double a2 = a + pwl::eval(c1, a);
        double b2 = b + pwl::eval(c1, b);
        auto f2 = reconstruct_rec(g, resolve, second_leg_key(e), a2, b2, bufs, out, stats);
        // spans must be re-taken: the second recursion may have reallocated
        std::span<const Breakpoint> s1(out_buf.data() + f1.first, f1.second - f1.first);
        std::span<const Breakpoint> s2(out_buf.data() + f2.first, f2.second - f2.first);
        if (!std::isfinite(s1.front().val) || !std::isfinite(s2.front().val)) {
            piece_buf.push_back({a, kInfTime});
            piece_buf.push_back({b, kInfTime});
        } else {
            pwl::link_curves(s1, s2, piece_buf);
        }
        out_buf.resize(f1.first);
    });

    // join the collected pieces into the out buffer
    std::size_t begin = out_buf.size();
    for (std::size_t i = piece_mark; i < piece_buf.size(); ++i) {
        const auto& p = piece_buf[i];
        if (!std::isfinite(p.val)) {
            out_buf.push_back(p);  // keep markers untouched
        } else {
            pwl::push_canonical(out_buf, begin, p.at, p.val);
        }
    }
    if (out_buf.size() == begin && piece_buf.size() > piece_mark)
        out_buf.push_back(piece_buf[piece_mark]);
    piece_buf.resize(piece_mark);
    return {begin, out_buf.size()};
}

}  // namespace detail

/// Exact travel time function of a shortcut over [from, to] (absolute
/// times; intervals spanning the period wrap are handled by the cyclic
/// expansion walk). Pointwise equal to eval_shortcut on the interval.
template <typename Resolver>
inline std::vector<Breakpoint> reconstruct_ttf(const TDGraph& g, const Resolver& resolve,
                                               std::uint64_t key, double from, double to,
                                               TtfBuffers& bufs, UnpackStats* stats = nullptr) {
    std::size_t mark = bufs.buf[0].size();
    auto ext = detail::reconstruct_rec(g, resolve, key, from, to, bufs, 0, stats);
    std::vector<Breakpoint> out(bufs.buf[0].begin() + ext.first, bufs.buf[0].begin() + ext.second);
    bufs.buf[0].resize(mark);
    if (out.empty()) out.push_back({from, kInfTime});
    return out;
}

/// A path together with the departure interval during which it is the
/// unpacked fastest path.
struct PathInterval {
    std::vector<NodeId> path;
    double start, end;
};

namespace detail {

/// Maps an arrival-side boundary back to a departure time at the path's
/// start by inverting each arc's arrival function in reverse order.
inline double reverse_eval(const TDGraph& g, const std::vector<NodeId>& path, double t) {
    for (std::size_t i = path.size() - 1; i-- > 0;) {
        NodeId u = path[i];
        ArcId arc = kInvalidArc;
        for (ArcId a = g.out_begin(u); a < g.out_end(u); ++a)
            if (g.head(a) == path[i + 1]) {
                arc = a;
                break;
            }
        assert(arc != kInvalidArc);
        t = invert_arrival(g.ttf(arc), t);
    }
    return t;
}

inline void append_path_interval(std::vector<PathInterval>& out, std::vector<NodeId> path,
                                 double a, double b) {
    if (b - a <= 1e-12) return;
    if (!out.empty() && out.back().path == path && a <= out.back().end + 1e-9) {
        out.back().end = b;  // consecutive identical paths merge
        return;
    }
    out.push_back({std::move(path), a, b});
}

}  // namespace detail

/// All fastest paths a shortcut stands for over the departure interval
/// [from, to], with their validity intervals tiling the interval.
template <typename Resolver>
inline std::vector<PathInterval> unpack_paths_profile(const TDGraph& g, const Resolver& resolve,
                                                      std::uint64_t key, double from, double to,
                                                      NodeId source, UnpackStats* stats = nullptr) {
    std::vector<PathInterval> out;
    for_expansion_pieces(resolve(key), from, to, g.period(), [&](const ExpansionEntry& e, double a,
                                                                 double b) {
        if (e.is_none()) return;  // no path during this piece
        if (e.is_original()) {
            detail::append_path_interval(out, {source, g.head(e.second)}, a, b);
            return;
        }
        // paths of the first leg over [a, b]; middle node is the last node
        auto p1 = unpack_paths_profile(g, resolve, first_leg_key(e), a, b, source, stats);
        if (p1.empty()) return;
        NodeId middle = p1.front().path.back();
        double ta = eval_shortcut(g, resolve, first_leg_key(e), a, stats);
        double tb = eval_shortcut(g, resolve, first_leg_key(e), b, stats);
        auto p2 = unpack_paths_profile(g, resolve, second_leg_key(e), a + ta, b + tb, middle, stats);
        if (p2.empty()) return;
        // coordinated sweep over both path sets
        std::size_t i = 0, j = 0;
        double cur = a;
        while (cur < b - 1e-12 && i < p1.size() && j < p2.size()) {
            double end1 = p1[i].end;
            // map the second leg's boundary into departure time at `source`
            double end2 = p2[j].end >= p2.back().end - 1e-12
                              ? b
                              : detail::reverse_eval(g, p1[i].path, p2[j].end);
            double seg_end = std::min({end1, end2, b});
            std::vector<NodeId> joined = p1[i].path;
            joined.insert(joined.end(), p2[j].path.begin() + 1, p2[j].path.end());
            detail::append_path_interval(out, std::move(joined), cur, seg_end);
            if (seg_end >= b - 1e-12) break;
            if (end1 <= seg_end + 1e-12) ++i;
            if (end2 <= seg_end + 1e-12) ++j;
            cur = seg_end;
        }
    });
    return out;
}

}  // namespace catchup
