#pragma once

// Bound-pair approximation of travel time functions: Douglas-Peucker
// simplification, coupled lower/upper bounds with tightening, linking of
// bounds, and overlap windows for exactness-preserving merges.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <vector>

#include "catchup/ttf.hpp"

namespace catchup {

/// Coupled lower/upper approximation of a travel time function. When `exact`
/// is set, `lower` holds the exact function and `upper` is empty.
struct BoundPair {
    TravelTimeFunction lower;
    TravelTimeFunction upper;
    bool exact = false;

    static BoundPair exactly(TravelTimeFunction f) {
        BoundPair p;
        p.lower = std::move(f);
        p.exact = true;
        return p;
    }
    static BoundPair of(TravelTimeFunction lo, TravelTimeFunction up) {
        BoundPair p;
        p.lower = std::move(lo);
        p.upper = std::move(up);
        return p;
    }

    const TravelTimeFunction& lower_fn() const { return lower; }
    const TravelTimeFunction& upper_fn() const { return exact ? lower : upper; }
    std::size_t complexity() const { return lower.size() + (exact ? 0 : upper.size()); }
};

namespace detail {

/// Douglas-Peucker on a curve: returns the kept indices (endpoints always
/// kept), such that the vertical deviation of dropped points is <= eps.
inline std::vector<std::size_t> dp_keep_indices(std::span<const Breakpoint> pts, double eps) {
    std::vector<std::size_t> keep;
    std::size_t n = pts.size();
    if (n <= 2) {
        for (std::size_t i = 0; i < n; ++i) keep.push_back(i);
        return keep;
    }
    std::vector<bool> kept(n, false);
    kept[0] = kept[n - 1] = true;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
    while (!stack.empty()) {
        auto [i, j] = stack.back();
        stack.pop_back();
        if (j <= i + 1) continue;
        double worst = -1.0;
        std::size_t worst_k = i;
        for (std::size_t k = i + 1; k < j; ++k) {
            double d = std::fabs(pts[k].val - pwl::interpolate(pts[i], pts[j], pts[k].at));
            if (d > worst) {
                worst = d;
                worst_k = k;
            }
        }
        if (worst > eps) {
            kept[worst_k] = true;
            stack.push_back({i, worst_k});
            stack.push_back({worst_k, j});
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (kept[i]) keep.push_back(i);
    return keep;
}

/// Enforce slope >= -1 on a cyclic sequence by raising values (upper bounds).
inline void fifo_repair_raise(std::vector<Breakpoint>& pts, double period) {
    if (pts.size() <= 1) return;
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            double dt = pts[i + 1].at - pts[i].at;
            pts[i + 1].val = std::max(pts[i + 1].val, pts[i].val - dt);
        }
        double dt = pts.front().at + period - pts.back().at;
        pts.front().val = std::max(pts.front().val, pts.back().val - dt);
    }
}

/// Enforce slope >= -1 on a cyclic sequence by lowering values (lower bounds).
inline void fifo_repair_lower(std::vector<Breakpoint>& pts, double period) {
    if (pts.size() <= 1) return;
    for (int pass = 0; pass < 2; ++pass) {
        double dt = pts.front().at + period - pts.back().at;
        pts.back().val = std::min(pts.back().val, pts.front().val + dt);
        for (std::size_t i = pts.size() - 1; i-- > 0;) {
            double seg = pts[i + 1].at - pts[i].at;
            pts[i].val = std::min(pts[i].val, pts[i + 1].val + seg);
        }
    }
}

}  // namespace detail

/// Simplifies f, keeping a subset of its breakpoints, with pointwise error
/// <= eps.
inline TravelTimeFunction douglas_peucker(const TravelTimeFunction& f, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("douglas_peucker needs eps > 0");
    if (f.size() <= 2) return f;
    double p = f.period();
    double t0 = f.points().front().at;
    auto curve = f.unroll(t0, t0 + p);
    auto keep = detail::dp_keep_indices(curve, eps);
    std::vector<Breakpoint> kept;
    kept.reserve(keep.size());
    for (auto k : keep) kept.push_back(curve[k]);
    return TravelTimeFunction::fold_periodic(std::move(kept), p);
}

/// Builds a lower/upper bound pair around f with gap at most 2*eps: simplify,
/// shift values by +-eps, then move each breakpoint back towards f by the
/// smaller of its two adjacent segments' minimum gaps. Slopes are clamped to
/// keep both bounds FIFO and the lower bound is clamped to stay positive.
inline BoundPair bound_pair(const TravelTimeFunction& f, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("bound_pair needs eps > 0");
    double p = f.period();
    double t0 = f.points().front().at;
    auto curve = f.unroll(t0, t0 + p);
    auto keep = detail::dp_keep_indices(curve, eps);
    std::size_t m = keep.size();

    // Minimum gap between the shifted chord and f on each kept segment.
    std::vector<double> up_gap(m, eps), lo_gap(m, eps);
    for (std::size_t j = 0; j + 1 < m; ++j) {
        Breakpoint a{curve[keep[j]].at, curve[keep[j]].val + eps};
        Breakpoint b{curve[keep[j + 1]].at, curve[keep[j + 1]].val + eps};
        double gu = kInfTime, gl = kInfTime;
        for (std::size_t i = keep[j]; i <= keep[j + 1]; ++i) {
            double chord = pwl::interpolate(a, b, curve[i].at);
            gu = std::min(gu, chord - curve[i].val);
            gl = std::min(gl, curve[i].val - (chord - 2.0 * eps));
        }
        up_gap[j] = gu;
        lo_gap[j] = gl;
    }
    auto seg_gap = [&](const std::vector<double>& g, std::size_t j, bool left) {
        // cyclic adjacency: the unrolled endpoints are the same point
        if (left) return j == 0 ? g[m - 2] : g[j - 1];
        return j + 1 == m ? g[0] : g[j];
    };

    std::vector<Breakpoint> up(m), lo(m);
    for (std::size_t j = 0; j < m; ++j) {
        double du = m >= 2 ? std::min(seg_gap(up_gap, j, true), seg_gap(up_gap, j, false)) : eps;
        double dl = m >= 2 ? std::min(seg_gap(lo_gap, j, true), seg_gap(lo_gap, j, false)) : eps;
        du = std::clamp(du, 0.0, eps);
        dl = std::clamp(dl, 0.0, eps);
        up[j] = {curve[keep[j]].at, curve[keep[j]].val + eps - du};
        lo[j] = {curve[keep[j]].at, curve[keep[j]].val - eps + dl};
    }
    detail::fifo_repair_raise(up, p);
    detail::fifo_repair_lower(lo, p);

    double fmin = f.min_value();
    bool need_floor = false;
    for (const auto& b : lo)
        if (b.val <= 0.0) need_floor = true;
    if (need_floor && fmin > 0.0) lo = pwl::max_with_const(lo, 0.5 * fmin);

    BoundPair pair;
    pair.lower = TravelTimeFunction::fold_periodic(std::move(lo), p);
    pair.upper = TravelTimeFunction::fold_periodic(std::move(up), p);
    pair.exact = false;
    return pair;
}

/// Bound pair of the composition: linking lower bounds gives a valid lower
/// bound of the linked exact functions (FIFO), same for upper bounds.
inline BoundPair link_bounds(const BoundPair& a, const BoundPair& b) {
    if (a.exact && b.exact) return BoundPair::exactly(link(a.lower_fn(), b.lower_fn()));
    BoundPair r;
    r.lower = link(a.lower_fn(), b.lower_fn());
    r.upper = link(a.upper_fn(), b.upper_fn());
    r.exact = false;
    return r;
}

/// Maximal intervals where neither pair certainly dominates the other, i.e.
/// where an intersection of the underlying exact functions is possible.
/// Outside the returned windows dominance is certain. Windows are padded by
/// kEqEps and merged when they touch.
inline std::vector<TimeInterval> overlap_windows(const BoundPair& a, const BoundPair& b) {
    double p = a.lower_fn().period();
    auto au = a.upper_fn().unroll(0.0, p);
    auto bl = b.lower_fn().unroll(0.0, p);
    auto bu = b.upper_fn().unroll(0.0, p);
    auto al = a.lower_fn().unroll(0.0, p);

    // a certainly dominates only where a.upper is strictly below b.lower
    // (beyond the equality tolerance); symmetrically for b. Ties therefore
    // fall into a window.
    auto raw_a = pwl::merge_curves(bl, au, nullptr);  // second wins == a.up < b.lo
    auto raw_b = pwl::merge_curves(al, bu, nullptr);  // second wins == b.up < a.lo

    // Assemble a timeline over [0, p] with flags (a_dom, b_dom).
    struct Flag {
        double at;
        int which;  // 0 -> a_dom flag change, 1 -> b_dom flag change
        bool value;
    };
    std::vector<Flag> flags;
    bool a_dom = raw_a.second_wins_first;
    bool b_dom = raw_b.second_wins_first;
    for (const auto& e : raw_a.events) flags.push_back({e.at, 0, e.second_wins});
    for (const auto& e : raw_b.events) flags.push_back({e.at, 1, e.second_wins});
    std::sort(flags.begin(), flags.end(), [](const Flag& x, const Flag& y) { return x.at < y.at; });

    std::vector<TimeInterval> windows;
    bool cur_window = !a_dom && !b_dom;
    double window_start = cur_window ? 0.0 : -1.0;
    auto close_window = [&](double end) {
        // zero-width windows (dominance regions touching at an exact crossing)
        // are kept; padding below gives them positive measure
        if (window_start >= 0.0 && end >= window_start) windows.push_back({window_start, end});
        window_start = -1.0;
    };
    int holder = a_dom ? 1 : (b_dom ? 2 : 0);
    std::size_t i = 0;
    while (i < flags.size()) {
        double t = flags[i].at;
        while (i < flags.size() && flags[i].at <= t + 1e-12) {
            (flags[i].which == 0 ? a_dom : b_dom) = flags[i].value;
            ++i;
        }
        bool nw = !a_dom && !b_dom;
        int nh = a_dom ? 1 : (b_dom ? 2 : 0);
        if (nw != cur_window) {
            if (nw) window_start = t;
            else close_window(t);
            cur_window = nw;
        } else if (!nw && nh != holder) {
            // dominance switched holders with no gap: a crossing sits here
            windows.push_back({t, t});
        }
        holder = nh;
    }
    if (cur_window) close_window(p);

    if (windows.empty()) return windows;
    // pad and merge
    for (auto& w : windows) {
        w.start = std::max(0.0, w.start - kEqEps);
        w.end = std::min(p, w.end + kEqEps);
    }
    std::vector<TimeInterval> merged;
    for (const auto& w : windows) {
        if (!merged.empty() && w.start <= merged.back().end + kEqEps)
            merged.back().end = std::max(merged.back().end, w.end);
        else
            merged.push_back(w);
    }
    // stitch a window wrapping across the period boundary
    if (merged.size() >= 2 && merged.front().start <= kEqEps && merged.back().end >= p - kEqEps) {
        merged.front().start = merged.back().start;  // wrapping interval
        merged.pop_back();
    } else if (merged.size() == 1 && merged.front().start <= kEqEps && merged.front().end >= p - kEqEps) {
        merged.front() = {0.0, p};
    }
    return merged;
}

}  // namespace catchup
