#pragma once

// Periodic piecewise-linear travel time function algebra: evaluation,
// linking, merging with win intervals, and arrival inversion. All functions
// are value types; operations are pure and safe to call concurrently.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "catchup/types.hpp"

namespace catchup {

struct Breakpoint {
    double at;   // departure time in seconds
    double val;  // travel time in seconds

    friend bool operator==(const Breakpoint&, const Breakpoint&) = default;
};

/// Half-open time interval [start, end). When start > end the interval wraps
/// across the period boundary. start == end only for explicitly empty
/// intervals.
struct TimeInterval {
    double start;
    double end;
};

namespace pwl {

// --- primitives on plain (non-periodic) breakpoint curves -------------------
//
// A curve is a strictly increasing-by-`at` sequence of breakpoints covering
// the closed domain [front().at, back().at].

inline double interpolate(const Breakpoint& a, const Breakpoint& b, double t) {
    if (b.at <= a.at) return a.val;
    if (t <= a.at) return a.val;
    if (t >= b.at) return b.val;
    double w = (t - a.at) / (b.at - a.at);
    return a.val + w * (b.val - a.val);
}

/// Vertical deviation of b from the straight line through a and c.
inline double deviation(const Breakpoint& a, const Breakpoint& b, const Breakpoint& c) {
    if (!std::isfinite(a.val) || !std::isfinite(b.val) || !std::isfinite(c.val)) return kInfTime;
    return std::fabs(b.val - interpolate(a, c, b.at));
}

/// Appends a breakpoint to the curve starting at index `base`, skipping
/// duplicate timestamps and dropping the previous point when it turns out to
/// be collinear.
inline void push_canonical(std::vector<Breakpoint>& pts, std::size_t base, double at, double val) {
    if (pts.size() > base && at - pts.back().at <= 1e-12) return;
    pts.push_back({at, val});
    std::size_t n = pts.size();
    if (n - base >= 3 && deviation(pts[n - 3], pts[n - 2], pts[n - 1]) <= kCanonEps) {
        pts[n - 2] = pts[n - 1];
        pts.pop_back();
    }
}

inline double eval(std::span<const Breakpoint> pts, double t) {
    assert(!pts.empty());
    if (pts.size() == 1) return pts.front().val;
    if (t <= pts.front().at) return pts.front().val;
    if (t >= pts.back().at) return pts.back().val;
    auto it = std::upper_bound(pts.begin(), pts.end(), t,
                               [](double x, const Breakpoint& b) { return x < b.at; });
    return interpolate(*(it - 1), *it, t);
}

struct CurveCursor {
    std::span<const Breakpoint> pts;
    std::size_t seg = 0;  // index of the segment's left endpoint

    // Evaluates at t, assuming non-decreasing query times across calls.
    double advance_eval(double t) {
        while (seg + 1 < pts.size() && pts[seg + 1].at <= t) ++seg;
        if (seg + 1 == pts.size()) return pts[seg].val;
        return interpolate(pts[seg], pts[seg + 1], t);
    }
};

/// Links curve f with curve g: result(t) = f(t) + g(t + f(t)) over f's
/// domain. g must cover the arrival range of f. Appends the result to `out`
/// starting at out.size().
inline void link_curves(std::span<const Breakpoint> f, std::span<const Breakpoint> g,
                        std::vector<Breakpoint>& out) {
    assert(!f.empty() && !g.empty());
    std::size_t base = out.size();
    if (f.size() == 1) {
        double a = f[0].at + f[0].val;
        out.push_back({f[0].at, f[0].val + eval(g, a)});
        return;
    }
    CurveCursor gc{g};
    std::size_t gj = 0;  // next g breakpoint candidate for interior events
    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        double a0 = f[i].at + f[i].val;
        double a1 = f[i + 1].at + f[i + 1].val;
        push_canonical(out, base, f[i].at, f[i].val + gc.advance_eval(a0));
        while (gj < g.size() && g[gj].at <= a0) ++gj;
        if (a1 > a0) {
            double inv_slope = (f[i + 1].at - f[i].at) / (a1 - a0);
            while (gj < g.size() && g[gj].at < a1) {
                double t = f[i].at + (g[gj].at - a0) * inv_slope;
                double fv = interpolate(f[i], f[i + 1], t);
                push_canonical(out, base, t, fv + g[gj].val);
                ++gj;
            }
        }
    }
    double an = f.back().at + f.back().val;
    double last_val = f.back().val + gc.advance_eval(an);
    if (out.size() > base && f.back().at - out.back().at <= 1e-12) out.pop_back();
    push_canonical(out, base, f.back().at, last_val);
    if (out.size() == base) out.push_back({f.back().at, last_val});
}

/// Winner switch event produced by merge_curves.
struct SwitchEvent {
    double at;
    bool second_wins;  // winner after `at`; before the first event see MergeRaw
};

struct MergeRaw {
    bool second_wins_first = false;  // winner at the domain start
    std::vector<SwitchEvent> events;
};

inline double snap(double d) { return std::fabs(d) <= kEqEps ? 0.0 : d; }

/// Merges curves f and g over their common domain (assumed equal by the
/// caller). Emits the pointwise minimum to `out_min` (appended, starting at
/// out_min.size()) and the winner timeline. Ties go to f. Winner flips closer
/// together than kEqEps are coalesced.
inline MergeRaw merge_curves(std::span<const Breakpoint> f, std::span<const Breakpoint> g,
                             std::vector<Breakpoint>* out_min) {
    assert(!f.empty() && !g.empty());
    MergeRaw raw;
    double lo = std::max(f.front().at, g.front().at);
    double hi = std::min(f.back().at, g.back().at);
    std::size_t base = out_min ? out_min->size() : 0;

    // Collect candidate times: union of breakpoint times inside [lo, hi].
    std::size_t fi = 0, gi = 0;
    CurveCursor fc{f}, gc{g};
    double prev_t = lo;
    double prev_f = eval(f, lo), prev_g = eval(g, lo);
    bool have_winner = false;
    bool cur_second = false;
    if (out_min) push_canonical(*out_min, base, lo, std::min(prev_f, prev_g));

    auto record = [&](double t, bool second) {
        if (!have_winner) {
            raw.second_wins_first = second;
            cur_second = second;
            have_winner = true;
            return;
        }
        if (second == cur_second) return;
        raw.events.push_back({t, second});
        cur_second = second;
    };

    auto next_time = [&]() {
        double tf = fi < f.size() ? f[fi].at : kInfTime;
        double tg = gi < g.size() ? g[gi].at : kInfTime;
        return std::min(tf, tg);
    };
    while (fi < f.size() && f[fi].at <= lo + 1e-12) ++fi;
    while (gi < g.size() && g[gi].at <= lo + 1e-12) ++gi;

    while (true) {
        double t = std::min(next_time(), hi);
        if (t > hi) t = hi;
        double fv = fc.advance_eval(t);
        double gv = gc.advance_eval(t);
        double d1 = snap(prev_f - prev_g);
        double d2 = snap(fv - gv);
        if (d1 <= 0.0 && d2 <= 0.0) {
            record(prev_t, false);
        } else if (d1 >= 0.0 && d2 >= 0.0) {
            record(prev_t, true);
        } else {
            // transversal crossing inside (prev_t, t)
            double rd1 = prev_f - prev_g;
            double rd2 = fv - gv;
            double tc = prev_t + (t - prev_t) * rd1 / (rd1 - rd2);
            tc = std::clamp(tc, prev_t, t);
            record(prev_t, d1 > 0.0);
            if (out_min) {
                double cv = interpolate({prev_t, prev_f}, {t, fv}, tc);
                push_canonical(*out_min, base, tc, cv);
            }
            record(tc, d2 > 0.0);
        }
        if (out_min && t > prev_t) push_canonical(*out_min, base, t, std::min(fv, gv));
        prev_t = t;
        prev_f = fv;
        prev_g = gv;
        while (fi < f.size() && f[fi].at <= t + 1e-12) ++fi;
        while (gi < g.size() && g[gi].at <= t + 1e-12) ++gi;
        if (t >= hi) break;
    }
    if (out_min) {
        // make sure the final point of the domain is present
        if (out_min->size() == base) out_min->push_back({hi, std::min(prev_f, prev_g)});
        else if (out_min->back().at < hi - 1e-12)
            out_min->push_back({hi, std::min(prev_f, prev_g)});
    }

    // Coalesce switch pairs closer together than kEqEps.
    std::vector<SwitchEvent> kept;
    for (const auto& e : raw.events) {
        if (!kept.empty() && e.at - kept.back().at < kEqEps && kept.back().second_wins != e.second_wins) {
            kept.pop_back();
        } else {
            kept.push_back(e);
        }
    }
    // Trim flips hugging the domain boundaries.
    while (!kept.empty() && kept.front().at - lo < kEqEps) {
        raw.second_wins_first = kept.front().second_wins;
        kept.erase(kept.begin());
    }
    while (!kept.empty() && hi - kept.back().at < kEqEps) kept.pop_back();
    raw.events = std::move(kept);
    return raw;
}

/// Pointwise maximum of a curve and a constant, inserting crossing points.
inline std::vector<Breakpoint> max_with_const(std::span<const Breakpoint> f, double c) {
    std::vector<Breakpoint> out;
    if (f.size() == 1) return {{f[0].at, std::max(f[0].val, c)}};
    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        push_canonical(out, 0, f[i].at, std::max(f[i].val, c));
        double d0 = f[i].val - c, d1 = f[i + 1].val - c;
        if ((d0 < 0.0) != (d1 < 0.0) && d0 != d1) {
            double t = f[i].at + (f[i + 1].at - f[i].at) * d0 / (d0 - d1);
            if (t > f[i].at && t < f[i + 1].at) push_canonical(out, 0, t, c);
        }
    }
    push_canonical(out, 0, f.back().at, std::max(f.back().val, c));
    if (out.empty()) out.push_back({f.front().at, std::max(f.front().val, c)});
    return out;
}

}  // namespace pwl

class TravelTimeFunction {
  public:
    TravelTimeFunction() = default;

    /// Builds a function from breakpoints with `at` in [0, period), strictly
    /// increasing. The input is canonicalized (collinear points dropped).
    static TravelTimeFunction from_points(std::vector<Breakpoint> pts, double period = kDefaultPeriod) {
        if (pts.empty()) throw std::invalid_argument("travel time function needs at least one breakpoint");
        std::vector<Breakpoint> canon;
        canon.reserve(pts.size());
        for (const auto& p : pts) {
            if (!(p.at >= 0.0 && p.at < period))
                throw std::invalid_argument("breakpoint time outside [0, period)");
            if (!canon.empty() && p.at <= canon.back().at)
                throw std::invalid_argument("breakpoint times must be strictly increasing");
            pwl::push_canonical(canon, 0, p.at, p.val);
        }
        TravelTimeFunction f;
        f.points_ = std::move(canon);
        f.period_ = period;
        f.canonical_cyclic();
        return f;
    }

    static TravelTimeFunction constant(double val, double period = kDefaultPeriod) {
        return from_points({{0.0, val}}, period);
    }

    bool empty() const { return points_.empty(); }
    std::size_t size() const { return points_.size(); }
    const std::vector<Breakpoint>& points() const { return points_; }
    double period() const { return period_; }

    double evaluate(double tau) const {
        if (points_.empty()) throw std::logic_error("evaluate on empty travel time function");
        if (points_.size() == 1) return points_[0].val;
        double t = fold(tau);
        if (t < points_.front().at || t >= points_.back().at) {
            // wrap segment from the last point to the first point + period
            Breakpoint next{points_.front().at + period_, points_.front().val};
            double tt = t < points_.front().at ? t + period_ : t;
            return pwl::interpolate(points_.back(), next, tt);
        }
        return pwl::eval(points_, t);
    }

    double min_value() const {
        double m = kInfTime;
        for (const auto& p : points_) m = std::min(m, p.val);
        return m;
    }
    double max_value() const {
        double m = -kInfTime;
        for (const auto& p : points_) m = std::max(m, p.val);
        return m;
    }

    double fold(double tau) const {
        double t = std::fmod(tau, period_);
        if (t < 0.0) t += period_;
        return t;
    }

    /// Materializes breakpoints over [from, to] as a plain curve, inserting
    /// synthetic points at both ends.
    std::vector<Breakpoint> unroll(double from, double to) const {
        assert(!points_.empty());
        std::vector<Breakpoint> out;
        if (points_.size() == 1) {
            out.push_back({from, points_[0].val});
            if (to > from) out.push_back({to, points_[0].val});
            return out;
        }
        out.push_back({from, evaluate(from)});
        double first = points_.front().at;
        double k = std::floor((from - first) / period_);
        std::size_t idx = 0;
        // find the first breakpoint (shifted by k periods) strictly after `from`
        while (true) {
            double t = points_[idx].at + k * period_;
            if (t > from + 1e-12) break;
            ++idx;
            if (idx == points_.size()) {
                idx = 0;
                k += 1.0;
            }
        }
        while (true) {
            double t = points_[idx].at + k * period_;
            if (t >= to - 1e-12) break;
            out.push_back({t, points_[idx].val});
            ++idx;
            if (idx == points_.size()) {
                idx = 0;
                k += 1.0;
            }
        }
        if (to > from) out.push_back({to, evaluate(to)});
        return out;
    }

    /// Rebuilds a periodic function from a curve covering exactly one period
    /// [s, s + period]. The closing point is dropped.
    static TravelTimeFunction fold_periodic(std::vector<Breakpoint> pts, double period) {
        assert(pts.size() >= 1);
        if (pts.size() >= 2 && std::fabs((pts.back().at - pts.front().at) - period) < 1e-6) pts.pop_back();
        std::size_t pivot = pts.size();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (pts[i].at >= period - 1e-12) {
                pivot = i;
                break;
            }
        }
        std::vector<Breakpoint> folded;
        folded.reserve(pts.size());
        for (std::size_t i = pivot; i < pts.size(); ++i) folded.push_back({pts[i].at - period, pts[i].val});
        for (std::size_t i = 0; i < pivot; ++i) {
            if (!folded.empty() && pts[i].at - folded.back().at <= 1e-12) continue;
            folded.push_back(pts[i]);
        }
        if (!folded.empty() && folded.front().at < 0.0) folded.front().at = 0.0;
        TravelTimeFunction f;
        f.points_ = std::move(folded);
        f.period_ = period;
        f.canonical_cyclic();
        return f;
    }

    /// FIFO check: every segment, including the wrap segment, must have slope
    /// >= -1 (within kFifoEps).
    bool is_fifo() const {
        if (points_.size() <= 1) return true;
        for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
            double dt = points_[i + 1].at - points_[i].at;
            if (points_[i + 1].val - points_[i].val < -dt * (1.0 + kFifoEps)) return false;
        }
        double dt = points_.front().at + period_ - points_.back().at;
        if (points_.front().val - points_.back().val < -dt * (1.0 + kFifoEps)) return false;
        return true;
    }

    bool strictly_positive() const { return min_value() > 0.0; }

    friend bool operator==(const TravelTimeFunction&, const TravelTimeFunction&) = default;

  private:
    void canonical_cyclic() {
        bool changed = true;
        while (changed && points_.size() >= 3) {
            changed = false;
            std::size_t n = points_.size();
            Breakpoint wrapped_last{points_[n - 1].at - period_, points_[n - 1].val};
            if (pwl::deviation(wrapped_last, points_[0], points_[1]) <= kCanonEps) {
                points_.erase(points_.begin());
                changed = true;
                continue;
            }
            n = points_.size();
            Breakpoint wrapped_first{points_[0].at + period_, points_[0].val};
            if (pwl::deviation(points_[n - 2], points_[n - 1], wrapped_first) <= kCanonEps) {
                points_.pop_back();
                changed = true;
            }
        }
        if (points_.size() == 2 && std::fabs(points_[0].val - points_[1].val) <= kCanonEps) {
            points_.pop_back();
        }
    }

    std::vector<Breakpoint> points_;
    double period_ = kDefaultPeriod;
};

/// Result of merging two travel time functions: the pointwise minimum plus
/// the win intervals of both inputs. Ties go to the first argument; the two
/// interval sets partition [0, period).
struct MergeResult {
    TravelTimeFunction fn;
    std::vector<TimeInterval> first_wins;
    std::vector<TimeInterval> second_wins;
};

namespace detail {

/// Converts a winner timeline over [0, period] into cyclic win intervals.
inline void timeline_to_intervals(const pwl::MergeRaw& raw, double period,
                                  std::vector<TimeInterval>& first_wins,
                                  std::vector<TimeInterval>& second_wins) {
    first_wins.clear();
    second_wins.clear();
    if (raw.events.empty()) {
        (raw.second_wins_first ? second_wins : first_wins).push_back({0.0, period});
        return;
    }
    // Build linear segments, then stitch the wrap (winner at period end equals
    // winner at 0 by periodicity of the inputs).
    struct Seg {
        double s, e;
        bool second;
    };
    std::vector<Seg> segs;
    double cur = 0.0;
    bool w = raw.second_wins_first;
    for (const auto& ev : raw.events) {
        segs.push_back({cur, ev.at, w});
        cur = ev.at;
        w = ev.second_wins;
    }
    segs.push_back({cur, period, w});
    if (segs.size() >= 2 && segs.front().second == segs.back().second) {
        // wrap interval
        segs.front().s = segs.back().s - period;
        segs.pop_back();
    }
    for (const auto& s : segs) {
        double start = s.s < 0.0 ? s.s + period : s.s;
        (s.second ? second_wins : first_wins).push_back({start, s.e});
    }
}

}  // namespace detail

/// Links f with g: result(tau) = f(tau) + g(tau + f(tau)). Both inputs must
/// be FIFO, strictly positive, and share the period.
inline TravelTimeFunction link(const TravelTimeFunction& f, const TravelTimeFunction& g) {
    if (f.empty() || g.empty()) throw std::invalid_argument("link on empty travel time function");
    if (f.period() != g.period()) throw std::invalid_argument("link with mismatched periods");
    if (f.min_value() <= 0.0 || g.min_value() <= 0.0)
        throw std::invalid_argument("travel time functions must be strictly positive");
    double p = f.period();
    if (f.size() == 1 && g.size() == 1)
        return TravelTimeFunction::constant(f.points()[0].val + g.points()[0].val, p);
    double t0 = f.points().front().at;
    auto cf = f.unroll(t0, t0 + p);
    double a0 = t0 + f.points().front().val;
    auto cg = g.unroll(a0 - 1e-9, a0 + p + 1e-9);
    std::vector<Breakpoint> out;
    pwl::link_curves(cf, cg, out);
    return TravelTimeFunction::fold_periodic(std::move(out), p);
}

/// Merges f and g (pointwise minimum) and reports where each one wins.
inline MergeResult merge(const TravelTimeFunction& f, const TravelTimeFunction& g) {
    if (f.empty() || g.empty()) throw std::invalid_argument("merge on empty travel time function");
    if (f.period() != g.period()) throw std::invalid_argument("merge with mismatched periods");
    double p = f.period();
    MergeResult res;
    auto cf = f.unroll(0.0, p);
    auto cg = g.unroll(0.0, p);
    std::vector<Breakpoint> out;
    auto raw = pwl::merge_curves(cf, cg, &out);
    res.fn = TravelTimeFunction::fold_periodic(std::move(out), p);
    detail::timeline_to_intervals(raw, p, res.first_wins, res.second_wins);
    return res;
}

/// Departure time tau with tau + f(tau) = arrival. On segments of arrival
/// slope zero (travel time slope exactly -1) the earliest preimage is
/// returned.
inline double invert_arrival(const TravelTimeFunction& f, double arrival) {
    if (f.empty()) throw std::invalid_argument("invert_arrival on empty function");
    const auto& pts = f.points();
    double p = f.period();
    if (pts.size() == 1) return arrival - pts[0].val;
    std::vector<double> arr(pts.size() + 1);
    for (std::size_t i = 0; i < pts.size(); ++i) arr[i] = pts[i].at + pts[i].val;
    arr[pts.size()] = pts[0].at + p + pts[0].val;
    double base = arr[0];
    double k = std::floor((arrival - base) / p);
    double a = arrival - k * p;
    if (a < base) {  // guard against fp boundary
        k -= 1.0;
        a = arrival - k * p;
    }
    std::size_t i = 0;
    while (i + 1 < arr.size() && arr[i + 1] < a) ++i;
    double t0 = pts[i].at;
    double t1 = i + 1 == pts.size() ? pts[0].at + p : pts[i + 1].at;
    double tau;
    if (arr[i + 1] <= arr[i]) {
        tau = t0;  // flat arrival segment: earliest preimage
    } else {
        tau = t0 + (a - arr[i]) * (t1 - t0) / (arr[i + 1] - arr[i]);
    }
    return tau + k * p;
}

}  // namespace catchup
