#pragma once

// Customization (phase 2): computes scalar bounds, exact time-dependent
// expansions, and transient travel time functions for all arcs of the
// augmented graph. Functions may be approximated by bound pairs during the
// pass; expansions stay exact because merges resolve intersections on
// exactly reconstructed windows.

#include <atomic>
#include <future>
#include <mutex>
#include <thread>

#include "catchup/bounds.hpp"
#include "catchup/contraction.hpp"
#include "catchup/shortcuts.hpp"

namespace catchup {

struct CustomizeConfig {
    double beta = 1000.0;   // approximate when a function exceeds this many breakpoints
    double epsilon = 1.0;   // approximation error in seconds
    unsigned threads = 1;
};

struct CustomizationCounters {
    std::atomic<std::uint64_t> triangles{0};
    std::atomic<std::uint64_t> links{0};
    std::atomic<std::uint64_t> link_prunes{0};
    std::atomic<std::uint64_t> merge_prunes{0};
    std::atomic<std::uint64_t> dominance_scans{0};
    std::atomic<std::uint64_t> merges{0};
    std::atomic<std::uint64_t> approximations{0};
    std::atomic<std::uint64_t> reconstructions{0};
    std::atomic<std::uint64_t> peak_live_fns{0};
    std::atomic<std::int64_t> live_fns{0};

    void note_live(std::int64_t delta) {
        auto now = live_fns.fetch_add(delta) + delta;
        auto peak = peak_live_fns.load();
        while (now > 0 && static_cast<std::uint64_t>(now) > peak &&
               !peak_live_fns.compare_exchange_weak(peak, static_cast<std::uint64_t>(now))) {
        }
    }
};

/// Scalar bounds per arc direction. `basic_*` bound the arc's own shortcut
/// profile (lower triangles only) and drive pruning during the
/// time-dependent pass; `lo`/`up` are perfect-customization bounds over the
/// whole hierarchy and are what queries use.
struct ScalarBounds {
    std::vector<double> basic_lo, basic_up;
    std::vector<double> lo, up;
    std::vector<std::uint8_t> removable;
};

namespace detail {

inline double input_min(const TDGraph& g, const AugmentedGraph& aug, ArcId slot, bool backward) {
    ArcId primary = backward ? aug.input_bwd[slot] : aug.input_fwd[slot];
    double v = primary == kInvalidArc ? kInfTime : g.ttf(primary).min_value();
    for (const auto& [s, b, in] : aug.extra_inputs)
        if (s == slot && b == backward) v = std::min(v, g.ttf(in).min_value());
    return v;
}
inline double input_max(const TDGraph& g, const AugmentedGraph& aug, ArcId slot, bool backward) {
    ArcId primary = backward ? aug.input_bwd[slot] : aug.input_fwd[slot];
    double v = primary == kInvalidArc ? kInfTime : g.ttf(primary).max_value();
    for (const auto& [s, b, in] : aug.extra_inputs)
        if (s == slot && b == backward) v = std::min(v, g.ttf(in).max_value());
    return v;
}

}  // namespace detail

/// Basic and perfect scalar customization on the min- and max-metric.
/// Flags an arc direction removable when a dominating alternative exists at
/// all times (the alternative's upper weight does not exceed the arc's own
/// lower bound) or when the direction is unreachable.
inline ScalarBounds scalar_precustomization(const AugmentedGraph& aug, const TDGraph& g) {
    ArcId m = aug.arc_count();
    ScalarBounds sb;
    sb.basic_lo.assign(2 * m, kInfTime);
    sb.basic_up.assign(2 * m, kInfTime);
    for (ArcId a = 0; a < m; ++a) {
        for (int d = 0; d < 2; ++d) {
            sb.basic_lo[2 * a + d] = detail::input_min(g, aug, a, d != 0);
            sb.basic_up[2 * a + d] = detail::input_max(g, aug, a, d != 0);
        }
    }
    auto fwd = [](ArcId a) { return 2 * a; };
    auto bwd = [](ArcId a) { return 2 * a + 1; };

    // basic pass: ascending over lower triangles
    for (NodeId u = 0; u < aug.n; ++u) {
        for (ArcId a = aug.out_begin(u); a < aug.out_end(u); ++a) {
            aug.for_lower_triangles(a, [&](NodeId, ArcId awu, ArcId awv) {
                for (auto* w : {&sb.basic_lo, &sb.basic_up}) {
                    auto& wt = *w;
                    wt[fwd(a)] = std::min(wt[fwd(a)], wt[bwd(awu)] + wt[fwd(awv)]);
                    wt[bwd(a)] = std::min(wt[bwd(a)], wt[bwd(awv)] + wt[fwd(awu)]);
                }
            });
        }
    }

    sb.lo = sb.basic_lo;
    sb.up = sb.basic_up;
    sb.removable.assign(2 * m, 0);
    std::vector<double> alt_up(2 * m, kInfTime);

    // perfect pass: descending over upper and intermediate triangles
    for (NodeId v = aug.n; v-- > 0;) {
        for (ArcId ia = aug.in_begin(v); ia < aug.in_end(v); ++ia) {
            ArcId a = aug.in_arc[ia];
            NodeId u = aug.tail[a];
            // walk u's upward arcs; match against v's in-list (intermediate
            // w < v) and v's out-list (upper w > v)
            ArcId iu = aug.out_begin(u);
            ArcId iv_in = aug.in_begin(v), iv_out = aug.out_begin(v);
            for (; iu < aug.out_end(u); ++iu) {
                NodeId w = aug.head[iu];
                if (w == v) continue;
                ArcId uw = iu;
                ArcId leg2 = kInvalidArc;
                bool upper_triangle = w > v;
                if (!upper_triangle) {
                    while (iv_in < aug.in_end(v) && aug.tail[aug.in_arc[iv_in]] < w) ++iv_in;
                    if (iv_in < aug.in_end(v) && aug.tail[aug.in_arc[iv_in]] == w) leg2 = aug.in_arc[iv_in];
                } else {
                    while (iv_out < aug.out_end(v) && aug.head[iv_out] < w) ++iv_out;
                    if (iv_out < aug.out_end(v) && aug.head[iv_out] == w) leg2 = iv_out;
                }
                if (leg2 == kInvalidArc) continue;
                // fwd (u -> w -> v) and bwd (v -> w -> u)
                std::size_t l1f = fwd(uw), l1b = bwd(uw);
                std::size_t l2f = upper_triangle ? bwd(leg2) : fwd(leg2);
                std::size_t l2b = upper_triangle ? fwd(leg2) : bwd(leg2);
                sb.lo[fwd(a)] = std::min(sb.lo[fwd(a)], sb.lo[l1f] + sb.lo[l2f]);
                sb.lo[bwd(a)] = std::min(sb.lo[bwd(a)], sb.lo[l2b] + sb.lo[l1b]);
                sb.up[fwd(a)] = std::min(sb.up[fwd(a)], sb.up[l1f] + sb.up[l2f]);
                sb.up[bwd(a)] = std::min(sb.up[bwd(a)], sb.up[l2b] + sb.up[l1b]);
                alt_up[fwd(a)] = std::min(alt_up[fwd(a)], sb.up[l1f] + sb.up[l2f]);
                alt_up[bwd(a)] = std::min(alt_up[bwd(a)], sb.up[l2b] + sb.up[l1b]);
            }
        }
    }
    for (std::size_t k = 0; k < 2 * m; ++k) {
        if (sb.basic_lo[k] == kInfTime || alt_up[k] <= sb.basic_lo[k]) sb.removable[k] = 1;
    }
    return sb;
}

// --- index -------------------------------------------------------------------

struct IndexMetadata {
    double beta = 1000.0;
    double epsilon = 1.0;
    std::uint64_t seed = 0;
    double phase1_seconds = 0.0;
    double phase2_seconds = 0.0;
    std::string graph_path;
};

/// The customized index: topology, elimination tree, per-direction bounds
/// and expansions. Everything queries need besides the input travel time
/// functions.
struct ShortcutIndex {
    AugmentedGraph aug;
    EliminationTree tree;
    SeparatorTree sep_tree;  // not serialized; used to re-run customization
    std::vector<double> lower, upper;       // per arc-direction key
    std::vector<std::uint8_t> removable;    // per arc-direction key
    std::vector<std::uint32_t> first_exp;   // 2m + 1
    std::vector<ExpansionEntry> exps;
    IndexMetadata meta;

    std::span<const ExpansionEntry> expansions(std::uint64_t key) const {
        return {exps.data() + first_exp[key], exps.data() + first_exp[key + 1]};
    }

    struct Resolver {
        const ShortcutIndex* idx;
        std::span<const ExpansionEntry> operator()(std::uint64_t key) const {
            return idx->expansions(key);
        }
    };
    Resolver resolver() const { return {this}; }

    struct ExpansionStats {
        double avg = 0.0;
        std::size_t max = 0;
        double single_pct = 0.0;
    };
    ExpansionStats expansion_stats() const {
        ExpansionStats s;
        std::size_t dirs = first_exp.size() - 1;
        std::size_t singles = 0;
        for (std::size_t k = 0; k < dirs; ++k) {
            std::size_t c = first_exp[k + 1] - first_exp[k];
            s.max = std::max(s.max, c);
            if (c == 1) ++singles;
        }
        s.avg = dirs ? static_cast<double>(exps.size()) / dirs : 0.0;
        s.single_pct = dirs ? 100.0 * static_cast<double>(singles) / dirs : 0.0;
        return s;
    }
};

// --- the time-dependent pass ---------------------------------------------------

namespace customization_detail {

struct WorkingFn {
    BoundPair fn;
    bool present = false;
};

struct Workspace {
    TtfBuffers bufs;
    std::vector<Breakpoint> scratch;
};

struct PassState {
    const TDGraph* g;
    const AugmentedGraph* aug;
    const ScalarBounds* sb;
    CustomizeConfig cfg;
    CustomizationCounters* counters;
    std::vector<std::vector<ExpansionEntry>>* working_exps;
    std::vector<WorkingFn>* fns;

    std::span<const ExpansionEntry> operator()(std::uint64_t key) const {
        return {(*working_exps)[key].data(), (*working_exps)[key].size()};
    }
};

/// true iff f(t) <= g(t) + kEqEps for all t (bound dominance sweep).
inline bool curve_le(const TravelTimeFunction& f, const TravelTimeFunction& g, Workspace& ws) {
    double p = f.period();
    auto cf = f.unroll(0.0, p);
    auto cg = g.unroll(0.0, p);
    std::size_t i = 0, j = 0;
    pwl::CurveCursor fc{cf}, gc{cg};
    while (i < cf.size() || j < cg.size()) {
        double t;
        if (j >= cg.size() || (i < cf.size() && cf[i].at <= cg[j].at)) t = cf[i++].at;
        else t = cg[j++].at;
        if (fc.advance_eval(t) > gc.advance_eval(t) + kEqEps) return false;
    }
    (void)ws;
    return true;
}

/// true iff f(t) < g(t) - kEqEps for all t: strict dominance, safe to
/// replace the current state wholesale without tie handling.
inline bool curve_lt_strict(const TravelTimeFunction& f, const TravelTimeFunction& g, Workspace& ws) {
    double p = f.period();
    auto cf = f.unroll(0.0, p);
    auto cg = g.unroll(0.0, p);
    std::size_t i = 0, j = 0;
    pwl::CurveCursor fc{cf}, gc{cg};
    while (i < cf.size() || j < cg.size()) {
        double t;
        if (j >= cg.size() || (i < cf.size() && cf[i].at <= cg[j].at)) t = cf[i++].at;
        else t = cg[j++].at;
        if (fc.advance_eval(t) >= gc.advance_eval(t) - kEqEps) return false;
    }
    (void)ws;
    return true;
}

/// Cyclic region list: start times with a flag telling whether the merge
/// candidate wins from there on.
struct Region {
    double start;
    bool candidate;
};

/// Rebuilds the expansion set from a cyclic region classification: regions
/// belonging to the candidate get its entry, the rest keep the clipped
/// current entries. Consecutive identical entries are merged.
inline std::vector<ExpansionEntry> splice_expansions(std::span<const ExpansionEntry> current,
                                                     const std::vector<Region>& regions,
                                                     const ExpansionEntry& cand, double period) {
    std::vector<ExpansionEntry> out;
    std::size_t r = 0;
    auto region_end = [&](std::size_t i) {
        return i + 1 < regions.size() ? regions[i + 1].start : regions.front().start + period;
    };
    for (; r < regions.size(); ++r) {
        double s = regions[r].start;
        double e = region_end(r);
        if (e - s <= 1e-9) continue;  // coalesced sliver
        if (regions[r].candidate) {
            out.push_back({s, cand.first, cand.second});
        } else {
            for_expansion_pieces(current, s, e, period, [&](const ExpansionEntry& entry, double a,
                                                            double b) {
                if (b - a <= 1e-9) return;
                out.push_back({a, entry.first, entry.second});
            });
        }
    }
    for (auto& e : out) {
        e.start = std::fmod(e.start, period);
        if (e.start < 0.0) e.start += period;
    }
    std::sort(out.begin(), out.end(),
              [](const ExpansionEntry& a, const ExpansionEntry& b) { return a.start < b.start; });
    // merge consecutive identical targets, cyclically
    std::vector<ExpansionEntry> dedup;
    for (const auto& e : out) {
        if (!dedup.empty() && dedup.back().same_target(e)) continue;
        if (!dedup.empty() && e.start - dedup.back().start <= 1e-9) {
            dedup.back() = e;  // degenerate sliver: later region wins
            continue;
        }
        dedup.push_back(e);
    }
    while (dedup.size() >= 2 && dedup.front().same_target(dedup.back())) dedup.erase(dedup.begin());
    return dedup;
}

/// Exact curve of a candidate over a window: original arcs are unrolled,
/// triangles reconstruct both legs and link them.
template <typename Resolver>
inline std::vector<Breakpoint> candidate_window_curve(const TDGraph& g, const Resolver& resolve,
                                                      const ExpansionEntry& cand, double w0, double w1,
                                                      TtfBuffers& bufs, UnpackStats* stats) {
    if (cand.is_original()) return g.ttf(cand.second).unroll(w0, w1);
    std::size_t mark = bufs.buf[0].size();
    auto f1 = detail::reconstruct_rec(g, resolve, first_leg_key(cand), w0, w1, bufs, 0, stats);
    std::span<const Breakpoint> c1(bufs.buf[0].data() + f1.first, f1.second - f1.first);
    double a2 = w0 + pwl::eval(c1, w0);
    double b2 = w1 + pwl::eval(c1, w1);
    auto f2 = detail::reconstruct_rec(g, resolve, second_leg_key(cand), a2, b2, bufs, 0, stats);
    std::span<const Breakpoint> s1(bufs.buf[0].data() + f1.first, f1.second - f1.first);
    std::span<const Breakpoint> s2(bufs.buf[0].data() + f2.first, f2.second - f2.first);
    std::vector<Breakpoint> out;
    pwl::link_curves(s1, s2, out);
    bufs.buf[0].resize(mark);
    return out;
}

struct ArcDirState {
    std::vector<ExpansionEntry>* exps;
    std::uint64_t self_key = 0;
    BoundPair fn;
    bool has_fn = false;
    double td_lo = kInfTime;  // min of fn.lower
    double td_up = kInfTime;  // min(basic upper, max of fn.upper)
};

inline void apply_threshold(ArcDirState& st, const CustomizeConfig& cfg,
                            CustomizationCounters& counters) {
    if (!st.has_fn || !std::isfinite(cfg.beta)) return;
    auto over = [&](const TravelTimeFunction& f) {
        return static_cast<double>(f.size()) > cfg.beta;
    };
    if (st.fn.exact) {
        if (over(st.fn.lower)) {
            st.fn = bound_pair(st.fn.lower, cfg.epsilon);
            ++counters.approximations;
        }
        return;
    }
    if (over(st.fn.lower)) {
        st.fn.lower = bound_pair(st.fn.lower, cfg.epsilon).lower;
        ++counters.approximations;
    }
    if (over(st.fn.upper)) {
        st.fn.upper = bound_pair(st.fn.upper, cfg.epsilon).upper;
        ++counters.approximations;
    }
}

inline void refresh_bounds(ArcDirState& st, double basic_up) {
    st.td_lo = st.fn.lower_fn().min_value();
    st.td_up = std::min(basic_up, st.fn.upper_fn().max_value());
}

/// Merges one candidate (an original arc or a linked lower triangle) into
/// the state: skips on certain dominance, otherwise merges with expansion
/// updates that are exact even when the stored functions are bound pairs.
inline void merge_candidate(const PassState& ps, ArcDirState& st, BoundPair cand,
                            const ExpansionEntry& cand_entry, double basic_up, Workspace& ws) {
    auto& counters = *ps.counters;
    double period = ps.g->period();
    if (!st.has_fn) {
        *st.exps = {{0.0, cand_entry.first, cand_entry.second}};
        st.fn = std::move(cand);
        st.has_fn = true;
        apply_threshold(st, ps.cfg, counters);
        refresh_bounds(st, basic_up);
        return;
    }
    double cand_lo_min = cand.lower_fn().min_value();
    double cand_up_max = cand.upper_fn().max_value();
    if (st.td_up <= cand_lo_min) {
        ++counters.merge_prunes;
        return;
    }
    if (cand_up_max < st.td_lo) {
        ++counters.merge_prunes;
        *st.exps = {{0.0, cand_entry.first, cand_entry.second}};
        st.fn = std::move(cand);
        apply_threshold(st, ps.cfg, counters);
        refresh_bounds(st, basic_up);
        return;
    }
    // pre-merge dominance sweep on the stored (possibly bound) functions
    ++counters.dominance_scans;
    if (curve_le(st.fn.upper_fn(), cand.lower_fn(), ws)) return;
    if (curve_lt_strict(cand.upper_fn(), st.fn.lower_fn(), ws)) {
        *st.exps = {{0.0, cand_entry.first, cand_entry.second}};
        st.fn = std::move(cand);
        apply_threshold(st, ps.cfg, counters);
        refresh_bounds(st, basic_up);
        return;
    }

    ++counters.merges;
    std::vector<Region> regions;
    TravelTimeFunction new_lower, new_upper;
    bool exact_merge = st.fn.exact && cand.exact;
    if (exact_merge) {
        auto cf = st.fn.lower.unroll(0.0, period);
        auto cg = cand.lower.unroll(0.0, period);
        std::vector<Breakpoint> min_curve;
        auto raw = pwl::merge_curves(cf, cg, &min_curve);
        new_lower = TravelTimeFunction::fold_periodic(std::move(min_curve), period);
        regions.push_back({0.0, raw.second_wins_first});
        for (const auto& e : raw.events) regions.push_back({e.at, e.second_wins});
    } else {
        auto windows = overlap_windows(st.fn, cand);
        // normalize wrapping windows onto the linear axis
        std::vector<TimeInterval> lin;
        for (const auto& w : windows) {
            if (w.start <= w.end) {
                lin.push_back(w);
            } else {
                lin.push_back({0.0, w.end});
                lin.push_back({w.start, period});
            }
        }
        std::sort(lin.begin(), lin.end(),
                  [](const TimeInterval& a, const TimeInterval& b) { return a.start < b.start; });
        double cursor = 0.0;
        auto classify_gap = [&](double s, double e) {
            if (e - s <= 1e-12) return;
            double mid = 0.5 * (s + e);
            bool current_dominates = st.fn.upper_fn().evaluate(mid) <= cand.lower_fn().evaluate(mid) + kEqEps;
            regions.push_back({s, !current_dominates});
        };
        for (const auto& w : lin) {
            if (w.start > cursor) classify_gap(cursor, w.start);
            double w0 = std::max(w.start, 0.0), w1 = std::min(w.end, period);
            if (w1 - w0 > 1e-12) {
                // resolve exactly inside the window
                counters.reconstructions += 2;
                UnpackStats stats;
                std::uint64_t self_key = 0;
                // the state's own key is recoverable from its expansion list
                // pointer, but reconstructing via the pass resolver needs the
                // key; it is supplied through st.exps (see process_arc_dir).
                self_key = st.self_key;
                auto cur_curve = reconstruct_ttf(*ps.g, ps, self_key, w0, w1, ws.bufs, &stats);
                auto cand_curve = candidate_window_curve(*ps.g, ps, cand_entry, w0, w1, ws.bufs, &stats);
                auto raw = pwl::merge_curves(cur_curve, cand_curve, nullptr);
                regions.push_back({w0, raw.second_wins_first});
                for (const auto& e : raw.events)
                    if (e.at < w1) regions.push_back({e.at, e.second_wins});
            }
            cursor = std::max(cursor, w.end);
        }
        if (cursor < period) classify_gap(cursor, period);
        new_lower = merge(st.fn.lower_fn(), cand.lower_fn()).fn;
        new_upper = merge(st.fn.upper_fn(), cand.upper_fn()).fn;
    }

    // drop duplicate-flag regions
    std::vector<Region> packed;
    for (const auto& r : regions) {
        if (!packed.empty() && packed.back().candidate == r.candidate) continue;
        packed.push_back(r);
    }
    if (packed.empty()) packed.push_back({0.0, false});
    *st.exps = splice_expansions({st.exps->data(), st.exps->size()}, packed, cand_entry, period);
    st.fn.lower = std::move(new_lower);
    if (exact_merge) {
        st.fn.exact = true;
    } else {
        st.fn.upper = std::move(new_upper);
        st.fn.exact = false;
    }
    apply_threshold(st, ps.cfg, counters);
    refresh_bounds(st, basic_up);
}

/// Seeds the direction's state from the input arcs mapped onto this slot,
/// then relaxes all lower triangles in ascending bound order with pruning.
inline void process_arc_dir(const PassState& ps, ArcId a, bool backward, Workspace& ws) {
    const auto& aug = *ps.aug;
    const auto& sb = *ps.sb;
    std::uint64_t key = (std::uint64_t(a) << 1) | (backward ? 1u : 0u);
    ArcDirState st;
    st.exps = &(*ps.working_exps)[key];
    st.self_key = key;
    double basic_up = sb.basic_up[key];

    // original input arcs (plus parallels) seed the state
    ArcId primary = backward ? aug.input_bwd[a] : aug.input_fwd[a];
    if (primary != kInvalidArc) {
        merge_candidate(ps, st, BoundPair::exactly(ps.g->ttf(primary)),
                        {0.0, kInvalidArc, primary}, basic_up, ws);
    }
    for (const auto& [slot, b, in] : aug.extra_inputs) {
        if (slot == a && b == backward)
            merge_candidate(ps, st, BoundPair::exactly(ps.g->ttf(in)), {0.0, kInvalidArc, in},
                            basic_up, ws);
    }

    struct Tri {
        double key;
        NodeId w;
        std::uint64_t leg1, leg2;
        ArcId first, second;
    };
    std::vector<Tri> tris;
    aug.for_lower_triangles(a, [&](NodeId w, ArcId awu, ArcId awv) {
        std::uint64_t l1, l2;
        ArcId e1, e2;
        if (!backward) {  // u -> w -> v
            l1 = (std::uint64_t(awu) << 1) | 1u;
            l2 = std::uint64_t(awv) << 1;
            e1 = awu;
            e2 = awv;
        } else {  // v -> w -> u
            l1 = (std::uint64_t(awv) << 1) | 1u;
            l2 = std::uint64_t(awu) << 1;
            e1 = awv;
            e2 = awu;
        }
        double k = sb.basic_lo[l1] + sb.basic_lo[l2];
        if (k == kInfTime) return;
        tris.push_back({k, w, l1, l2, e1, e2});
    });
    std::sort(tris.begin(), tris.end(), [](const Tri& x, const Tri& y) {
        return x.key < y.key || (x.key == y.key && x.w < y.w);
    });
    for (std::size_t i = 0; i < tris.size(); ++i) {
        ++ps.counters->triangles;
        if (st.has_fn && st.td_up <= tris[i].key) {
            ps.counters->link_prunes += tris.size() - i;
            break;
        }
        const auto& f1 = (*ps.fns)[tris[i].leg1];
        const auto& f2 = (*ps.fns)[tris[i].leg2];
        assert(f1.present && f2.present);
        ++ps.counters->links;
        auto linked = link_bounds(f1.fn, f2.fn);
        merge_candidate(ps, st, std::move(linked), {0.0, tris[i].first, tris[i].second}, basic_up, ws);
    }

    if (!st.has_fn) {
        *st.exps = {{0.0, kInvalidArc, kInvalidArc}};
    } else {
        auto& slot_fn = (*ps.fns)[key];
        slot_fn.fn = std::move(st.fn);
        slot_fn.present = true;
        ps.counters->note_live(+1);
    }
}

inline void process_node(const PassState& ps, NodeId u, Workspace& ws) {
    const auto& aug = *ps.aug;
    for (ArcId a = aug.out_begin(u); a < aug.out_end(u); ++a) {
        process_arc_dir(ps, a, false, ws);
        process_arc_dir(ps, a, true, ws);
    }
    // drop travel time functions of arcs whose higher endpoint is u
    for (ArcId ia = aug.in_begin(u); ia < aug.in_end(u); ++ia) {
        ArcId a = aug.in_arc[ia];
        for (int d = 0; d < 2; ++d) {
            auto& f = (*ps.fns)[2 * a + d];
            if (f.present) {
                f.fn = BoundPair{};
                f.present = false;
                ps.counters->note_live(-1);
            }
        }
    }
}

}  // namespace customization_detail

/// One lower triangle relaxation per the customization schema: links the
/// triangle legs, merges into the state, tightens bounds, updates
/// expansions. `state_exps`/`state_fn` are the shortcut's working data;
/// exposed for tests and reused by the profile query's contraction phase.
struct ShortcutState {
    std::vector<ExpansionEntry> exps;
    BoundPair fn;
    bool has_fn = false;
    double lower = kInfTime;
    double upper = kInfTime;
    bool removable = false;
};

template <typename Resolver>
inline void lower_triangle_relax(const TDGraph& g, const Resolver&, ShortcutState&, const BoundPair&,
                                 const BoundPair&) = delete;  // see customize(); kept monomorphic below

struct CustomizationResult {
    ShortcutIndex index;
    CustomizationCounters counters;
    double seconds = 0.0;
};

namespace customization_detail {

/// Node levels: a node's level is one more than the maximum level of its
/// downward neighbors (zero without any). Arcs whose tails share a level
/// never depend on each other and may be processed in parallel.
inline std::vector<std::uint32_t> node_levels(const AugmentedGraph& aug) {
    std::vector<std::uint32_t> level(aug.n, 0);
    for (NodeId u = 0; u < aug.n; ++u) {
        std::uint32_t l = 0;
        for (ArcId ia = aug.in_begin(u); ia < aug.in_end(u); ++ia)
            l = std::max(l, level[aug.tail[aug.in_arc[ia]]] + 1);
        level[u] = l;
    }
    return level;
}

template <typename F>
inline void parallel_over(const std::vector<NodeId>& nodes, unsigned threads, F&& f) {
    if (threads <= 1 || nodes.size() < 2) {
        for (NodeId u : nodes) f(u);
        return;
    }
    unsigned t = std::min<unsigned>(threads, static_cast<unsigned>(nodes.size()));
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (unsigned i = 0; i < t; ++i) {
        pool.emplace_back([&]() {
            for (;;) {
                std::size_t k = next.fetch_add(1);
                if (k >= nodes.size()) return;
                f(nodes[k]);
            }
        });
    }
    for (auto& th : pool) th.join();
}

struct TaskScheduler {
    const PassState* ps;
    const SeparatorTree* tree;
    const std::vector<std::uint32_t>* levels;
    std::size_t seq_threshold;
    std::atomic<int> spawn_budget;

    void run_range_sequential(Rank lo, Rank hi) {
        Workspace ws;
        for (Rank u = lo; u < hi; ++u) process_node(*ps, u, ws);
    }

    void run_cell(int cell_idx) {
        const auto& cell = tree->cells[cell_idx];
        std::size_t size = cell.hi - cell.lo;
        if (cell.children.empty() || size <= seq_threshold) {
            run_range_sequential(cell.lo, cell.hi);
            return;
        }
        // child cells first, possibly in parallel
        std::vector<std::future<void>> futures;
        for (std::size_t i = 1; i < cell.children.size(); ++i) {
            int child = cell.children[i];
            if (spawn_budget.fetch_sub(1) > 0) {
                futures.push_back(std::async(std::launch::async, [this, child] { run_cell(child); }));
            } else {
                spawn_budget.fetch_add(1);
                run_cell(child);
            }
        }
        run_cell(cell.children[0]);
        for (auto& f : futures) f.get();
        // then the separator, level by level with loop parallelism
        Rank sep_lo = cell.hi - static_cast<Rank>(cell.separator);
        std::vector<NodeId> sep;
        for (Rank u = sep_lo; u < cell.hi; ++u) sep.push_back(u);
        std::stable_sort(sep.begin(), sep.end(),
                         [&](NodeId a, NodeId b) { return (*levels)[a] < (*levels)[b]; });
        std::size_t i = 0;
        while (i < sep.size()) {
            std::size_t j = i;
            while (j < sep.size() && (*levels)[sep[j]] == (*levels)[sep[i]]) ++j;
            std::vector<NodeId> group(sep.begin() + i, sep.begin() + j);
            unsigned threads = ps->cfg.threads;
            parallel_over(group, threads, [&](NodeId u) {
                thread_local Workspace ws;
                process_node(*ps, u, ws);
            });
            i = j;
        }
    }
};

}  // namespace customization_detail

/// Full customization: scalar pre-customization, then the time-dependent
/// pass over the separator task tree (sequential when threads == 1 or no
/// tree is available). Output is independent of (beta, epsilon, threads) up
/// to the intersection tolerance.
inline CustomizationResult customize(const AugmentedGraph& aug, const TDGraph& g,
                                     const CustomizeConfig& cfg, const SeparatorTree& tree = {}) {
    using namespace customization_detail;
    auto t0 = std::chrono::steady_clock::now();
    CustomizationResult out;
    auto sb = scalar_precustomization(aug, g);

    ArcId m = aug.arc_count();
    std::vector<std::vector<ExpansionEntry>> working(2 * m);
    std::vector<WorkingFn> fns(2 * m);
    PassState ps{&g, &aug, &sb, cfg, &out.counters, &working, &fns};

    constexpr unsigned kAlpha = 32;  // task-size tuning parameter
    if (cfg.threads <= 1 || tree.empty()) {
        Workspace ws;
        if (tree.empty() && cfg.threads > 1) {
            // no separator tree (external order): loop parallelism by level
            auto levels = node_levels(aug);
            std::uint32_t max_level = 0;
            for (auto l : levels) max_level = std::max(max_level, l);
            std::vector<std::vector<NodeId>> by_level(max_level + 1);
            for (NodeId u = 0; u < aug.n; ++u) by_level[levels[u]].push_back(u);
            for (auto& group : by_level)
                parallel_over(group, cfg.threads, [&](NodeId u) {
                    thread_local Workspace tws;
                    process_node(ps, u, tws);
                });
        } else {
            for (NodeId u = 0; u < aug.n; ++u) process_node(ps, u, ws);
        }
    } else {
        auto levels = node_levels(aug);
        TaskScheduler sched{&ps, &tree, &levels,
                            std::max<std::size_t>(1, aug.n / (kAlpha * cfg.threads)),
                            {static_cast<int>(2 * cfg.threads)}};
        std::vector<std::future<void>> futures;
        for (std::size_t i = 1; i < tree.top_cells.size(); ++i) {
            int cell = tree.top_cells[i];
            futures.push_back(std::async(std::launch::async, [&sched, cell] { sched.run_cell(cell); }));
        }
        if (!tree.top_cells.empty()) sched.run_cell(tree.top_cells[0]);
        for (auto& f : futures) f.get();
    }
    assert(out.counters.live_fns.load() == 0);

    // assemble the index
    auto& idx = out.index;
    idx.aug = aug;
    idx.tree = build_elimination_tree(aug);
    idx.sep_tree = tree;
    idx.lower = std::move(sb.lo);
    idx.upper = std::move(sb.up);
    idx.removable = std::move(sb.removable);
    idx.first_exp.assign(2 * m + 1, 0);
    for (std::size_t k = 0; k < working.size(); ++k)
        idx.first_exp[k + 1] = idx.first_exp[k] + static_cast<std::uint32_t>(working[k].size());
    idx.exps.reserve(idx.first_exp.back());
    for (const auto& w : working) idx.exps.insert(idx.exps.end(), w.begin(), w.end());
    idx.meta.beta = cfg.beta;
    idx.meta.epsilon = cfg.epsilon;
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    idx.meta.phase2_seconds = out.seconds;
    return out;
}

}  // namespace catchup
