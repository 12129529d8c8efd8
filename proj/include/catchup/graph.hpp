#pragma once

// Time-dependent road network model: CSR topology with one travel time
// function per arc, validation, and bit-exact binary file I/O.

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "catchup/ttf.hpp"
#include "catchup/types.hpp"

namespace catchup {

struct QuerySpec {
    NodeId source = 0;
    NodeId target = 0;
    double departure = 0.0;  // ignored by profile queries
};

class TDGraph {
  public:
    TDGraph() = default;
    TDGraph(NodeId n, std::vector<ArcId> first_out, std::vector<NodeId> head,
            std::vector<TravelTimeFunction> ttf, double period = kDefaultPeriod)
        : n_(n),
          first_out_(std::move(first_out)),
          head_(std::move(head)),
          ttf_(std::move(ttf)),
          period_(period) {}

    /// Convenience builder from an arc list (tail, head, function).
    static TDGraph from_arcs(NodeId n,
                             std::vector<std::tuple<NodeId, NodeId, TravelTimeFunction>> arcs,
                             double period = kDefaultPeriod) {
        std::stable_sort(arcs.begin(), arcs.end(), [](const auto& a, const auto& b) {
            return std::get<0>(a) < std::get<0>(b);
        });
        std::vector<ArcId> first_out(n + 1, 0);
        std::vector<NodeId> head;
        std::vector<TravelTimeFunction> ttf;
        for (const auto& [t, h, f] : arcs) {
            (void)h;
            (void)f;
            ++first_out[t + 1];
        }
        for (NodeId v = 0; v < n; ++v) first_out[v + 1] += first_out[v];
        head.reserve(arcs.size());
        ttf.reserve(arcs.size());
        for (auto& [t, h, f] : arcs) {
            head.push_back(h);
            ttf.push_back(std::move(f));
        }
        return TDGraph(n, std::move(first_out), std::move(head), std::move(ttf), period);
    }

    NodeId node_count() const { return n_; }
    ArcId arc_count() const { return static_cast<ArcId>(head_.size()); }
    double period() const { return period_; }

    ArcId out_begin(NodeId v) const { return first_out_[v]; }
    ArcId out_end(NodeId v) const { return first_out_[v + 1]; }
    NodeId head(ArcId a) const { return head_[a]; }
    const TravelTimeFunction& ttf(ArcId a) const { return ttf_[a]; }
    const std::vector<ArcId>& first_out() const { return first_out_; }

    NodeId tail(ArcId a) const {
        // binary search over first_out
        auto it = std::upper_bound(first_out_.begin(), first_out_.end(), a);
        return static_cast<NodeId>(it - first_out_.begin() - 1);
    }

  private:
    NodeId n_ = 0;
    std::vector<ArcId> first_out_{0};
    std::vector<NodeId> head_;
    std::vector<TravelTimeFunction> ttf_;
    double period_ = kDefaultPeriod;
};

struct ValidationIssue {
    enum Kind { FifoViolation, NonPositiveValue, UnsortedBreakpoints, HeadOutOfRange };
    Kind kind;
    ArcId arc;
    std::string detail;
};

/// Lists arcs violating FIFO, positivity, or breakpoint ordering. Empty
/// report iff the graph is valid.
inline std::vector<ValidationIssue> validate(const TDGraph& g) {
    std::vector<ValidationIssue> issues;
    for (ArcId a = 0; a < g.arc_count(); ++a) {
        if (g.head(a) >= g.node_count()) {
            issues.push_back({ValidationIssue::HeadOutOfRange, a, "head id out of range"});
            continue;
        }
        const auto& f = g.ttf(a);
        const auto& pts = f.points();
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            if (pts[i + 1].at <= pts[i].at) {
                issues.push_back({ValidationIssue::UnsortedBreakpoints, a, "breakpoints not strictly increasing"});
                break;
            }
        }
        for (const auto& p : pts) {
            if (!(p.val > 0.0)) {
                issues.push_back({ValidationIssue::NonPositiveValue, a,
                                  "travel time " + std::to_string(p.val) + " at " + std::to_string(p.at)});
                break;
            }
        }
        if (!f.is_fifo()) {
            issues.push_back({ValidationIssue::FifoViolation, a, "segment slope below -1"});
        }
    }
    return issues;
}

struct DelayStats {
    double all_arcs_pct = 0.0;  // sum(max f - min f) / sum(min f) over all arcs
    double td_arcs_pct = 0.0;   // same, restricted to non-constant arcs
    double td_fraction = 0.0;   // fraction of arcs with non-constant function
    double avg_td_points = 0.0; // average |f| among non-constant arcs
};

inline DelayStats relative_total_delay(const TDGraph& g) {
    DelayStats s;
    double delay_all = 0.0, min_all = 0.0, delay_td = 0.0, min_td = 0.0;
    std::size_t td = 0, td_points = 0;
    for (ArcId a = 0; a < g.arc_count(); ++a) {
        const auto& f = g.ttf(a);
        double lo = f.min_value(), hi = f.max_value();
        delay_all += hi - lo;
        min_all += lo;
        if (f.size() > 1) {
            ++td;
            td_points += f.size();
            delay_td += hi - lo;
            min_td += lo;
        }
    }
    s.all_arcs_pct = min_all > 0.0 ? 100.0 * delay_all / min_all : 0.0;
    s.td_arcs_pct = min_td > 0.0 ? 100.0 * delay_td / min_td : 0.0;
    s.td_fraction = g.arc_count() ? static_cast<double>(td) / g.arc_count() : 0.0;
    s.avg_td_points = td ? static_cast<double>(td_points) / td : 0.0;
    return s;
}

// --- binary file format ------------------------------------------------------
//
// Little-endian: magic "CTCH", u32 version=1, u32 n, u32 m, f64 period,
// first_out u32[n+1], head u32[m], first_ipp u32[m+1], ipp_at f64[k],
// ipp_val f64[k]. Constant arcs are stored as a single breakpoint at t=0.

namespace io {

inline void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
inline void write_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }
inline std::uint32_t read_u32(std::istream& is, const char* what) {
    std::uint32_t v;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is) throw std::runtime_error(std::string("truncated file: missing ") + what);
    return v;
}
inline double read_f64(std::istream& is, const char* what) {
    double v;
    is.read(reinterpret_cast<char*>(&v), 8);
    if (!is) throw std::runtime_error(std::string("truncated file: missing ") + what);
    return v;
}
template <typename T>
inline void write_array(std::ostream& os, const std::vector<T>& v) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}
template <typename T>
inline std::vector<T> read_array(std::istream& is, std::size_t count, const char* what) {
    std::vector<T> v(count);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(T)));
    if (!is) throw std::runtime_error(std::string("truncated file: missing ") + what);
    return v;
}

}  // namespace io

inline void save(const TDGraph& g, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write("CTCH", 4);
    io::write_u32(os, 1);
    io::write_u32(os, g.node_count());
    io::write_u32(os, g.arc_count());
    io::write_f64(os, g.period());
    io::write_array(os, g.first_out());
    std::vector<NodeId> heads(g.arc_count());
    for (ArcId a = 0; a < g.arc_count(); ++a) heads[a] = g.head(a);
    io::write_array(os, heads);
    std::vector<std::uint32_t> first_ipp(g.arc_count() + 1, 0);
    for (ArcId a = 0; a < g.arc_count(); ++a)
        first_ipp[a + 1] = first_ipp[a] + static_cast<std::uint32_t>(g.ttf(a).size());
    io::write_array(os, first_ipp);
    std::vector<double> at, val;
    at.reserve(first_ipp.back());
    val.reserve(first_ipp.back());
    for (ArcId a = 0; a < g.arc_count(); ++a) {
        for (const auto& p : g.ttf(a).points()) {
            at.push_back(p.at);
            val.push_back(p.val);
        }
    }
    io::write_array(os, at);
    io::write_array(os, val);
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline TDGraph load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "CTCH", 4) != 0)
        throw std::runtime_error("malformed header: bad magic in " + path);
    std::uint32_t version = io::read_u32(is, "version");
    if (version != 1) throw std::runtime_error("unsupported graph file version " + std::to_string(version));
    std::uint32_t n = io::read_u32(is, "node count");
    std::uint32_t m = io::read_u32(is, "arc count");
    double period = io::read_f64(is, "period");
    auto first_out = io::read_array<ArcId>(is, n + 1, "first_out section");
    auto head = io::read_array<NodeId>(is, m, "head section");
    auto first_ipp = io::read_array<std::uint32_t>(is, m + 1, "first_ipp section");
    if (first_out[n] != m) throw std::runtime_error("malformed first_out: does not end at arc count");
    for (std::uint32_t v = 0; v < n; ++v)
        if (first_out[v] > first_out[v + 1]) throw std::runtime_error("malformed first_out: not monotone");
    std::size_t k = first_ipp[m];
    auto at = io::read_array<double>(is, k, "ipp_at section");
    auto val = io::read_array<double>(is, k, "ipp_val section");
    std::vector<TravelTimeFunction> ttf;
    ttf.reserve(m);
    for (std::uint32_t a = 0; a < m; ++a) {
        if (head[a] >= n)
            throw std::runtime_error("arc " + std::to_string(a) + ": head index out of range");
        if (first_ipp[a] >= first_ipp[a + 1])
            throw std::runtime_error("arc " + std::to_string(a) + ": empty travel time function");
        std::vector<Breakpoint> pts;
        pts.reserve(first_ipp[a + 1] - first_ipp[a]);
        for (std::uint32_t i = first_ipp[a]; i < first_ipp[a + 1]; ++i) pts.push_back({at[i], val[i]});
        TravelTimeFunction f;
        try {
            f = TravelTimeFunction::from_points(std::move(pts), period);
        } catch (const std::exception& e) {
            throw std::runtime_error("arc " + std::to_string(a) + ": " + e.what());
        }
        if (!f.is_fifo())
            throw std::runtime_error("arc " + std::to_string(a) + ": FIFO violation");
        if (!f.strictly_positive())
            throw std::runtime_error("arc " + std::to_string(a) + ": non-positive travel time");
        ttf.push_back(std::move(f));
    }
    return TDGraph(n, std::move(first_out), std::move(head), std::move(ttf), period);
}

/// Query files are text: one `source target departure` triple per line
/// (departure omitted for profile query sets).
inline std::vector<QuerySpec> load_queries(const std::string& path, bool with_departure = true) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::vector<QuerySpec> qs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        QuerySpec q;
        if (!(ls >> q.source >> q.target))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected `source target`");
        if (with_departure && !(ls >> q.departure))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected departure time");
        qs.push_back(q);
    }
    return qs;
}

inline void save_queries(const std::vector<QuerySpec>& qs, const std::string& path,
                         bool with_departure = true) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& q : qs) {
        os << q.source << ' ' << q.target;
        if (with_departure) os << ' ' << q.departure;
        os << '\n';
    }
}

}  // namespace catchup
