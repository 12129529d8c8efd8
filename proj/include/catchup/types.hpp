#pragma once

#include <cstdint>
#include <limits>

namespace catchup {

using NodeId = std::uint32_t;
using ArcId = std::uint32_t;
using Rank = std::uint32_t;

constexpr NodeId kInvalidNode = 0xFFFFFFFFu;
constexpr ArcId kInvalidArc = 0xFFFFFFFFu;
constexpr double kInfTime = std::numeric_limits<double>::infinity();

/// Engine-wide default period of the travel time predictions (one day).
constexpr double kDefaultPeriod = 86400.0;

/// Two travel times are considered equal within this tolerance; intersections
/// closer together than this are coalesced.
constexpr double kEqEps = 1e-6;

/// Collinear breakpoints deviating by no more than this are dropped.
constexpr double kCanonEps = 1e-9;

/// Slack for FIFO slope checks (slope >= -1 - kFifoEps).
constexpr double kFifoEps = 1e-12;

/// An arc of the augmented graph together with a traversal direction.
/// Forward means from the lower ranked endpoint to the higher ranked one.
struct ArcDir {
    ArcId arc = kInvalidArc;
    bool backward = false;

    friend bool operator==(const ArcDir&, const ArcDir&) = default;
};

inline std::uint64_t arc_dir_key(ArcDir ad) {
    return (static_cast<std::uint64_t>(ad.arc) << 1) | (ad.backward ? 1u : 0u);
}

}  // namespace catchup
