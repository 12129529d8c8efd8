#include "catchup/ttf.hpp"

#include <gtest/gtest.h>

#include <random>

#include "catchup/bounds.hpp"
#include "test_util.hpp"

using namespace catchup;
using testutil::interval_contains;
using testutil::random_fifo;
using testutil::total_measure;

namespace {

TravelTimeFunction fn(std::vector<Breakpoint> pts, double period = kDefaultPeriod) {
    return TravelTimeFunction::from_points(std::move(pts), period);
}

TEST(Evaluate, ConstantEverywhere) {
    auto f = fn({{0, 10}});
    EXPECT_DOUBLE_EQ(f.evaluate(55555), 10.0);
    EXPECT_DOUBLE_EQ(f.evaluate(-3.0), 10.0);
}

TEST(Evaluate, LinearSegmentMidpoint) {
    auto f = fn({{0, 10}, {43200, 20}});
    EXPECT_DOUBLE_EQ(f.evaluate(21600), 15.0);
}

TEST(Evaluate, WrapSegmentMidpoint) {
    auto f = fn({{0, 10}, {43200, 20}});
    EXPECT_DOUBLE_EQ(f.evaluate(64800), 15.0);
}

TEST(Evaluate, EmptyFunctionIsUsageError) {
    TravelTimeFunction f;
    EXPECT_THROW(f.evaluate(0.0), std::logic_error);
}

TEST(Link, ConstantsAdd) {
    auto r = link(TravelTimeFunction::constant(2), TravelTimeFunction::constant(3));
    ASSERT_EQ(r.size(), 1u);
    EXPECT_DOUBLE_EQ(r.evaluate(12345), 5.0);
}

TEST(Link, RejectsNonPositive) {
    auto z = fn({{0, 0.0}});
    EXPECT_THROW(link(z, TravelTimeFunction::constant(3)), std::invalid_argument);
}

TEST(Link, ConstantSecondShiftsValues) {
    auto f = fn({{0, 10}, {43200, 20}});
    auto g = fn({{0, 100}});
    auto r = link(f, g);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_DOUBLE_EQ(r.points()[0].at, 0.0);
    EXPECT_DOUBLE_EQ(r.points()[0].val, 110.0);
    EXPECT_DOUBLE_EQ(r.points()[1].at, 43200.0);
    EXPECT_DOUBLE_EQ(r.points()[1].val, 120.0);
}

TEST(Link, PointwiseFormulaOracle) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> ud(0.0, kDefaultPeriod);
    for (int rep = 0; rep < 20; ++rep) {
        auto f = random_fifo(rng, 20);
        auto g = random_fifo(rng, 20);
        auto r = link(f, g);
        EXPECT_TRUE(r.is_fifo());
        EXPECT_LE(r.size(), f.size() + g.size() + 2);
        for (int i = 0; i < 1000; ++i) {
            double tau = ud(rng);
            double expect = f.evaluate(tau) + g.evaluate(tau + f.evaluate(tau));
            double got = r.evaluate(tau);
            EXPECT_NEAR(got, expect, 1e-9 * std::max(1.0, std::fabs(expect)));
        }
    }
}

TEST(Merge, ConstantDominance) {
    auto r = merge(TravelTimeFunction::constant(5), TravelTimeFunction::constant(7));
    EXPECT_DOUBLE_EQ(r.fn.evaluate(0), 5.0);
    ASSERT_EQ(r.first_wins.size(), 1u);
    EXPECT_DOUBLE_EQ(r.first_wins[0].start, 0.0);
    EXPECT_DOUBLE_EQ(r.first_wins[0].end, kDefaultPeriod);
    EXPECT_TRUE(r.second_wins.empty());
}

TEST(Merge, CrossingIntervals) {
    auto f = TravelTimeFunction::constant(10);
    auto g = fn({{0, 5}, {43200, 15}});
    auto r = merge(f, g);
    ASSERT_EQ(r.first_wins.size(), 1u);
    ASSERT_EQ(r.second_wins.size(), 1u);
    EXPECT_NEAR(r.first_wins[0].start, 21600.0, 1e-6);
    EXPECT_NEAR(r.first_wins[0].end, 64800.0, 1e-6);
    EXPECT_NEAR(r.second_wins[0].start, 64800.0, 1e-6);  // wraps to 21600
    EXPECT_NEAR(r.second_wins[0].end, 21600.0, 1e-6);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ud(0.0, kDefaultPeriod);
    for (int i = 0; i < 10000; ++i) {
        double tau = ud(rng);
        double expect = std::min(f.evaluate(tau), g.evaluate(tau));
        EXPECT_NEAR(r.fn.evaluate(tau), expect, 1e-9 * std::max(1.0, expect));
        bool in_f = interval_contains(r.first_wins[0], tau, kDefaultPeriod);
        double fv = f.evaluate(tau), gv = g.evaluate(tau);
        if (std::fabs(fv - gv) > 1e-5) EXPECT_EQ(in_f, fv < gv) << "tau=" << tau;
    }
}

TEST(Merge, TiePrefersFirstArgument) {
    auto f = fn({{0, 10}, {43200, 20}});
    auto r = merge(f, f);
    ASSERT_EQ(r.first_wins.size(), 1u);
    EXPECT_TRUE(r.second_wins.empty());
    EXPECT_EQ(r.fn, f);
}

TEST(Merge, RandomPointwiseMinOracleAndPartition) {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> ud(0.0, kDefaultPeriod);
    for (int rep = 0; rep < 20; ++rep) {
        auto f = random_fifo(rng, 25);
        auto g = random_fifo(rng, 25);
        auto r = merge(f, g);
        EXPECT_TRUE(r.fn.is_fifo());
        EXPECT_TRUE(testutil::canonical(r.fn));
        double measure = total_measure(r.first_wins, kDefaultPeriod) +
                         total_measure(r.second_wins, kDefaultPeriod);
        EXPECT_NEAR(measure, kDefaultPeriod, 1e-6);
        for (int i = 0; i < 10000; ++i) {
            double tau = ud(rng);
            double expect = std::min(f.evaluate(tau), g.evaluate(tau));
            EXPECT_NEAR(r.fn.evaluate(tau), expect, 1e-9 * std::max(1.0, expect));
        }
    }
}

TEST(DouglasPeucker, TwoPointsUnchanged) {
    auto f = fn({{0, 10}, {43200, 40000}});
    EXPECT_EQ(douglas_peucker(f, 5.0), f);
}

TEST(DouglasPeucker, CollinearTripleDropped) {
    auto f = fn({{0, 10}, {100, 11}, {200, 12}});
    auto r = douglas_peucker(f, 0.5);
    for (const auto& p : r.points()) EXPECT_NE(p.at, 100.0);
}

TEST(DouglasPeucker, SampledErrorWithinEps) {
    std::mt19937_64 rng(99);
    auto f = random_fifo(rng, 10000, 3000.0, 0.6);
    auto r = douglas_peucker(f, 1.0);
    EXPECT_LT(r.size(), f.size());
    std::uniform_real_distribution<double> ud(0.0, kDefaultPeriod);
    for (int i = 0; i < 100000; ++i) {
        double tau = ud(rng);
        EXPECT_NEAR(r.evaluate(tau), f.evaluate(tau), 1.0 + 1e-9);
    }
}

TEST(BoundPairOp, ConstantTightensBackToExact) {
    auto p = bound_pair(TravelTimeFunction::constant(10), 1.0);
    EXPECT_NEAR(p.lower_fn().evaluate(0), 10.0, 1e-12);
    EXPECT_NEAR(p.upper_fn().evaluate(0), 10.0, 1e-12);
}

TEST(BoundPairOp, SawtoothSandwich) {
    std::vector<Breakpoint> pts;
    for (int i = 0; i < 48; ++i) pts.push_back({i * 1800.0, i % 2 ? 120.0 : 100.0});
    auto f = fn(pts);
    auto p = bound_pair(f, 1.0);
    EXPECT_TRUE(p.lower_fn().is_fifo());
    EXPECT_TRUE(p.upper_fn().is_fifo());
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ud(0.0, kDefaultPeriod);
    for (int i = 0; i < 100000; ++i) {
        double tau = ud(rng);
        double v = f.evaluate(tau);
        EXPECT_LE(p.lower_fn().evaluate(tau), v + 1e-9);
        EXPECT_GE(p.upper_fn().evaluate(tau), v - 1e-9);
    }
}

TEST(BoundPairOp, TwoPointFunctionStaysSmall) {
    auto f = fn({{0, 10}, {43200, 20}});
    auto p = bound_pair(f, 1.0);
    EXPECT_LE(p.lower_fn().size(), 2u);
    EXPECT_LE(p.upper_fn().size(), 2u);
}

TEST(LinkBounds, ExactStaysExact) {
    auto a = BoundPair::exactly(TravelTimeFunction::constant(9));
    auto b = BoundPair::exactly(TravelTimeFunction::constant(19));
    auto r = link_bounds(a, b);
    EXPECT_TRUE(r.exact);
    EXPECT_DOUBLE_EQ(r.lower_fn().evaluate(0), 28.0);
}

TEST(LinkBounds, ConstantsAdd) {
    auto a = BoundPair::of(TravelTimeFunction::constant(9), TravelTimeFunction::constant(11));
    auto b = BoundPair::of(TravelTimeFunction::constant(19), TravelTimeFunction::constant(21));
    auto r = link_bounds(a, b);
    EXPECT_FALSE(r.exact);
    EXPECT_DOUBLE_EQ(r.lower_fn().evaluate(5), 28.0);
    EXPECT_DOUBLE_EQ(r.upper_fn().evaluate(5), 32.0);
}

TEST(LinkBounds, RandomSandwich) {
    std::mt19937_64 rng(321);
    std::uniform_real_distribution<double> ud(0.0, kDefaultPeriod);
    for (int rep = 0; rep < 10; ++rep) {
        auto fa = random_fifo(rng, 30);
        auto fb = random_fifo(rng, 30);
        auto pa = bound_pair(fa, 2.0);
        auto pb = bound_pair(fb, 2.0);
        auto r = link_bounds(pa, pb);
        auto exact = link(fa, fb);
        for (int i = 0; i < 10000; ++i) {
            double tau = ud(rng);
            double v = exact.evaluate(tau);
            EXPECT_LE(r.lower_fn().evaluate(tau), v + 1e-9);
            EXPECT_GE(r.upper_fn().evaluate(tau), v - 1e-9);
        }
    }
}

TEST(OverlapWindows, DisjointConstantsDominate) {
    auto a = BoundPair::of(TravelTimeFunction::constant(5), TravelTimeFunction::constant(6));
    auto b = BoundPair::of(TravelTimeFunction::constant(8), TravelTimeFunction::constant(9));
    EXPECT_TRUE(overlap_windows(a, b).empty());
}

TEST(OverlapWindows, OverlappingConstantsFullPeriod) {
    auto a = BoundPair::of(TravelTimeFunction::constant(5), TravelTimeFunction::constant(9));
    auto b = BoundPair::of(TravelTimeFunction::constant(8), TravelTimeFunction::constant(12));
    auto w = overlap_windows(a, b);
    ASSERT_EQ(w.size(), 1u);
    EXPECT_DOUBLE_EQ(w[0].start, 0.0);
    EXPECT_DOUBLE_EQ(w[0].end, kDefaultPeriod);
}

TEST(OverlapWindows, TrueIntersectionsCovered) {
    std::mt19937_64 rng(777);
    for (int rep = 0; rep < 20; ++rep) {
        auto fa = random_fifo(rng, 40, 600.0, 0.4);
        auto fb = random_fifo(rng, 40, 600.0, 0.4);
        auto pa = bound_pair(fa, 3.0);
        auto pb = bound_pair(fb, 3.0);
        auto windows = overlap_windows(pa, pb);
        auto exact = merge(fa, fb);
        // every exact switch boundary must lie inside some window
        auto check_boundary = [&](double t) {
            for (const auto& w : windows)
                if (interval_contains({w.start, w.end}, t, kDefaultPeriod) ||
                    std::fabs(w.start - t) < 1e-5 || std::fabs(w.end - t) < 1e-5)
                    return true;
            return false;
        };
        for (const auto& iv : exact.second_wins) {
            EXPECT_TRUE(check_boundary(iv.start)) << "switch " << iv.start;
            EXPECT_TRUE(check_boundary(iv.end)) << "switch " << iv.end;
        }
    }
}

TEST(InvertArrival, Constant) {
    EXPECT_DOUBLE_EQ(invert_arrival(TravelTimeFunction::constant(10), 110.0), 100.0);
}

TEST(InvertArrival, InverseOfEvaluateExample) {
    auto f = fn({{0, 10}, {43200, 20}});
    EXPECT_NEAR(invert_arrival(f, 21600.0 + 15.0), 21600.0, 1e-9);
}

TEST(InvertArrival, FlatArrivalSegmentReturnsEarliestPreimage) {
    // slope exactly -1: every tau in [0, 50] arrives at 100
    auto f = fn({{0, 100}, {50, 50}});
    EXPECT_DOUBLE_EQ(invert_arrival(f, 100.0), 0.0);
}

TEST(InvertArrival, RoundTripProperty) {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> ud(0.0, kDefaultPeriod);
    for (int rep = 0; rep < 10; ++rep) {
        auto f = random_fifo(rng, 25);
        for (int i = 0; i < 1000; ++i) {
            double tau = ud(rng);
            double arr = tau + f.evaluate(tau);
            EXPECT_NEAR(invert_arrival(f, arr), tau, 1e-6);
        }
    }
}

TEST(FifoClosure, LinkMergeCompositions) {
    std::mt19937_64 rng(31415);
    auto cur = random_fifo(rng, 15);
    for (int i = 0; i < 200; ++i) {
        auto other = random_fifo(rng, 15);
        cur = (i % 2 == 0) ? link(cur, other) : merge(cur, other).fn;
        ASSERT_TRUE(cur.is_fifo()) << "iteration " << i;
        ASSERT_TRUE(testutil::canonical(cur));
        if (cur.size() > 4000) cur = douglas_peucker(cur, 0.5);
    }
}

}  // namespace
