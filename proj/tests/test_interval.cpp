#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "ccert/interval.hpp"
#include "ccert/rng.hpp"

using namespace ccert;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

Interval random_interval(SplitMix64& rng, double span = 20.0) {
    double a = rng.uniform(-span, span);
    double b = rng.uniform(-span, span);
    return Interval(std::min(a, b), std::max(a, b));
}
} // namespace

TEST_CASE("interval construction and predicates") {
    Interval a(1.0, 2.0);
    REQUIRE(a.contains(1.0));
    REQUIRE(a.contains(2.0));
    REQUIRE(!a.contains(2.0000001));
    REQUIRE(a.width() == Catch::Approx(1.0));
    REQUIRE(a.midpoint() == Catch::Approx(1.5));
    REQUIRE(Interval(3.0).is_point());
    REQUIRE(a.intersects(Interval(2.0, 5.0)));
    REQUIRE(!a.intersects(Interval(2.1, 5.0)));
    REQUIRE(Interval(-kInf, 0.0).contains(-1e308));
    REQUIRE(!Interval(-kInf, 0.0).is_finite());
}

TEST_CASE("arithmetic encloses real arithmetic on samples") {
    SplitMix64 rng(2024);
    for (int it = 0; it < 2000; ++it) {
        Interval a = random_interval(rng);
        Interval b = random_interval(rng);
        for (int s = 0; s < 20; ++s) {
            double x = rng.uniform(a.lo, a.hi);
            double y = rng.uniform(b.lo, b.hi);
            REQUIRE((a + b).contains(x + y));
            REQUIRE((a - b).contains(x - y));
            REQUIRE((a * b).contains(x * y));
        }
    }
}

TEST_CASE("zero times unbounded interval stays zero") {
    Interval zero(0.0);
    Interval wide(-kInf, kInf);
    Interval p = zero * wide;
    REQUIRE(p.contains(0.0));
    REQUIRE(p.is_finite());
}

TEST_CASE("integer powers") {
    Interval a(-2.0, 3.0);
    Interval sq = pow_n(a, 2);
    REQUIRE(sq.lo <= 0.0);
    REQUIRE(sq.lo >= -1e-9);
    REQUIRE(sq.contains(9.0));
    REQUIRE(sq.hi < 9.1);

    Interval cube = pow_n(a, 3);
    REQUIRE(cube.contains(-8.0));
    REQUIRE(cube.contains(27.0));

    REQUIRE(pow_n(a, 0).contains(1.0));
    REQUIRE(pow_n(a, 1).lo == a.lo);

    SplitMix64 rng(7);
    for (int it = 0; it < 500; ++it) {
        Interval v = random_interval(rng, 4.0);
        int e = static_cast<int>(rng.below(6));
        Interval pw = pow_n(v, e);
        for (int s = 0; s < 10; ++s) {
            double x = rng.uniform(v.lo, v.hi);
            REQUIRE(pw.contains(std::pow(x, e)));
        }
    }
}

TEST_CASE("sine and cosine enclosures") {
    SECTION("full period saturates") {
        Interval s = sin_i(Interval(0.0, 7.0));
        REQUIRE(s.lo <= -1.0);
        REQUIRE(s.hi >= 1.0);
        REQUIRE(s.lo >= -1.0 - 1e-9);
        REQUIRE(s.hi <= 1.0 + 1e-9);
    }
    SECTION("captures interior extremum") {
        double p2 = std::asin(1.0); // pi/2
        Interval s = sin_i(Interval(p2 - 0.1, p2 + 0.1));
        REQUIRE(s.hi >= 1.0);
        Interval c = cos_i(Interval(3.0, 3.5)); // contains pi
        REQUIRE(c.lo <= -1.0);
    }
    SECTION("random containment") {
        SplitMix64 rng(99);
        for (int it = 0; it < 2000; ++it) {
            Interval v = random_interval(rng);
            Interval s = sin_i(v);
            Interval c = cos_i(v);
            for (int k = 0; k <= 40; ++k) {
                double x = v.lo + (v.hi - v.lo) * k / 40.0;
                REQUIRE(s.contains(std::sin(x)));
                REQUIRE(c.contains(std::cos(x)));
            }
        }
    }
}

TEST_CASE("inclusion isotonicity") {
    SplitMix64 rng(5150);
    for (int it = 0; it < 100000; ++it) {
        Interval big_a = random_interval(rng);
        Interval big_b = random_interval(rng);
        double am = rng.uniform(big_a.lo, big_a.hi), aw = rng.uniform(0.0, 1.0);
        double bm = rng.uniform(big_b.lo, big_b.hi), bw = rng.uniform(0.0, 1.0);
        Interval a(std::max(big_a.lo, am - aw * (am - big_a.lo)),
                   std::min(big_a.hi, am + aw * (big_a.hi - am)));
        Interval b(std::max(big_b.lo, bm - bw * (bm - big_b.lo)),
                   std::min(big_b.hi, bm + bw * (big_b.hi - bm)));

        auto subset = [](const Interval& inner, const Interval& outer) {
            return outer.lo <= inner.lo && inner.hi <= outer.hi;
        };
        REQUIRE(subset(a + b, big_a + big_b));
        REQUIRE(subset(a - b, big_a - big_b));
        REQUIRE(subset(a * b, big_a * big_b));
        REQUIRE(subset(pow_n(a, 3), pow_n(big_a, 3)));
        REQUIRE(subset(sin_i(a), sin_i(big_a)));
        REQUIRE(subset(max_i(a, b), max_i(big_a, big_b)));
        REQUIRE(subset(min_i(a, b), min_i(big_a, big_b)));
    }
}

TEST_CASE("outward widening is tiny and one-sided") {
    Interval a(1.0, 2.0);
    Interval w = widen(a);
    REQUIRE(w.lo <= 1.0);
    REQUIRE(w.hi >= 2.0);
    REQUIRE(1.0 - w.lo <= 1e-11);
    REQUIRE(w.hi - 2.0 <= 1e-11);
}

TEST_CASE("boxes split and cover") {
    Box b;
    b.push_back(Interval(0.0, 4.0));
    b.push_back(Interval(-1.0, 1.0));
    REQUIRE(b.max_width() == Catch::Approx(4.0));
    auto [l, r] = b.split_at(0, 1.0);
    REQUIRE(l[0].hi == Catch::Approx(1.0));
    REQUIRE(r[0].lo == Catch::Approx(1.0));
    REQUIRE(l[1].lo == b[1].lo);

    SplitMix64 rng(3);
    for (int it = 0; it < 200; ++it) {
        double x = rng.uniform(0.0, 4.0);
        double y = rng.uniform(-1.0, 1.0);
        std::vector<double> pt{x, y};
        REQUIRE(b.contains(pt));
        REQUIRE((l.contains(pt) || r.contains(pt)));
    }

    std::vector<double> mid = b.midpoint();
    REQUIRE(mid[0] == Catch::Approx(2.0));
    REQUIRE(mid[1] == Catch::Approx(0.0));
}

TEST_CASE("degenerate split keeps point dimensions intact") {
    Box b;
    b.push_back(Interval(0.25, 0.25));
    b.push_back(Interval(0.0, 2.0));
    auto [l, r] = b.split_at(1, 1.0);
    REQUIRE(l[0].is_point());
    REQUIRE(r[0].is_point());
}
