#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ccert/lp.hpp"
#include "ccert/rng.hpp"

using namespace ccert;

namespace {

// Brute-force oracle for box-constrained LPs with a handful of rows: the
// optimum of a bounded feasible LP sits at a vertex, i.e. at n linearly
// independent tight constraints drawn from the rows and the box faces.
// Enumerate all such intersections, keep the feasible ones, take the best.
struct VertexOracle {
    bool feasible = false;
    double objective = -std::numeric_limits<double>::infinity();
    std::vector<double> arg;
};

bool solve2x2(double a, double b, double c, double d, double e, double f, double& x,
              double& y) {
    double det = a * d - b * c;
    if (std::fabs(det) < 1e-11) return false;
    x = (e * d - b * f) / det;
    y = (a * f - e * c) / det;
    return true;
}

VertexOracle enumerate_vertices(const LinearProgram& lp) {
    VertexOracle out;
    const int n = lp.num_vars;
    REQUIRE(n == 2); // oracle is specialized to the 2-D random family below

    struct Plane {
        double a, b, rhs;
    };
    std::vector<Plane> planes;
    for (const auto& r : lp.rows) planes.push_back({r.coeffs[0], r.coeffs[1], r.rhs});
    planes.push_back({1, 0, lp.lower[0]});
    planes.push_back({1, 0, lp.upper[0]});
    planes.push_back({0, 1, lp.lower[1]});
    planes.push_back({0, 1, lp.upper[1]});

    auto feasible_at = [&](double x, double y) {
        const double tol = 1e-7;
        if (x < lp.lower[0] - tol || x > lp.upper[0] + tol) return false;
        if (y < lp.lower[1] - tol || y > lp.upper[1] + tol) return false;
        for (const auto& r : lp.rows) {
            double lhs = r.coeffs[0] * x + r.coeffs[1] * y;
            if (r.rel == Relation::Le && lhs > r.rhs + tol) return false;
            if (r.rel == Relation::Ge && lhs < r.rhs - tol) return false;
            if (r.rel == Relation::Eq && std::fabs(lhs - r.rhs) > tol) return false;
        }
        return true;
    };

    for (size_t i = 0; i < planes.size(); ++i)
        for (size_t j = i + 1; j < planes.size(); ++j) {
            double x, y;
            if (!solve2x2(planes[i].a, planes[i].b, planes[j].a, planes[j].b, planes[i].rhs,
                          planes[j].rhs, x, y))
                continue;
            if (!feasible_at(x, y)) continue;
            out.feasible = true;
            double obj = lp.objective[0] * x + lp.objective[1] * y;
            if (obj > out.objective) {
                out.objective = obj;
                out.arg = {x, y};
            }
        }
    return out;
}

} // namespace

TEST_CASE("simplex matches a brute-force vertex oracle on random 2-D programs") {
    SplitMix64 rng(31337);
    int feasible_seen = 0, infeasible_seen = 0;
    for (int it = 0; it < 1000; ++it) {
        LinearProgram lp;
        lp.num_vars = 2;
        lp.lower = {rng.uniform(-5, 0), rng.uniform(-5, 0)};
        lp.upper = {rng.uniform(0.5, 5), rng.uniform(0.5, 5)};
        lp.objective = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
        int rows = 1 + (int)rng.below(5);
        bool used_eq = false; // two random equalities are near-parallel too often
        for (int r = 0; r < rows; ++r) {
            std::vector<double> c = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
            double rhs = rng.uniform(-2, 3);
            Relation rel = !used_eq && rng.below(8) == 0 ? Relation::Eq
                           : rng.below(2)                ? Relation::Le
                                                         : Relation::Ge;
            used_eq = used_eq || rel == Relation::Eq;
            lp.add_row(std::move(c), rel, rhs);
        }

        VertexOracle oracle = enumerate_vertices(lp);
        LpResult got = solve_lp(lp);

        INFO("iteration " << it << ": " << dump_lp(lp));
        if (oracle.feasible) {
            ++feasible_seen;
            REQUIRE(got.status == LpStatus::Feasible);
            REQUIRE(got.objective == Catch::Approx(oracle.objective).margin(1e-6));
            for (const auto& r : lp.rows) REQUIRE(lp_row_violation(r, got.x) <= 1e-7);
        } else {
            // The oracle only certifies infeasibility up to its tolerance; the
            // simplex must agree unless the program is degenerate enough that
            // a vertex slipped through the tolerance at a near-singular basis.
            ++infeasible_seen;
            REQUIRE(got.status == LpStatus::Infeasible);
        }
    }
    // The random family must exercise both outcomes to mean anything.
    REQUIRE(feasible_seen > 300);
    REQUIRE(infeasible_seen > 50);
}

TEST_CASE("active-set wrapper agrees with the dense solve") {
    SplitMix64 rng(777);
    for (int it = 0; it < 200; ++it) {
        LinearProgram lp;
        lp.num_vars = 2;
        lp.lower = {-4, -4};
        lp.upper = {4, 4};
        lp.objective = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        int rows = 3 + (int)rng.below(40);
        for (int r = 0; r < rows; ++r)
            lp.add_row({rng.uniform(-2, 2), rng.uniform(-2, 2)}, Relation::Le,
                       rng.uniform(0.5, 4));
        LpResult dense = solve_lp(lp);
        LpResult active = solve_lp_active(lp, 8);
        REQUIRE(dense.status == active.status);
        if (dense.status == LpStatus::Feasible)
            REQUIRE(dense.objective == Catch::Approx(active.objective).margin(1e-6));
    }
}

TEST_CASE("equality rows and fixed variables") {
    LinearProgram lp;
    lp.num_vars = 2;
    lp.lower = {0, 0};
    lp.upper = {10, 10};
    lp.objective = {1, 1};
    lp.add_row({1, 1}, Relation::Eq, 4);
    lp.add_row({1, -1}, Relation::Ge, 0);
    LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::Feasible);
    REQUIRE(r.objective == Catch::Approx(4.0));

    lp.add_row({1, 0}, Relation::Le, -1); // contradicts x1 >= 0
    REQUIRE(solve_lp(lp).status == LpStatus::Infeasible);
}
