#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ccert/expr.hpp"
#include "ccert/interval.hpp"
#include "ccert/region.hpp"
#include "ccert/rng.hpp"

using namespace ccert;

namespace {
const std::vector<std::string> xy = {"x1", "x2"};

double ev(const Expr& e, std::initializer_list<double> pt) {
    std::vector<double> v(pt);
    return e.eval_point(v, nullptr);
}
} // namespace

TEST_CASE("parses arithmetic with the usual precedence") {
    Expr e = parse_expr("1 + 2*x1 - x2^2", xy);
    REQUIRE(ev(e, {3, 2}) == Catch::Approx(1 + 6 - 4));
    REQUIRE(ev(parse_expr("2*x1^3", xy), {2, 0}) == Catch::Approx(16.0));
    REQUIRE(ev(parse_expr("-x1^2", xy), {3, 0}) == Catch::Approx(-9.0)); // unary minus binds last
    REQUIRE(ev(parse_expr("(1 - x1)*(1 + x1)", xy), {4, 0}) == Catch::Approx(-15.0));
}

TEST_CASE("power wants a literal nonnegative integer exponent") {
    REQUIRE(ev(parse_expr("x1^0", xy), {7, 0}) == Catch::Approx(1.0));
    REQUIRE_THROWS_AS(parse_expr("x1^2^3", xy), SyntaxError); // no chained powers
    REQUIRE_THROWS_AS(parse_expr("x1^x2", xy), SyntaxError);
    REQUIRE_THROWS_AS(parse_expr("x1^(-2)", xy), SyntaxError);
    REQUIRE_THROWS_AS(parse_expr("x1^-2", xy), NegativeExponent);
    REQUIRE_THROWS_AS(parse_expr("x1^2.5", xy), SyntaxError);
}

TEST_CASE("functions and min/max") {
    REQUIRE(ev(parse_expr("sin(x1) + cos(x2)", xy), {0, 0}) == Catch::Approx(1.0));
    REQUIRE(ev(parse_expr("max(x1, x2)", xy), {2, 5}) == Catch::Approx(5.0));
    REQUIRE(ev(parse_expr("min(x1, 0 - x2)", xy), {2, 5}) == Catch::Approx(-5.0));
    REQUIRE_THROWS_AS(parse_expr("tan(x1)", xy), SyntaxError);
}

TEST_CASE("unknown identifiers are rejected") {
    REQUIRE_THROWS_AS(parse_expr("x3 + 1", xy), UnknownVariable);
    REQUIRE_THROWS_AS(parse_expr("1 +", xy), SyntaxError);
    REQUIRE_THROWS_AS(parse_expr("(1", xy), SyntaxError);
}

TEST_CASE("indicator evaluates through a region resolver") {
    RegionTable table;
    table.add(Region::from_box("R", Box({{0, 1}, {0, 1}})));
    Expr e = parse_expr("1 - 2*ind(R)", xy);
    std::vector<double> inside = {0.5, 0.5}, outside = {2, 0.5};
    REQUIRE(e.eval_point(inside, &table) == Catch::Approx(-1.0));
    REQUIRE(e.eval_point(outside, &table) == Catch::Approx(1.0));
    REQUIRE_THROWS_AS(e.eval_point(inside, nullptr), UnknownRegion);
}

TEST_CASE("box evaluation encloses point evaluation") {
    SplitMix64 rng(99);
    std::vector<std::string> names = make_var_names(2);
    std::vector<Expr> pool = {
        parse_expr("x1*x2 - sin(x1)", names),
        parse_expr("x1^2 - 3*x2 + cos(x1*x2)", names),
        parse_expr("max(x1, x2^2) + min(x1, 2)", names),
        parse_expr("(x1 - x2)*(x1 + x2) - x1^3", names),
    };
    for (int it = 0; it < 2000; ++it) {
        const Expr& e = pool[it % pool.size()];
        Box box;
        for (int d = 0; d < 2; ++d) {
            double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
            box.push_back(Interval(std::min(a, b), std::max(a, b)));
        }
        Interval bound = e.eval_box(box, nullptr);
        for (int s = 0; s < 10; ++s) {
            std::vector<double> pt = {rng.uniform(box[0].lo, box[0].hi),
                                      rng.uniform(box[1].lo, box[1].hi)};
            double v = e.eval_point(pt, nullptr);
            REQUIRE(v >= bound.lo);
            REQUIRE(v <= bound.hi);
        }
    }
}

TEST_CASE("pair variable names stack blocks") {
    auto names = make_var_names(2, 2);
    REQUIRE(names == std::vector<std::string>{"x1", "x2", "y1", "y2"});
    Expr e = parse_expr("y1 - x1", names);
    REQUIRE(ev(e, {1, 0, 5, 0}) == Catch::Approx(4.0));
}
