#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "ccert/expr.hpp"
#include "ccert/falsifier.hpp"
#include "ccert/region.hpp"
#include "ccert/rng.hpp"

using namespace ccert;

namespace {

// Small random polynomials (optionally with one sinusoid) whose interval
// enclosures converge quickly, so claims with a real margin get decided.
Expr random_poly(SplitMix64& rng, const std::vector<std::string>& names) {
    std::ostringstream os;
    int terms = 1 + (int)rng.below(3);
    for (int t = 0; t < terms; ++t) {
        os << (t ? " + " : "") << rng.uniform(-2, 2);
        int factors = (int)rng.below(3);
        for (int f = 0; f < factors; ++f)
            os << "*" << names[rng.below(names.size())] << "^" << 1 + rng.below(2);
    }
    if (rng.below(2))
        os << " + " << rng.uniform(-1.5, 1.5) << "*sin("
           << names[rng.below(names.size())] << ")";
    return parse_expr(os.str(), names);
}

Box random_box(SplitMix64& rng, int dim) {
    Box b;
    for (int d = 0; d < dim; ++d) {
        double lo = rng.uniform(-3, 3);
        b.push_back(Interval(lo, lo + rng.uniform(0.2, 2.0)));
    }
    return b;
}

Box box1(double lo, double hi) {
    std::vector<Interval> v{Interval(lo, hi)};
    return Box(v);
}

std::vector<double> random_point(SplitMix64& rng, const Box& b) {
    std::vector<double> p(b.size());
    for (size_t d = 0; d < b.size(); ++d) p[d] = rng.uniform(b[d].lo, b[d].hi);
    return p;
}

} // namespace

TEST_CASE("verdicts are sound against dense random sampling") {
    SplitMix64 rng(271828);
    FalsifierOptions opts;
    opts.budget = 20000;

    long verified_samples = 0;
    int verified_claims = 0, falsified_claims = 0;
    for (int it = 0; it < 400 && verified_samples < 100000; ++it) {
        int dim = 1 + (int)rng.below(2);
        std::vector<std::string> names = make_var_names(dim);
        Expr e = random_poly(rng, names);
        Box dom = random_box(rng, dim);

        // estimate the minimum by sampling, then pose one claim shifted to
        // (probably) hold with margin ~1 and one that a sampled point already
        // refutes robustly
        double approx_min = std::numeric_limits<double>::infinity();
        for (int s = 0; s < 256; ++s)
            approx_min = std::min(approx_min, e.eval_point(random_point(rng, dom), nullptr));

        for (double shift : {approx_min - 1.0, approx_min + 1.0}) {
            Claim c;
            c.exprs = {e - Expr::constant(shift)};
            c.domain = dom;
            FalsifierResult res = decide(c, opts);
            INFO("claim " << c.exprs[0].to_string() << " on iteration " << it);
            if (shift == approx_min + 1.0) {
                // a sampled point sits a full unit below the shift
                REQUIRE(res.outcome == Outcome::Falsified);
            }
            switch (res.outcome) {
            case Outcome::Verified: {
                ++verified_claims;
                for (int s = 0; s < 1500; ++s) {
                    auto pt = random_point(rng, dom);
                    REQUIRE(c.exprs[0].eval_point(pt, nullptr) >= -1e-9);
                }
                verified_samples += 1500;
                break;
            }
            case Outcome::Falsified: {
                ++falsified_claims;
                REQUIRE(!res.witness.empty());
                REQUIRE(dom.contains(res.witness));
                REQUIRE(res.witness_value <= -opts.eps / 2);
                REQUIRE(c.exprs[0].eval_point(res.witness, nullptr)
                        == Catch::Approx(res.witness_value).margin(1e-12));
                break;
            }
            case Outcome::Unknown:
                REQUIRE((res.unknown_leaves > 0 || res.budget_exhausted));
                break;
            }
        }
    }
    // the loop must have actually exercised both verdicts at scale
    REQUIRE(verified_samples >= 100000);
    REQUIRE(verified_claims >= 30);
    REQUIRE(falsified_claims >= 50);
}

TEST_CASE("unsatisfiable conjunctions are proved, tight ones stay unknown") {
    std::vector<std::string> x = make_var_names(1);
    Box dom = box1(-2, 2);

    Claim apart;
    apart.kind = ClaimKind::UnsatConj;
    apart.exprs = {parse_expr("x1 - 1", x), parse_expr("-x1 - 1", x)};
    apart.domain = dom;
    FalsifierResult r1 = decide(apart);
    REQUIRE(r1.outcome == Outcome::Verified);
    REQUIRE(r1.witness.empty());

    // x1 >= 1 and x1 <= 1 meet only at the single point x1 = 1, which is not
    // an eps-robust witness and which interval bounds can never exclude
    Claim touching;
    touching.kind = ClaimKind::UnsatConj;
    touching.exprs = {parse_expr("x1 - 1", x), parse_expr("1 - x1", x)};
    touching.domain = dom;
    FalsifierOptions opts;
    opts.budget = 100000;
    FalsifierResult r2 = decide(touching, opts);
    REQUIRE(r2.outcome == Outcome::Unknown);
    REQUIRE(r2.unknown_leaves > 0);
    REQUIRE(r2.witness.empty());

    Claim sat;
    sat.kind = ClaimKind::UnsatConj;
    sat.exprs = {parse_expr("x1", x), parse_expr("1 - x1", x)};
    sat.domain = dom;
    FalsifierResult r3 = decide(sat);
    REQUIRE(r3.outcome == Outcome::Falsified);
    REQUIRE(r3.witness.size() == 1);
    REQUIRE(r3.witness[0] >= 0.0);
    REQUIRE(r3.witness[0] <= 1.0);
}

TEST_CASE("pointwise identities are reported unknown, never guessed") {
    std::vector<std::string> x = make_var_names(1);
    Claim c;
    c.exprs = {parse_expr("sin(x1)^2 + cos(x1)^2 - 1", x)};
    c.domain = box1(0, 3);
    FalsifierResult res = decide(c);
    REQUIRE(res.outcome == Outcome::Unknown);
    REQUIRE(res.witness.empty());
    REQUIRE(res.unknown_leaves > 0);
    REQUIRE(res.pending_low <= 0.0);
    REQUIRE(res.pending_low >= -0.1); // enclosures near the floor stay tight
}

TEST_CASE("bound_min encloses the exact minimum") {
    std::vector<std::string> x = make_var_names(1);
    Expr e = parse_expr("x1^2 - 2*x1 + 1", x); // (x1-1)^2, min 0 at x1=1

    BoundResult plain = bound_min(e, box1(-2, 3), {}, nullptr);
    REQUIRE(plain.lower <= 0.0);
    REQUIRE(plain.upper >= 0.0);
    REQUIRE(plain.lower >= -0.01);
    REQUIRE(plain.upper <= 1e-4);
    REQUIRE(plain.arg_upper.size() == 1);
    REQUIRE(plain.arg_upper[0] == Catch::Approx(1.0).margin(0.02));

    // constraints carve the domain: min of x1 subject to x1 >= 2
    BoundResult cut = bound_min(parse_expr("x1", x), box1(-5, 5),
                                {parse_expr("x1 - 2", x)}, nullptr);
    REQUIRE(cut.upper >= 2.0 - 1e-9);
    REQUIRE(cut.upper <= 2.01);
    REQUIRE(cut.lower <= cut.upper);
    REQUIRE(cut.lower >= 1.9);

    // contradictory constraints: the minimum over nothing is +infinity
    BoundResult none = bound_min(parse_expr("x1", x), box1(-5, 5),
                                 {parse_expr("0*x1 - 1", x)}, nullptr);
    REQUIRE(std::isinf(none.lower));
    REQUIRE(std::isinf(none.upper));
    REQUIRE(none.converged);
}

TEST_CASE("indicator claims split on region faces") {
    RegionTable table;
    table.add(Region::from_box("R", box1(0, 1)));
    std::vector<std::string> x = make_var_names(1);

    Claim good;
    good.exprs = {parse_expr("10*ind(R) + 1", x)};
    good.domain = box1(0, 2);
    good.regions = &table;
    FalsifierResult r1 = decide(good);
    REQUIRE(r1.outcome == Outcome::Verified);
    REQUIRE(r1.boxes < 50); // face-guided splits resolve the indicator at once

    Claim bad;
    bad.exprs = {parse_expr("10*ind(R) - 5", x)};
    bad.domain = box1(0, 2);
    bad.regions = &table;
    FalsifierResult r2 = decide(bad);
    REQUIRE(r2.outcome == Outcome::Falsified);
    REQUIRE(r2.witness[0] > 1.0); // outside R, where the indicator drops to 0
}

TEST_CASE("malformed claims are rejected") {
    std::vector<std::string> x = make_var_names(1);
    Claim no_exprs;
    no_exprs.domain = box1(0, 1);
    REQUIRE_THROWS_AS(decide(no_exprs), Error);

    Claim no_domain;
    no_domain.exprs = {parse_expr("x1", x)};
    REQUIRE_THROWS_AS(decide(no_domain), Error);

    Claim unresolved;
    unresolved.exprs = {parse_expr("ind(R)", x)};
    unresolved.domain = box1(0, 1);
    REQUIRE_THROWS_AS(decide(unresolved), UnknownRegion);

    Claim unbounded;
    unbounded.exprs = {parse_expr("x1", x)};
    unbounded.domain = box1(0, std::numeric_limits<double>::infinity());
    REQUIRE_THROWS_AS(decide(unbounded), Error);
}
