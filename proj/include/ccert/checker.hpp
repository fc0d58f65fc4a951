#pragma once

// Independent certificate checking. Every certificate kind reduces to a list
// of quantified conditions; this header builds those conditions as falsifier
// claims (continuous systems) or enumerates them exactly (finite systems with
// an embedding), and reports a Verdict.
//
// Modes:
//   Strengthened — implications are replaced by their linear strengthenings
//     with the certificate's τ parameters; every condition is a plain
//     inequality, so Verified is an exact interval-arithmetic proof.
//   Implication — implications are checked as given: the checker proves that
//     premise ∧ (conclusion violated by more than ε) is unsatisfiable, where
//     ε is the falsifier's witness tolerance. Verified in this mode leaves
//     ε-slack on implication conditions; Falsified witnesses are always
//     genuine pointwise violations.
//
// Engines:
//   Exhaustive — finite systems: exact enumeration over states, exact margins.
//   Falsifier — continuous systems: branch-and-prune over each condition.
//   Sampled — continuous systems: seeded random tuples; can falsify but never
//     verify, so a clean run reports Unknown with the sample count.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ccert/certificate.hpp"
#include "ccert/falsifier.hpp"
#include "ccert/nba.hpp"
#include "ccert/problem.hpp"
#include "ccert/rng.hpp"

namespace ccert {

struct CheckConfig {
    enum class Mode { Strengthened, Implication };
    enum class Engine { Auto, Exhaustive, Falsifier, Sampled };
    Mode mode = Mode::Strengthened;
    Engine engine = Engine::Auto;
    FalsifierOptions falsifier;
    int samples = 10000; // sampled engine: tuples per condition instance
    uint64_t seed = 0;
    bool margins = true;
};

inline const char* to_string(CheckConfig::Mode m) {
    return m == CheckConfig::Mode::Strengthened ? "strengthened" : "implication";
}

struct ConditionMargin {
    std::string condition;
    double margin = 0;
};

struct SampledViolation {
    std::string condition;
    uint64_t count = 0;
    std::vector<double> witness; // first violation found
    double value = 0;
};

struct Verdict {
    enum class Kind { Verified, Falsified, Unknown };
    Kind kind = Kind::Unknown;

    // Verified
    std::vector<ConditionMargin> margins;

    // Falsified
    std::string condition;
    std::vector<double> witness;
    double value = 0;

    // Unknown diagnostics
    double smallest_box = std::numeric_limits<double>::infinity();
    uint64_t unknown_leaves = 0;
    bool budget_exhausted = false;

    // Bookkeeping
    uint64_t boxes = 0;
    uint64_t samples_checked = 0;
    uint64_t violations = 0;
    std::vector<SampledViolation> sampled_violations;
    double t_star = std::numeric_limits<double>::quiet_NaN(); // persistence bound
    std::string note;

    bool verified() const { return kind == Kind::Verified; }
    bool falsified() const { return kind == Kind::Falsified; }
};

inline const char* to_string(Verdict::Kind k) {
    switch (k) {
    case Verdict::Kind::Verified: return "Verified";
    case Verdict::Kind::Falsified: return "Falsified";
    case Verdict::Kind::Unknown: return "Unknown";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Condition claims: one quantified condition instance, possibly split over
// several stacked clause domains. Shared between the checker and the
// synthesis loop (which falsifies candidates against the same claims).

struct StackedDomain {
    Box box;
    std::vector<Expr> constraints;
};

struct ConditionClaim {
    std::string condition;               // semantic id, possibly [detailed]
    ClaimKind kind = ClaimKind::ForAllNonneg;
    std::vector<Expr> exprs;
    std::vector<StackedDomain> domains;
    std::shared_ptr<ScopedRegionTable> table;
    std::vector<std::string> block_pools; // sample-pool key per variable block
    int blocks = 1;
    int dim = 1;
    bool strict_positive = false; // exprs[0] must be > 0 (barrier unsafe side)
    bool margin_valid = false;    // margin = min exprs[0] + margin_shift
    double margin_shift = 0;
};

namespace detail {

// Cartesian product of region clauses, stacked into one claim domain per
// combination; clause constraints are lifted onto their block's variables.
inline std::vector<StackedDomain> stack_regions(const std::vector<const Region*>& blocks,
                                                int dim) {
    std::vector<std::string> names = make_var_names(dim, (int)blocks.size());
    std::vector<StackedDomain> out;
    std::vector<size_t> pick(blocks.size(), 0);
    while (true) {
        StackedDomain sd;
        for (size_t b = 0; b < blocks.size(); ++b) {
            const RegionClause& cl = blocks[b]->clauses[pick[b]];
            if ((int)cl.bound.size() != dim)
                throw DimensionMismatch("region '" + blocks[b]->id + "' clause dimension");
            for (size_t d = 0; d < cl.bound.size(); ++d) sd.box.push_back(cl.bound[d]);
            for (const auto& g : cl.constraints)
                sd.constraints.push_back(g.shift_vars((int)(b * dim), names));
        }
        out.push_back(std::move(sd));
        size_t b = 0;
        for (; b < blocks.size(); ++b) {
            if (++pick[b] < blocks[b]->clauses.size()) break;
            pick[b] = 0;
        }
        if (b == blocks.size()) break;
    }
    return out;
}

inline void bind_indicators(const Problem& p, std::vector<IndBinding>& inds,
                            ScopedRegionTable& table) {
    for (auto& b : inds) {
        if (table.has(b.scoped)) continue;
        const Region& base = p.regions.get(b.base); // UnknownRegion if absent
        if (b.map.empty())
            table.add(b.scoped, &base, b.offset);
        else
            table.add_composed(b.scoped, &base, b.map);
    }
    inds.clear();
}

struct ClosurePieces {
    // Accessors valid for both flat and piecewise certificates.
    const Certificate& c;
    const std::vector<double>& coeffs(int i, int j) const {
        return c.piecewise ? c.piece(i, j) : c.coeffs;
    }
    const std::vector<Expr>& basis(int i, int j) const {
        return c.piecewise ? c.piece_basis(i, j) : c.basis;
    }
};

} // namespace detail

// ---------------------------------------------------------------------------
// Claim builders (continuous systems).

inline std::vector<ConditionClaim> build_barrier_claims(const Problem& p, const Certificate& c,
                                                        CheckConfig::Mode mode, double eps) {
    if (c.kind != CertKind::Barrier) throw KindMismatch("expected a barrier certificate");
    if (c.dimension != p.cont.dimension)
        throw DimensionMismatch("certificate dimension does not match the problem");
    const int n = c.dimension;
    const Region& X = p.regions.get("X");
    const Region& X0 = p.regions.get("X0");
    const Region& Xu = p.regions.get("Xu");
    std::vector<ConditionClaim> out;

    auto inst = [&](const CertArg& ax, std::vector<IndBinding>& inds) {
        return instantiate_terms(c.basis, c.coeffs, n, ax, nullptr, inds);
    };

    { // B(x) <= 0 on the initial region
        ConditionClaim cc;
        cc.condition = "init-nonpositive";
        cc.table = std::make_shared<ScopedRegionTable>();
        std::vector<IndBinding> inds;
        auto terms = inst(CertArg::block(0), inds);
        detail::bind_indicators(p, inds, *cc.table);
        Expr b = merge_terms(std::move(terms));
        cc.exprs = {Expr::constant(0) - b};
        cc.domains = detail::stack_regions({&X0}, n);
        cc.block_pools = {"S3"};
        cc.blocks = 1;
        cc.dim = n;
        cc.margin_valid = true;
        out.push_back(std::move(cc));
    }
    { // B(x) > 0 on the unsafe region (strict; decided by lower bounds)
        ConditionClaim cc;
        cc.condition = "unsafe-positive";
        cc.table = std::make_shared<ScopedRegionTable>();
        std::vector<IndBinding> inds;
        auto terms = inst(CertArg::block(0), inds);
        detail::bind_indicators(p, inds, *cc.table);
        cc.exprs = {merge_terms(std::move(terms))};
        cc.domains = detail::stack_regions({&Xu}, n);
        cc.block_pools = {"Su"};
        cc.blocks = 1;
        cc.dim = n;
        cc.strict_positive = true;
        cc.margin_valid = true;
        out.push_back(std::move(cc));
    }
    { // sublevel set closed under the dynamics
        ConditionClaim cc;
        cc.condition = "step";
        cc.table = std::make_shared<ScopedRegionTable>();
        std::vector<IndBinding> inds;
        CertArg fx = CertArg::composed(p.cont.dynamics, "f0");
        if (mode == CheckConfig::Mode::Strengthened) {
            auto terms = inst(CertArg::block(0), inds);
            append_terms(terms, inst(fx, inds), -1.0);
            detail::bind_indicators(p, inds, *cc.table);
            cc.exprs = {merge_terms(std::move(terms))};
            cc.kind = ClaimKind::ForAllNonneg;
            cc.margin_valid = true;
        } else {
            Expr bx = merge_terms(inst(CertArg::block(0), inds));
            Expr bfx = merge_terms(inst(fx, inds));
            detail::bind_indicators(p, inds, *cc.table);
            cc.exprs = {Expr::constant(0) - bx, bfx - Expr::constant(eps)};
            cc.kind = ClaimKind::UnsatConj;
        }
        cc.domains = detail::stack_regions({&X}, n);
        cc.block_pools = {"S1"};
        cc.blocks = 1;
        cc.dim = n;
        out.push_back(std::move(cc));
    }
    return out;
}

namespace detail {

// T instantiated at a pair of claim blocks/maps, merged into one expression.
inline Expr closure_expr(const Problem& p, const ClosurePieces& cp, int i, int j, int dim,
                         const CertArg& ax, const CertArg& ay, ScopedRegionTable& table) {
    std::vector<IndBinding> inds;
    auto terms = instantiate_terms(cp.basis(i, j), cp.coeffs(i, j), dim, ax, &ay, inds);
    bind_indicators(p, inds, table);
    return merge_terms(std::move(terms));
}

} // namespace detail

// Conditions shared by safety and persistence closures: T(x, f(x)) ≥ 0 on X,
// and propagation backward along the dynamics over X×X.
namespace detail {

inline void closure_common_claims(const Problem& p, const Certificate& c,
                                  CheckConfig::Mode mode, double eps,
                                  std::vector<ConditionClaim>& out) {
    const int n = c.dimension;
    const Region& X = p.regions.get("X");
    ClosurePieces cp{c};
    CertArg fx = CertArg::composed(p.cont.dynamics, "f0");

    { // T(x, f(x)) >= 0 over the state box
        ConditionClaim cc;
        cc.condition = "closure-step";
        cc.table = std::make_shared<ScopedRegionTable>();
        cc.exprs = {detail::closure_expr(p, cp, 0, 0, n, CertArg::block(0), fx, *cc.table)};
        cc.domains = detail::stack_regions({&X}, n);
        cc.block_pools = {"S1"};
        cc.blocks = 1;
        cc.dim = n;
        cc.margin_valid = true;
        out.push_back(std::move(cc));
    }
    { // nonnegativity propagates backward: T(f(x), y) >= 0 forces T(x, y) >= 0
        ConditionClaim cc;
        cc.condition = "closure-propagation";
        cc.table = std::make_shared<ScopedRegionTable>();
        if (mode == CheckConfig::Mode::Strengthened) {
            std::vector<IndBinding> inds;
            CertArg ay = CertArg::block(n);
            auto terms = instantiate_terms(cp.basis(0, 0), cp.coeffs(0, 0), n, CertArg::block(0),
                                           &ay, inds);
            append_terms(terms,
                         instantiate_terms(cp.basis(0, 0), cp.coeffs(0, 0), n, fx, &ay, inds),
                         -c.tau1);
            detail::bind_indicators(p, inds, *cc.table);
            cc.exprs = {merge_terms(std::move(terms))};
            cc.kind = ClaimKind::ForAllNonneg;
            cc.margin_valid = true;
        } else {
            CertArg ay = CertArg::block(n);
            Expr t_fx_y = detail::closure_expr(p, cp, 0, 0, n, fx, ay, *cc.table);
            Expr t_x_y = detail::closure_expr(p, cp, 0, 0, n, CertArg::block(0), ay, *cc.table);
            cc.exprs = {t_fx_y, Expr::constant(0) - t_x_y - Expr::constant(eps)};
            cc.kind = ClaimKind::UnsatConj;
        }
        cc.domains = detail::stack_regions({&X, &X}, n);
        cc.block_pools = {"S1", "S2"};
        cc.blocks = 2;
        cc.dim = n;
        out.push_back(std::move(cc));
    }
}

} // namespace detail

inline std::vector<ConditionClaim> build_safety_cc_claims(const Problem& p, const Certificate& c,
                                                          CheckConfig::Mode mode, double eps) {
    if (c.kind != CertKind::SafetyClosure) throw KindMismatch("expected a safety closure");
    if (c.dimension != p.cont.dimension)
        throw DimensionMismatch("certificate dimension does not match the problem");
    const int n = c.dimension;
    std::vector<ConditionClaim> out;
    detail::closure_common_claims(p, c, mode, eps, out);

    { // initial-to-unsafe gap: T(x0, xu) <= -xi
        const Region& X0 = p.regions.get("X0");
        const Region& Xu = p.regions.get("Xu");
        detail::ClosurePieces cp{c};
        ConditionClaim cc;
        cc.condition = "init-unsafe-gap";
        cc.table = std::make_shared<ScopedRegionTable>();
        Expr t = detail::closure_expr(p, cp, 0, 0, n, CertArg::block(0), CertArg::block(n),
                                      *cc.table);
        cc.exprs = {Expr::constant(0) - t - Expr::constant(c.xi)};
        cc.domains = detail::stack_regions({&X0, &Xu}, n);
        cc.block_pools = {"S3", "Su"};
        cc.blocks = 2;
        cc.dim = n;
        cc.margin_valid = true;
        cc.margin_shift = c.xi; // margin reported as the best achievable gap
        out.push_back(std::move(cc));
    }
    return out;
}

inline std::vector<ConditionClaim> build_persistence_cc_claims(const Problem& p,
                                                               const Certificate& c,
                                                               CheckConfig::Mode mode,
                                                               double eps) {
    if (c.kind != CertKind::PersistenceClosure)
        throw KindMismatch("expected a persistence closure");
    if (c.dimension != p.cont.dimension)
        throw DimensionMismatch("certificate dimension does not match the problem");
    const int n = c.dimension;
    std::vector<ConditionClaim> out;
    detail::closure_common_claims(p, c, mode, eps, out);

    const Region& X0 = p.regions.get("X0");
    const Region& V = p.regions.get("XVF");
    detail::ClosurePieces cp{c};
    ConditionClaim cc;
    cc.condition = "vf-decrease";
    cc.table = std::make_shared<ScopedRegionTable>();
    CertArg b0 = CertArg::block(0), b1 = CertArg::block(n), b2 = CertArg::block(2 * n);
    if (mode == CheckConfig::Mode::Strengthened) {
        std::vector<IndBinding> inds;
        auto terms = instantiate_terms(cp.basis(0, 0), cp.coeffs(0, 0), n, b0, &b1, inds);
        for (auto& wt : terms) wt.coeff *= (1.0 - c.tau2);
        append_terms(terms, instantiate_terms(cp.basis(0, 0), cp.coeffs(0, 0), n, b1, &b2, inds),
                     -c.tau3);
        append_terms(terms, instantiate_terms(cp.basis(0, 0), cp.coeffs(0, 0), n, b0, &b2, inds),
                     -1.0);
        detail::bind_indicators(p, inds, *cc.table);
        cc.exprs = {merge_terms(std::move(terms)) - Expr::constant(c.xi)};
        cc.kind = ClaimKind::ForAllNonneg;
        cc.margin_valid = true;
    } else {
        Expr t_xy = detail::closure_expr(p, cp, 0, 0, n, b0, b1, *cc.table);
        Expr t_yz = detail::closure_expr(p, cp, 0, 0, n, b1, b2, *cc.table);
        std::vector<IndBinding> inds;
        auto diff = instantiate_terms(cp.basis(0, 0), cp.coeffs(0, 0), n, b0, &b2, inds);
        append_terms(diff, instantiate_terms(cp.basis(0, 0), cp.coeffs(0, 0), n, b0, &b1, inds),
                     -1.0);
        detail::bind_indicators(p, inds, *cc.table);
        // violation: T(x0,z) > T(x0,y) - xi - eps while both premises hold
        cc.exprs = {t_xy, t_yz,
                    merge_terms(std::move(diff)) + Expr::constant(c.xi) - Expr::constant(eps)};
        cc.kind = ClaimKind::UnsatConj;
    }
    cc.domains = detail::stack_regions({&X0, &V, &V}, n);
    cc.block_pools = {"S3", "S4", "S4"};
    cc.blocks = 3;
    cc.dim = n;
    out.push_back(std::move(cc));
    return out;
}

inline std::vector<ConditionClaim> build_ltl_cc_claims(const Problem& p, const Certificate& c,
                                                       CheckConfig::Mode mode, double eps) {
    if (c.kind != CertKind::LtlClosure) throw KindMismatch("expected a product closure");
    if (!p.has_nba) throw KindMismatch("product closure checking needs an automaton");
    if (c.dimension != p.cont.dimension)
        throw DimensionMismatch("certificate dimension does not match the problem");
    if (!c.piecewise) throw ArityMismatch("product closure must be piecewise over state pairs");
    const int n = c.dimension;
    const Nba& a = p.nba;
    const Region& X = p.regions.get("X");
    const Region& X0 = p.regions.get("X0");
    detail::ClosurePieces cp{c};
    CertArg fx = CertArg::composed(p.cont.dynamics, "f0");
    std::vector<ConditionClaim> out;

    for (int i = 0; i < a.num_states; ++i) {
        for (const auto& e : a.edges[i]) {
            const Labeling::Entry* le = p.labeling.find(e.letter);
            if (!le) continue; // letter labels no states: the edge can never fire
            std::string pool = label_region_id(e.letter);
            std::string edge_tag =
                "q" + std::to_string(i) + "-" + e.letter.str() + "->q" + std::to_string(e.target);

            { // the step into the product stays nonnegative on the letter's region
                ConditionClaim cc;
                cc.condition = "product-step[" + edge_tag + "]";
                cc.table = std::make_shared<ScopedRegionTable>();
                cc.exprs = {detail::closure_expr(p, cp, i, e.target, n, CertArg::block(0), fx,
                                                 *cc.table)};
                cc.domains = detail::stack_regions({&le->region}, n);
                cc.block_pools = {pool};
                cc.blocks = 1;
                cc.dim = n;
                cc.margin_valid = true;
                out.push_back(std::move(cc));
            }
            for (int j = 0; j < a.num_states; ++j) {
                ConditionClaim cc;
                cc.condition = "product-propagation[" + edge_tag + ", q" + std::to_string(j) + "]";
                cc.table = std::make_shared<ScopedRegionTable>();
                CertArg ay = CertArg::block(n);
                if (mode == CheckConfig::Mode::Strengthened) {
                    std::vector<IndBinding> inds;
                    auto terms = instantiate_terms(cp.basis(i, j), cp.coeffs(i, j), n,
                                                   CertArg::block(0), &ay, inds);
                    append_terms(terms,
                                 instantiate_terms(cp.basis(e.target, j), cp.coeffs(e.target, j),
                                                   n, fx, &ay, inds),
                                 -c.tau1);
                    detail::bind_indicators(p, inds, *cc.table);
                    cc.exprs = {merge_terms(std::move(terms))};
                    cc.kind = ClaimKind::ForAllNonneg;
                    cc.margin_valid = true;
                } else {
                    Expr succ = detail::closure_expr(p, cp, e.target, j, n, fx, ay, *cc.table);
                    Expr here =
                        detail::closure_expr(p, cp, i, j, n, CertArg::block(0), ay, *cc.table);
                    cc.exprs = {succ, Expr::constant(0) - here - Expr::constant(eps)};
                    cc.kind = ClaimKind::UnsatConj;
                }
                cc.domains = detail::stack_regions({&le->region, &X}, n);
                cc.block_pools = {pool, "S2"};
                cc.blocks = 2;
                cc.dim = n;
                out.push_back(std::move(cc));
            }
        }
    }

    for (int s : a.initial)
        for (int l1 : a.accepting)
            for (int l2 : a.accepting) {
                ConditionClaim cc;
                cc.condition = "accept-decrease[q" + std::to_string(s) + ", q" +
                               std::to_string(l1) + ", q" + std::to_string(l2) + "]";
                cc.table = std::make_shared<ScopedRegionTable>();
                CertArg b0 = CertArg::block(0), b1 = CertArg::block(n), b2 = CertArg::block(2 * n);
                if (mode == CheckConfig::Mode::Strengthened) {
                    std::vector<IndBinding> inds;
                    auto terms =
                        instantiate_terms(cp.basis(s, l1), cp.coeffs(s, l1), n, b0, &b1, inds);
                    for (auto& wt : terms) wt.coeff *= (1.0 - c.tau2);
                    append_terms(terms, instantiate_terms(cp.basis(l1, l2), cp.coeffs(l1, l2), n,
                                                          b1, &b2, inds),
                                 -c.tau3);
                    append_terms(terms, instantiate_terms(cp.basis(s, l2), cp.coeffs(s, l2), n,
                                                          b0, &b2, inds),
                                 -1.0);
                    detail::bind_indicators(p, inds, *cc.table);
                    cc.exprs = {merge_terms(std::move(terms)) - Expr::constant(c.xi)};
                    cc.kind = ClaimKind::ForAllNonneg;
                    cc.margin_valid = true;
                } else {
                    Expr t1 = detail::closure_expr(p, cp, s, l1, n, b0, b1, *cc.table);
                    Expr t2 = detail::closure_expr(p, cp, l1, l2, n, b1, b2, *cc.table);
                    std::vector<IndBinding> inds;
                    auto diff =
                        instantiate_terms(cp.basis(s, l2), cp.coeffs(s, l2), n, b0, &b2, inds);
                    append_terms(diff, instantiate_terms(cp.basis(s, l1), cp.coeffs(s, l1), n, b0,
                                                         &b1, inds),
                                 -1.0);
                    detail::bind_indicators(p, inds, *cc.table);
                    cc.exprs = {t1, t2,
                                merge_terms(std::move(diff)) + Expr::constant(c.xi) -
                                    Expr::constant(eps)};
                    cc.kind = ClaimKind::UnsatConj;
                }
                cc.domains = detail::stack_regions({&X0, &X, &X}, n);
                cc.block_pools = {"S3", "S4", "S4"};
                cc.blocks = 3;
                cc.dim = n;
                out.push_back(std::move(cc));
            }
    return out;
}

// ---------------------------------------------------------------------------
// Claim execution engines (continuous systems).

namespace detail {

inline void assert_witness_consistency(const ConditionClaim& cc, const std::vector<double>& w,
                                       double reported) {
    double recomputed;
    if (cc.kind == ClaimKind::ForAllNonneg || cc.strict_positive) {
        recomputed = cc.exprs[0].eval_point(w, cc.table.get());
    } else {
        recomputed = std::numeric_limits<double>::infinity();
        for (const auto& e : cc.exprs)
            recomputed = std::min(recomputed, e.eval_point(w, cc.table.get()));
    }
    if (std::fabs(recomputed - reported) > 1e-9)
        throw NumericalBreakdown("witness for " + cc.condition +
                                 " does not re-evaluate to its reported violation");
}

} // namespace detail

inline Verdict run_claims_falsifier(const std::vector<ConditionClaim>& claims,
                                    const CheckConfig& cfg) {
    Verdict v;
    bool unknown = false;
    std::vector<ConditionMargin> strict_margins;

    for (const auto& cc : claims) {
        if (cc.strict_positive) {
            double lo = std::numeric_limits<double>::infinity();
            for (const auto& dom : cc.domains) {
                BoundResult br =
                    bound_min(cc.exprs[0], dom.box, dom.constraints, cc.table.get(), cfg.falsifier);
                v.boxes += br.boxes;
                if (br.upper <= 0 && !br.arg_upper.empty()) {
                    v.kind = Verdict::Kind::Falsified;
                    v.condition = cc.condition;
                    v.witness = br.arg_upper;
                    v.value = br.upper;
                    detail::assert_witness_consistency(cc, v.witness, v.value);
                    return v;
                }
                lo = std::min(lo, br.lower);
            }
            if (lo > 0) {
                strict_margins.push_back({cc.condition, lo});
            } else {
                unknown = true;
                if (v.note.empty())
                    v.note = cc.condition + ": positivity not separated from zero";
            }
            continue;
        }
        for (const auto& dom : cc.domains) {
            Claim cl;
            cl.kind = cc.kind;
            cl.exprs = cc.exprs;
            cl.domain = dom.box;
            cl.constraints = dom.constraints;
            cl.regions = cc.table.get();
            cl.tag = cc.condition;
            FalsifierResult fr = decide(cl, cfg.falsifier);
            v.boxes += fr.boxes;
            if (fr.outcome == Outcome::Falsified) {
                v.kind = Verdict::Kind::Falsified;
                v.condition = cc.condition;
                v.witness = fr.witness;
                v.value = fr.witness_value;
                detail::assert_witness_consistency(cc, v.witness, v.value);
                return v;
            }
            if (fr.outcome == Outcome::Unknown) {
                unknown = true;
                v.unknown_leaves += fr.unknown_leaves;
                v.smallest_box = std::min(v.smallest_box, fr.smallest_box);
                v.budget_exhausted = v.budget_exhausted || fr.budget_exhausted;
                if (v.note.empty()) v.note = cc.condition + ": unresolved boxes remain";
            }
        }
    }

    if (unknown) {
        v.kind = Verdict::Kind::Unknown;
        return v;
    }
    v.kind = Verdict::Kind::Verified;
    if (cfg.margins) {
        for (const auto& cc : claims) {
            if (!cc.margin_valid || cc.strict_positive) continue;
            double lo = std::numeric_limits<double>::infinity();
            for (const auto& dom : cc.domains) {
                BoundResult br =
                    bound_min(cc.exprs[0], dom.box, dom.constraints, cc.table.get(), cfg.falsifier);
                v.boxes += br.boxes;
                lo = std::min(lo, br.lower);
            }
            v.margins.push_back({cc.condition, lo + cc.margin_shift});
        }
        for (auto& m : strict_margins) v.margins.push_back(std::move(m));
    }
    return v;
}

inline Verdict run_claims_sampled(const std::vector<ConditionClaim>& claims,
                                  const CheckConfig& cfg) {
    Verdict v;
    SplitMix64 root(cfg.seed);
    uint64_t claim_index = 0;

    for (const auto& cc : claims) {
        SampledViolation sv;
        sv.condition = cc.condition;
        for (const auto& dom : cc.domains) {
            SplitMix64 rng = root.fork(claim_index++);
            int produced = 0;
            uint64_t attempts = 0;
            const uint64_t max_attempts = 1000ull * (uint64_t)cfg.samples + 1000;
            std::vector<double> pt(dom.box.size());
            while (produced < cfg.samples && attempts < max_attempts) {
                ++attempts;
                for (size_t d = 0; d < dom.box.size(); ++d)
                    pt[d] = rng.uniform(dom.box[d].lo, dom.box[d].hi);
                bool ok = true;
                for (const auto& g : dom.constraints)
                    if (g.eval_point(pt, cc.table.get()) < 0) {
                        ok = false;
                        break;
                    }
                if (!ok) continue;
                ++produced;
                ++v.samples_checked;

                bool violated = false;
                double value = 0;
                if (cc.strict_positive) {
                    value = cc.exprs[0].eval_point(pt, cc.table.get());
                    violated = value <= 0;
                } else if (cc.kind == ClaimKind::ForAllNonneg) {
                    value = cc.exprs[0].eval_point(pt, cc.table.get());
                    violated = value < -1e-9;
                } else {
                    value = std::numeric_limits<double>::infinity();
                    for (const auto& e : cc.exprs)
                        value = std::min(value, e.eval_point(pt, cc.table.get()));
                    violated = value > 1e-9;
                }
                if (violated) {
                    ++v.violations;
                    if (sv.count++ == 0) {
                        sv.witness = pt;
                        sv.value = value;
                    }
                }
            }
        }
        if (sv.count > 0) v.sampled_violations.push_back(std::move(sv));
    }

    if (v.violations > 0) {
        v.kind = Verdict::Kind::Falsified;
        v.condition = v.sampled_violations.front().condition;
        v.witness = v.sampled_violations.front().witness;
        v.value = v.sampled_violations.front().value;
        v.note = "sampled check: " + std::to_string(v.violations) + " violation(s) in " +
                 std::to_string(v.samples_checked) + " tuples";
    } else {
        v.kind = Verdict::Kind::Unknown;
        v.note = "sampled check: no violation in " + std::to_string(v.samples_checked) +
                 " tuples (sampling cannot verify)";
    }
    return v;
}

// ---------------------------------------------------------------------------
// Exhaustive engine: finite systems checked by direct enumeration against
// value oracles. Expression certificates are adapted via the embedding.

using FlatClosureFn = std::function<double(int s, int t)>;
using ProductClosureFn = std::function<double(int i, int j, int s, int t)>;
using StateValueFn = std::function<double(int s)>;

namespace detail {

inline std::vector<double> stacked_embedding(const FiniteSystem& fin,
                                             std::initializer_list<int> states) {
    std::vector<double> out;
    for (int s : states) {
        const auto& e = fin.embedding[s];
        out.insert(out.end(), e.begin(), e.end());
    }
    return out;
}

struct FiniteVerdictBuilder {
    const FiniteSystem& fin;
    Verdict v;
    std::map<std::string, double> mins;

    void record(const std::string& condition, double margin) {
        auto it = mins.find(condition);
        if (it == mins.end())
            mins[condition] = margin;
        else
            it->second = std::min(it->second, margin);
    }
    bool fail(const std::string& condition, std::initializer_list<int> states, double value) {
        v.kind = Verdict::Kind::Falsified;
        v.condition = condition;
        v.witness = fin.has_embedding() ? stacked_embedding(fin, states) : std::vector<double>();
        if (v.witness.empty())
            for (int s : states) v.witness.push_back((double)s);
        v.value = value;
        return false;
    }
    Verdict finish() {
        if (v.kind != Verdict::Kind::Falsified) {
            v.kind = Verdict::Kind::Verified;
            for (auto& [cond, m] : mins) v.margins.push_back({cond, m});
        }
        return v;
    }
};

} // namespace detail

// Safety closure over an explicit finite system. Margins are exact minima.
inline Verdict check_safety_values(const FlatClosureFn& T, double xi, const Problem& p,
                                   CheckConfig::Mode mode, double tau1) {
    if (!p.is_finite) throw KindMismatch("exhaustive checking needs a finite problem");
    const FiniteSystem& fin = p.fin;
    detail::FiniteVerdictBuilder b{fin};
    const int n = fin.num_states;

    for (int s = 0; s < n; ++s)
        for (int t : fin.succ[s]) {
            double val = T(s, t);
            if (val < 0) return (void)b.fail("closure-step", {s, t}, val), b.finish();
            b.record("closure-step", val);
        }
    for (int s = 0; s < n; ++s)
        for (int t : fin.succ[s])
            for (int y = 0; y < n; ++y) {
                double succ_v = T(t, y), here = T(s, y);
                if (mode == CheckConfig::Mode::Strengthened) {
                    double slack = here - tau1 * succ_v;
                    if (slack < 0)
                        return (void)b.fail("closure-propagation", {s, t, y}, slack), b.finish();
                    b.record("closure-propagation", slack);
                } else if (succ_v >= 0 && here < 0) {
                    return (void)b.fail("closure-propagation", {s, t, y}, here), b.finish();
                }
            }
    for (int s0 : p.fin.initial)
        for (int su : p.unsafe_states) {
            double gap = -T(s0, su); // best achievable xi at this pair
            if (gap < xi) return (void)b.fail("init-unsafe-gap", {s0, su}, T(s0, su)), b.finish();
            b.record("init-unsafe-gap", gap);
        }
    return b.finish();
}

inline Verdict check_persistence_values(const FlatClosureFn& T, double xi, const Problem& p,
                                        CheckConfig::Mode mode, double tau1, double tau2,
                                        double tau3, double* t_star_out = nullptr) {
    if (!p.is_finite) throw KindMismatch("exhaustive checking needs a finite problem");
    const FiniteSystem& fin = p.fin;
    detail::FiniteVerdictBuilder b{fin};
    const int n = fin.num_states;

    double t_star = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < n; ++s)
        for (int t = 0; t < n; ++t) t_star = std::max(t_star, T(s, t));
    if (t_star_out) *t_star_out = t_star;

    for (int s = 0; s < n; ++s)
        for (int t : fin.succ[s]) {
            double val = T(s, t);
            if (val < 0) return (void)b.fail("closure-step", {s, t}, val), b.finish();
            b.record("closure-step", val);
        }
    for (int s = 0; s < n; ++s)
        for (int t : fin.succ[s])
            for (int y = 0; y < n; ++y) {
                double succ_v = T(t, y), here = T(s, y);
                if (mode == CheckConfig::Mode::Strengthened) {
                    double slack = here - tau1 * succ_v;
                    if (slack < 0)
                        return (void)b.fail("closure-propagation", {s, t, y}, slack), b.finish();
                    b.record("closure-propagation", slack);
                } else if (succ_v >= 0 && here < 0) {
                    return (void)b.fail("closure-propagation", {s, t, y}, here), b.finish();
                }
            }
    for (int s0 : p.fin.initial)
        for (int y : p.vf_states)
            for (int z : p.vf_states) {
                if (mode == CheckConfig::Mode::Strengthened) {
                    double slack = (1.0 - tau2) * T(s0, y) - tau3 * T(y, z) - T(s0, z) - xi;
                    if (slack < 0)
                        return (void)b.fail("vf-decrease", {s0, y, z}, slack), b.finish();
                    b.record("vf-decrease", slack);
                } else if (T(s0, y) >= 0 && T(y, z) >= 0 && T(s0, z) > T(s0, y) - xi) {
                    return (void)b.fail("vf-decrease", {s0, y, z}, T(s0, z) - (T(s0, y) - xi)),
                           b.finish();
                }
            }
    Verdict v = b.finish();
    v.t_star = t_star;
    return v;
}

inline Verdict check_ltl_values(const ProductClosureFn& T, double xi, const Problem& p,
                                CheckConfig::Mode mode, double tau1, double tau2, double tau3) {
    if (!p.is_finite) throw KindMismatch("exhaustive checking needs a finite problem");
    if (!p.has_nba) throw KindMismatch("product closure checking needs an automaton");
    const FiniteSystem& fin = p.fin;
    const Nba& a = p.nba;
    detail::FiniteVerdictBuilder b{fin};
    const int n = fin.num_states;

    // letters read at the current system state drive the automaton
    std::vector<Letter> letter_of(n);
    for (int s = 0; s < n; ++s) letter_of[s] = p.labeling.letter_of_state(s);

    for (int s = 0; s < n; ++s)
        for (int i = 0; i < a.num_states; ++i)
            for (int ip : a.delta(i, letter_of[s]))
                for (int t : fin.succ[s]) {
                    double val = T(i, ip, s, t);
                    std::string cond = "product-step[q" + std::to_string(i) + "-" +
                                       letter_of[s].str() + "->q" + std::to_string(ip) + "]";
                    if (val < 0) return (void)b.fail(cond, {s, t}, val), b.finish();
                    b.record(cond, val);
                }
    for (int s = 0; s < n; ++s)
        for (int i = 0; i < a.num_states; ++i)
            for (int ip : a.delta(i, letter_of[s]))
                for (int j = 0; j < a.num_states; ++j)
                    for (int t : fin.succ[s])
                        for (int y = 0; y < n; ++y) {
                            double succ_v = T(ip, j, t, y), here = T(i, j, s, y);
                            if (mode == CheckConfig::Mode::Strengthened) {
                                double slack = here - tau1 * succ_v;
                                if (slack < 0)
                                    return (void)b.fail("product-propagation", {s, t, y}, slack),
                                           b.finish();
                                b.record("product-propagation", slack);
                            } else if (succ_v >= 0 && here < 0) {
                                return (void)b.fail("product-propagation", {s, t, y}, here),
                                       b.finish();
                            }
                        }
    for (int s : a.initial)
        for (int l1 : a.accepting)
            for (int l2 : a.accepting)
                for (int x0 : fin.initial)
                    for (int y = 0; y < n; ++y)
                        for (int z = 0; z < n; ++z) {
                            if (mode == CheckConfig::Mode::Strengthened) {
                                double slack = (1.0 - tau2) * T(s, l1, x0, y) -
                                               tau3 * T(l1, l2, y, z) - T(s, l2, x0, z) - xi;
                                if (slack < 0)
                                    return (void)b.fail("accept-decrease", {x0, y, z}, slack),
                                           b.finish();
                                b.record("accept-decrease", slack);
                            } else if (T(s, l1, x0, y) >= 0 && T(l1, l2, y, z) >= 0 &&
                                       T(s, l2, x0, z) > T(s, l1, x0, y) - xi) {
                                return (void)b.fail("accept-decrease", {x0, y, z},
                                                    T(s, l2, x0, z) - (T(s, l1, x0, y) - xi)),
                                       b.finish();
                            }
                        }
    return b.finish();
}

inline Verdict check_barrier_values(const StateValueFn& B, const Problem& p,
                                    CheckConfig::Mode mode) {
    if (!p.is_finite) throw KindMismatch("exhaustive checking needs a finite problem");
    const FiniteSystem& fin = p.fin;
    detail::FiniteVerdictBuilder b{fin};

    for (int s0 : fin.initial) {
        double val = B(s0);
        if (val > 0) return (void)b.fail("init-nonpositive", {s0}, val), b.finish();
        b.record("init-nonpositive", -val);
    }
    for (int su : p.unsafe_states) {
        double val = B(su);
        if (val <= 0) return (void)b.fail("unsafe-positive", {su}, val), b.finish();
        b.record("unsafe-positive", val);
    }
    for (int s = 0; s < fin.num_states; ++s)
        for (int t : fin.succ[s]) {
            if (mode == CheckConfig::Mode::Strengthened) {
                double slack = B(s) - B(t);
                if (slack < 0) return (void)b.fail("step", {s, t}, slack), b.finish();
                b.record("step", slack);
            } else if (B(s) <= 0 && B(t) > 0) {
                return (void)b.fail("step", {s, t}, B(t)), b.finish();
            }
        }
    return b.finish();
}

// ---------------------------------------------------------------------------
// Certificate adapters and public entry points.

namespace detail {

inline void require_embedding(const Problem& p, const Certificate& c) {
    if (!p.fin.has_embedding())
        throw FormatError("finite problem needs an embedding to evaluate expression certificates");
    if (p.fin.embedding_dim() != c.dimension)
        throw DimensionMismatch("certificate dimension does not match the embedding");
}

inline FlatClosureFn flat_closure_fn(const Problem& p, const Certificate& c) {
    return [&p, &c](int s, int t) {
        std::vector<double> pt = stacked_embedding(p.fin, {s, t});
        return c.eval(pt, &p.regions);
    };
}

} // namespace detail

inline Verdict check_barrier(const Certificate& c, const Problem& p, const CheckConfig& cfg = {}) {
    if (c.kind != CertKind::Barrier) throw KindMismatch("check_barrier needs a barrier");
    c.validate();
    if (p.is_finite) {
        detail::require_embedding(p, c);
        StateValueFn B = [&](int s) { return c.eval(p.fin.embedding[s], &p.regions); };
        return check_barrier_values(B, p, cfg.mode);
    }
    auto claims = build_barrier_claims(p, c, cfg.mode, cfg.falsifier.eps);
    return cfg.engine == CheckConfig::Engine::Sampled ? run_claims_sampled(claims, cfg)
                                                      : run_claims_falsifier(claims, cfg);
}

inline Verdict check_safety_cc(const Certificate& c, const Problem& p,
                               const CheckConfig& cfg = {}) {
    if (c.kind != CertKind::SafetyClosure) throw KindMismatch("check_safety_cc needs a safety-cc");
    c.validate();
    if (p.is_finite) {
        detail::require_embedding(p, c);
        return check_safety_values(detail::flat_closure_fn(p, c), c.xi, p, cfg.mode, c.tau1);
    }
    auto claims = build_safety_cc_claims(p, c, cfg.mode, cfg.falsifier.eps);
    return cfg.engine == CheckConfig::Engine::Sampled ? run_claims_sampled(claims, cfg)
                                                      : run_claims_falsifier(claims, cfg);
}

inline Verdict check_persistence_cc(const Certificate& c, const Problem& p,
                                    const CheckConfig& cfg = {}) {
    if (c.kind != CertKind::PersistenceClosure)
        throw KindMismatch("check_persistence_cc needs a persistence-cc");
    c.validate();
    if (p.is_finite) {
        detail::require_embedding(p, c);
        double t_star = 0;
        Verdict v = check_persistence_values(detail::flat_closure_fn(p, c), c.xi, p, cfg.mode,
                                             c.tau1, c.tau2, c.tau3, &t_star);
        v.t_star = t_star;
        return v;
    }
    // Boundedness: enclose T over X×X; an infinite endpoint means the
    // template cannot certify a bounded closure.
    const int n = c.dimension;
    detail::ClosurePieces cp{c};
    auto table = std::make_shared<ScopedRegionTable>();
    Expr t = detail::closure_expr(p, cp, 0, 0, n, CertArg::block(0), CertArg::block(n), *table);
    Box xx;
    for (int b = 0; b < 2; ++b)
        for (const auto& iv : p.cont.state_box) xx.push_back(iv);
    Interval enclosure = t.eval_box(xx, table.get());
    if (!enclosure.is_finite())
        throw UnboundedTemplate("closure enclosure over the state box is not finite");

    auto claims = build_persistence_cc_claims(p, c, cfg.mode, cfg.falsifier.eps);
    Verdict v = cfg.engine == CheckConfig::Engine::Sampled ? run_claims_sampled(claims, cfg)
                                                           : run_claims_falsifier(claims, cfg);
    v.t_star = enclosure.hi;
    return v;
}

inline Verdict check_ltl_cc(const Certificate& c, const Problem& p, const CheckConfig& cfg = {}) {
    if (c.kind != CertKind::LtlClosure) throw KindMismatch("check_ltl_cc needs an ltl-cc");
    c.validate();
    if (!p.has_nba) throw KindMismatch("problem has no automaton");
    if (p.is_finite) {
        detail::require_embedding(p, c);
        ProductClosureFn T = [&p, &c](int i, int j, int s, int t) {
            std::vector<double> pt = detail::stacked_embedding(p.fin, {s, t});
            return c.eval_piece(i, j, pt, &p.regions);
        };
        return check_ltl_values(T, c.xi, p, cfg.mode, c.tau1, c.tau2, c.tau3);
    }
    auto claims = build_ltl_cc_claims(p, c, cfg.mode, cfg.falsifier.eps);
    return cfg.engine == CheckConfig::Engine::Sampled ? run_claims_sampled(claims, cfg)
                                                      : run_claims_falsifier(claims, cfg);
}

// Case-defined closure from a barrier, checked exhaustively on finite systems
// in the original implication form.
inline Verdict check_safety_cc(const BarrierClosure& bc, const Problem& p,
                               CheckConfig::Mode mode = CheckConfig::Mode::Implication) {
    if (!p.is_finite)
        throw KindMismatch("case-defined closures are checked exhaustively on finite systems");
    if (!p.fin.has_embedding())
        throw FormatError("finite problem needs an embedding to evaluate the barrier");
    FlatClosureFn T = [&p, &bc](int s, int t) {
        return bc.value(p.fin.embedding[s], p.fin.embedding[t], &p.regions);
    };
    return check_safety_values(T, bc.xi, p, mode, 1.0);
}

// Generic dispatcher used by the command-line front end.
inline Verdict check_certificate(const Certificate& c, const Problem& p,
                                 const CheckConfig& cfg = {}) {
    switch (c.kind) {
    case CertKind::Barrier:
        if (p.spec != SpecKind::Safety) throw KindMismatch("barrier needs a safety problem");
        return check_barrier(c, p, cfg);
    case CertKind::SafetyClosure:
        if (p.spec != SpecKind::Safety) throw KindMismatch("safety-cc needs a safety problem");
        return check_safety_cc(c, p, cfg);
    case CertKind::PersistenceClosure:
        if (p.spec != SpecKind::Persistence)
            throw KindMismatch("persistence-cc needs a persistence problem");
        return check_persistence_cc(c, p, cfg);
    case CertKind::LtlClosure:
        if (p.spec != SpecKind::Ltl) throw KindMismatch("ltl-cc needs an ltl problem");
        return check_ltl_cc(c, p, cfg);
    }
    throw KindMismatch("unknown certificate kind");
}

} // namespace ccert
