#pragma once

// Counterexample-guided synthesis of certificates that are linear in their
// coefficients. Each iteration solves an LP over sampled condition instances
// (maximizing the gap parameter), then hands the candidate to the falsifier;
// witnesses of violated conditions are routed back into the sample pools and
// the loop repeats. Finite problems enumerate every condition instance, so a
// single LP solve either yields an exhaustively checkable certificate or a
// genuine infeasibility.
//
// Numerical guards between the LP and the checker:
//  - a robustness cushion on step rows, so the synthesized certificate is
//    strictly inside the feasible set and interval verification has room;
//  - a secondary solve minimizing the coefficient 1-norm at the optimal gap,
//    which drives structurally-forced-to-zero coefficients to (near) zero;
//  - snapping of near-zero coefficients to exact zero, so cancellations fold
//    structurally during claim construction instead of leaving noise terms;
//  - the reported xi is backed off below the LP optimum by the cushion.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ccert/certificate.hpp"
#include "ccert/checker.hpp"
#include "ccert/lp.hpp"
#include "ccert/problem.hpp"
#include "ccert/rng.hpp"

namespace ccert {

struct CegisConfig {
    int samples_per_set = 50;   // initial pool size per sample set
    double tau1 = 1.0, tau2 = 0.0, tau3 = 0.0;
    double xi_min = 1e-3, xi_max = 10.0;
    int max_iters = 200;
    uint64_t seed = 0;
    int prescreen = 10000;      // random tuples per condition before branch-and-prune
    FalsifierOptions falsifier;
    double cushion = -1.0;      // step-row slack; < 0 selects an automatic value
    double coeff_snap = 1e-9;   // |coefficient| below this collapses to zero
    int jobs = 1;               // accepted for interface parity; execution is sequential

    double effective_cushion(bool finite) const {
        if (cushion >= 0) return cushion;
        return finite ? 1e-7 : std::max(20.0 * falsifier.delta, 1e-6);
    }
};

enum class FailureReason { None, InfeasibleLp, MaxIterations, FalsifierBudget };

inline const char* to_string(FailureReason r) {
    switch (r) {
    case FailureReason::None: return "none";
    case FailureReason::InfeasibleLp: return "InfeasibleLP";
    case FailureReason::MaxIterations: return "MaxIterations";
    case FailureReason::FalsifierBudget: return "FalsifierBudget";
    }
    return "?";
}

struct IterationRecord {
    int iteration = 0;
    double xi = 0;              // LP optimum before backoff
    uint64_t lp_rows = 0;
    std::string refuted_condition; // empty when the candidate survived
    std::vector<double> counterexample;
};

struct SynthesisResult {
    bool success = false;
    Certificate certificate;    // meaningful on success
    Verdict verdict;            // independent checker's verdict on success
    FailureReason reason = FailureReason::None;
    std::string detail;
    int iterations = 0;
    std::vector<IterationRecord> history;
};

// ---------------------------------------------------------------------------
// Sample pools. Keys follow the claim block-pool names from the checker:
// "S1"/"S2" (state box), "S3" (initial), "Su" (unsafe), "S4" (pairs, stored
// stacked), and one pool per label region id for automaton conditions.

struct SampleSets {
    std::map<std::string, std::vector<std::vector<double>>> pools;

    static bool close(const std::vector<double>& a, const std::vector<double>& b) {
        if (a.size() != b.size()) return false;
        for (size_t i = 0; i < a.size(); ++i)
            if (std::fabs(a[i] - b[i]) > 1e-12) return false;
        return true;
    }

    bool add(const std::string& key, std::vector<double> pt) {
        auto& pool = pools[key];
        for (const auto& q : pool)
            if (close(q, pt)) return false;
        pool.push_back(std::move(pt));
        return true;
    }

    const std::vector<std::vector<double>>& at(const std::string& key) const {
        auto it = pools.find(key);
        if (it == pools.end())
            throw Error("sample pool '" + key + "' was never initialized");
        return it->second;
    }
};

inline SampleSets init_sample_sets(const Problem& p, CertKind kind, const CegisConfig& cfg,
                                   SplitMix64& rng) {
    SampleSets ss;
    const size_t n = (size_t)std::max(cfg.samples_per_set, 1);

    if (p.is_finite) {
        // Exhaustive pools: synthesis degenerates to one complete LP.
        const auto& fin = p.fin;
        auto emb = [&](int s) { return fin.embedding[s]; };
        auto& s1 = ss.pools["S1"];
        for (int s = 0; s < fin.num_states; ++s) s1.push_back(emb(s));
        ss.pools["S2"] = s1;
        for (int s : fin.initial) ss.pools["S3"].push_back(emb(s));
        for (int s : p.unsafe_states) ss.pools["Su"].push_back(emb(s));
        if (kind == CertKind::PersistenceClosure) {
            auto& s4 = ss.pools["S4"];
            for (int y : p.vf_states)
                for (int z : p.vf_states) {
                    auto pt = emb(y);
                    auto ez = emb(z);
                    pt.insert(pt.end(), ez.begin(), ez.end());
                    s4.push_back(std::move(pt));
                }
        }
        if (kind == CertKind::LtlClosure) {
            auto& s4 = ss.pools["S4"];
            for (int y = 0; y < fin.num_states; ++y)
                for (int z = 0; z < fin.num_states; ++z) {
                    auto pt = emb(y);
                    auto ez = emb(z);
                    pt.insert(pt.end(), ez.begin(), ez.end());
                    s4.push_back(std::move(pt));
                }
            for (const auto& entry : p.labeling.entries) {
                auto& pool = ss.pools[label_region_id(entry.letter)];
                for (int s : entry.states) pool.push_back(emb(s));
            }
        }
        return ss;
    }

    const Region& X = p.regions.get("X");
    ss.pools["S1"] = sample_region(X, n, rng, &p.regions);
    ss.pools["S2"] = sample_region(X, n, rng, &p.regions);
    ss.pools["S3"] = sample_region(p.regions.get("X0"), n, rng, &p.regions);
    if (kind == CertKind::Barrier || kind == CertKind::SafetyClosure)
        ss.pools["Su"] = sample_region(p.regions.get("Xu"), n, rng, &p.regions);
    if (kind == CertKind::PersistenceClosure) {
        const Region& V = p.regions.get("XVF");
        auto ys = sample_region(V, n, rng, &p.regions);
        auto zs = sample_region(V, n, rng, &p.regions);
        auto& s4 = ss.pools["S4"];
        for (size_t i = 0; i < n; ++i) {
            auto pt = ys[i];
            pt.insert(pt.end(), zs[i].begin(), zs[i].end());
            s4.push_back(std::move(pt));
        }
    }
    if (kind == CertKind::LtlClosure) {
        auto ys = sample_region(X, n, rng, &p.regions);
        auto zs = sample_region(X, n, rng, &p.regions);
        auto& s4 = ss.pools["S4"];
        for (size_t i = 0; i < n; ++i) {
            auto pt = ys[i];
            pt.insert(pt.end(), zs[i].begin(), zs[i].end());
            s4.push_back(std::move(pt));
        }
        for (const auto& entry : p.labeling.entries)
            ss.pools[label_region_id(entry.letter)] =
                sample_region(entry.region, n, rng, &p.regions);
    }
    return ss;
}

// ---------------------------------------------------------------------------
// LP assembly.

namespace detail {

// Variable layout: one coefficient slice per certificate piece, then the gap
// (or barrier margin) column last.
struct LpLayout {
    int q = 1; // automaton states for piecewise layouts, 1 otherwise
    std::vector<int> offsets, sizes;
    int xi_col = 0;
    int num_vars = 0;

    int offset(int i, int j) const { return offsets[(size_t)(i * q + j)]; }
    int size(int i, int j) const { return sizes[(size_t)(i * q + j)]; }
};

struct BoundTemplate {
    std::vector<std::vector<Expr>> piece_bases; // index i*q+j; single entry when flat
    LpLayout layout;

    const std::vector<Expr>& basis(int i, int j) const {
        return piece_bases[(size_t)(i * layout.q + j)];
    }
};

inline BoundTemplate bind_template(const CertificateTemplate& tmpl, int dim, int q) {
    BoundTemplate bt;
    bt.layout.q = tmpl.piecewise ? q : 1;
    int pieces = bt.layout.q * bt.layout.q;
    bt.piece_bases.resize((size_t)pieces);
    std::vector<Expr> shared = tmpl.bind(dim);
    for (int i = 0; i < bt.layout.q; ++i)
        for (int j = 0; j < bt.layout.q; ++j) {
            auto it = tmpl.piece_basis_text.find({i, j});
            bt.piece_bases[(size_t)(i * bt.layout.q + j)] =
                it == tmpl.piece_basis_text.end()
                    ? shared
                    : parse_basis(it->second, dim, tmpl.arity());
        }
    int off = 0;
    for (int k = 0; k < pieces; ++k) {
        bt.layout.offsets.push_back(off);
        int sz = (int)bt.piece_bases[(size_t)k].size();
        bt.layout.sizes.push_back(sz);
        off += sz;
    }
    bt.layout.xi_col = off;
    bt.layout.num_vars = off + 1;
    return bt;
}

// Basis elements remapped onto claim blocks; row coefficients come from
// evaluating these at stacked sample points.
inline std::vector<Expr> remap_basis(const Problem& p, const std::vector<Expr>& basis, int dim,
                                     const CertArg& ax, const CertArg* ay,
                                     ScopedRegionTable& table) {
    std::vector<double> ones(basis.size(), 1.0);
    std::vector<IndBinding> inds;
    auto terms = instantiate_terms(basis, ones, dim, ax, ay, inds);
    bind_indicators(p, inds, table);
    std::vector<Expr> out;
    out.reserve(terms.size());
    for (auto& wt : terms) out.push_back(std::move(wt.term));
    return out;
}

inline bool row_is_vacuous(const std::vector<double>& coeffs) {
    for (double v : coeffs)
        if (std::fabs(v) > 1e-12) return false;
    return true;
}

// Accumulates y-stacked evaluation of remapped elements into a row slice.
inline void accumulate(std::vector<double>& row, int offset, const std::vector<Expr>& elems,
                       double scale, std::span<const double> pt, const ScopedRegionTable& table) {
    for (size_t k = 0; k < elems.size(); ++k)
        row[(size_t)offset + k] += scale * elems[k].eval_point(pt, &table);
}

inline std::vector<double> stack2(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline void add_row(LinearProgram& lp, std::vector<double> row, double rhs) {
    if (row_is_vacuous(row)) return; // 0 >= 0; a cushion must not forbid it
    lp.add_row(std::move(row), Relation::Ge, rhs);
}

inline LinearProgram make_program(const LpLayout& layout, const CegisConfig& cfg) {
    LinearProgram lp;
    lp.num_vars = layout.num_vars;
    lp.lower.assign((size_t)lp.num_vars, -10.0);
    lp.upper.assign((size_t)lp.num_vars, 10.0);
    lp.lower[(size_t)layout.xi_col] = cfg.xi_min;
    lp.upper[(size_t)layout.xi_col] = cfg.xi_max;
    lp.objective.assign((size_t)lp.num_vars, 0.0);
    lp.objective[(size_t)layout.xi_col] = 1.0;
    return lp;
}

inline LinearProgram build_barrier_lp(const Problem& p, const BoundTemplate& bt,
                                      const SampleSets& ss, const CegisConfig& cfg) {
    const int n = p.dimension();
    const auto& basis = bt.basis(0, 0);
    const int K = (int)basis.size();
    LinearProgram lp = make_program(bt.layout, cfg);

    ScopedRegionTable table;
    auto e_x = remap_basis(p, basis, n, CertArg::block(0), nullptr, table);
    std::vector<Expr> e_fx;
    if (!p.is_finite)
        e_fx = remap_basis(p, basis, n, CertArg::composed(p.cont.dynamics, "f0"), nullptr, table);

    for (const auto& x0 : ss.at("S3")) { // B(x0) <= 0
        std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
        accumulate(row, 0, e_x, -1.0, x0, table);
        add_row(lp, std::move(row), 0.0);
    }
    for (const auto& xu : ss.at("Su")) { // B(xu) >= margin
        std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
        accumulate(row, 0, e_x, 1.0, xu, table);
        row[(size_t)bt.layout.xi_col] = -1.0;
        add_row(lp, std::move(row), 0.0);
    }
    if (p.is_finite) { // B(t) <= B(s) along every transition
        for (int s = 0; s < p.fin.num_states; ++s)
            for (int t : p.fin.succ[s]) {
                std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
                for (int k = 0; k < K; ++k)
                    row[(size_t)k] = basis[(size_t)k].eval_point(p.fin.embedding[s], &p.regions) -
                                     basis[(size_t)k].eval_point(p.fin.embedding[t], &p.regions);
                add_row(lp, std::move(row), 0.0);
            }
    } else {
        for (const auto& x : ss.at("S1")) {
            std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
            accumulate(row, 0, e_x, 1.0, x, table);
            accumulate(row, 0, e_fx, -1.0, x, table);
            add_row(lp, std::move(row), 0.0);
        }
    }
    return lp;
}

inline LinearProgram build_flat_closure_lp(const Problem& p, const BoundTemplate& bt,
                                           bool persistence, const SampleSets& ss,
                                           const CegisConfig& cfg) {
    const int n = p.dimension();
    const auto& basis = bt.basis(0, 0);
    const int K = (int)basis.size();
    const int xi = bt.layout.xi_col;
    const double rho = cfg.effective_cushion(p.is_finite);
    LinearProgram lp = make_program(bt.layout, cfg);

    auto eval_basis = [&](const std::vector<double>& stacked) {
        std::vector<double> v((size_t)K);
        for (int k = 0; k < K; ++k)
            v[(size_t)k] = basis[(size_t)k].eval_point(stacked, &p.regions);
        return v;
    };

    if (p.is_finite) {
        const auto& fin = p.fin;
        auto emb = [&](int s) { return fin.embedding[s]; };
        for (int s = 0; s < fin.num_states; ++s)
            for (int t : fin.succ[s]) { // T(s, t) >= rho
                std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
                auto v = eval_basis(stack2(emb(s), emb(t)));
                for (int k = 0; k < K; ++k) row[(size_t)k] = v[(size_t)k];
                add_row(lp, std::move(row), rho);
            }
        for (int s = 0; s < fin.num_states; ++s)
            for (int t : fin.succ[s])
                for (int y = 0; y < fin.num_states; ++y) { // T(s,y) >= tau1 T(t,y)
                    std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
                    auto here = eval_basis(stack2(emb(s), emb(y)));
                    auto succ = eval_basis(stack2(emb(t), emb(y)));
                    for (int k = 0; k < K; ++k)
                        row[(size_t)k] = here[(size_t)k] - cfg.tau1 * succ[(size_t)k];
                    add_row(lp, std::move(row), 0.0);
                }
        if (!persistence) {
            for (int s0 : fin.initial)
                for (int su : p.unsafe_states) { // -T(s0, su) >= xi
                    std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
                    auto v = eval_basis(stack2(emb(s0), emb(su)));
                    for (int k = 0; k < K; ++k) row[(size_t)k] = -v[(size_t)k];
                    row[(size_t)xi] = -1.0;
                    add_row(lp, std::move(row), 0.0);
                }
        } else {
            for (int s0 : fin.initial)
                for (int y : p.vf_states)
                    for (int z : p.vf_states) {
                        std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
                        auto a = eval_basis(stack2(emb(s0), emb(y)));
                        auto b = eval_basis(stack2(emb(y), emb(z)));
                        auto c = eval_basis(stack2(emb(s0), emb(z)));
                        for (int k = 0; k < K; ++k)
                            row[(size_t)k] = (1.0 - cfg.tau2) * a[(size_t)k] -
                                             cfg.tau3 * b[(size_t)k] - c[(size_t)k];
                        row[(size_t)xi] = -1.0;
                        add_row(lp, std::move(row), 0.0);
                    }
        }
        return lp;
    }

    CertArg fx = CertArg::composed(p.cont.dynamics, "f0");
    ScopedRegionTable tstep;
    auto e_step = remap_basis(p, basis, n, CertArg::block(0), &fx, tstep);
    ScopedRegionTable tprop;
    CertArg ay = CertArg::block(n);
    auto e_xy = remap_basis(p, basis, n, CertArg::block(0), &ay, tprop);
    auto e_fxy = remap_basis(p, basis, n, fx, &ay, tprop);

    for (const auto& x : ss.at("S1")) { // T(x, f(x)) >= rho
        std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
        accumulate(row, 0, e_step, 1.0, x, tstep);
        add_row(lp, std::move(row), rho);
    }
    for (const auto& x : ss.at("S1"))
        for (const auto& y : ss.at("S2")) { // T(x,y) >= tau1 T(f(x),y)
            std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
            auto xy = stack2(x, y);
            accumulate(row, 0, e_xy, 1.0, xy, tprop);
            accumulate(row, 0, e_fxy, -cfg.tau1, xy, tprop);
            add_row(lp, std::move(row), 0.0);
        }

    if (!persistence) {
        ScopedRegionTable tgap;
        auto e_gap = remap_basis(p, basis, n, CertArg::block(0), &ay, tgap);
        for (const auto& x0 : ss.at("S3"))
            for (const auto& xu : ss.at("Su")) { // -T(x0, xu) >= xi
                std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
                accumulate(row, 0, e_gap, -1.0, stack2(x0, xu), tgap);
                row[(size_t)xi] = -1.0;
                add_row(lp, std::move(row), 0.0);
            }
    } else {
        ScopedRegionTable tdec;
        CertArg b1 = CertArg::block(n), b2 = CertArg::block(2 * n);
        auto e_a = remap_basis(p, basis, n, CertArg::block(0), &b1, tdec);
        auto e_b = remap_basis(p, basis, n, b1, &b2, tdec);
        auto e_c = remap_basis(p, basis, n, CertArg::block(0), &b2, tdec);
        for (const auto& x0 : ss.at("S3"))
            for (const auto& yz : ss.at("S4")) {
                std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
                auto pt = stack2(x0, yz);
                accumulate(row, 0, e_a, 1.0 - cfg.tau2, pt, tdec);
                accumulate(row, 0, e_b, -cfg.tau3, pt, tdec);
                accumulate(row, 0, e_c, -1.0, pt, tdec);
                row[(size_t)xi] = -1.0;
                add_row(lp, std::move(row), 0.0);
            }
    }
    return lp;
}

inline LinearProgram build_ltl_lp(const Problem& p, const BoundTemplate& bt,
                                  const SampleSets& ss, const CegisConfig& cfg) {
    if (!p.has_nba) throw KindMismatch("product synthesis needs an automaton");
    const int n = p.dimension();
    const Nba& a = p.nba;
    const int xi = bt.layout.xi_col;
    const double rho = cfg.effective_cushion(p.is_finite);
    LinearProgram lp = make_program(bt.layout, cfg);

    if (p.is_finite) {
        const auto& fin = p.fin;
        auto emb = [&](int s) { return fin.embedding[s]; };
        auto eval_basis = [&](int i, int j, const std::vector<double>& stacked, int k) {
            return bt.basis(i, j)[(size_t)k].eval_point(stacked, &p.regions);
        };
        std::vector<Letter> letter_of((size_t)fin.num_states);
        for (int s = 0; s < fin.num_states; ++s) letter_of[(size_t)s] = p.labeling.letter_of_state(s);

        for (int s = 0; s < fin.num_states; ++s)
            for (int i = 0; i < a.num_states; ++i)
                for (int ip : a.delta(i, letter_of[(size_t)s]))
                    for (int t : fin.succ[s]) {
                        std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
                        auto st = stack2(emb(s), emb(t));
                        for (int k = 0; k < bt.layout.size(i, ip); ++k)
                            row[(size_t)(bt.layout.offset(i, ip) + k)] = eval_basis(i, ip, st, k);
                        add_row(lp, std::move(row), rho);
                    }
        for (int s = 0; s < fin.num_states; ++s)
            for (int i = 0; i < a.num_states; ++i)
                for (int ip : a.delta(i, letter_of[(size_t)s]))
                    for (int j = 0; j < a.num_states; ++j)
                        for (int t : fin.succ[s])
                            for (int y = 0; y < fin.num_states; ++y) {
                                std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
                                auto sy = stack2(emb(s), emb(y));
                                auto ty = stack2(emb(t), emb(y));
                                for (int k = 0; k < bt.layout.size(i, j); ++k)
                                    row[(size_t)(bt.layout.offset(i, j) + k)] +=
                                        eval_basis(i, j, sy, k);
                                for (int k = 0; k < bt.layout.size(ip, j); ++k)
                                    row[(size_t)(bt.layout.offset(ip, j) + k)] -=
                                        cfg.tau1 * eval_basis(ip, j, ty, k);
                                add_row(lp, std::move(row), 0.0);
                            }
        for (int s : a.initial)
            for (int l1 : a.accepting)
                for (int l2 : a.accepting)
                    for (int x0 : fin.initial)
                        for (int y = 0; y < fin.num_states; ++y)
                            for (int z = 0; z < fin.num_states; ++z) {
                                std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
                                auto xy = stack2(emb(x0), emb(y));
                                auto yz = stack2(emb(y), emb(z));
                                auto xz = stack2(emb(x0), emb(z));
                                for (int k = 0; k < bt.layout.size(s, l1); ++k)
                                    row[(size_t)(bt.layout.offset(s, l1) + k)] +=
                                        (1.0 - cfg.tau2) * eval_basis(s, l1, xy, k);
                                for (int k = 0; k < bt.layout.size(l1, l2); ++k)
                                    row[(size_t)(bt.layout.offset(l1, l2) + k)] -=
                                        cfg.tau3 * eval_basis(l1, l2, yz, k);
                                for (int k = 0; k < bt.layout.size(s, l2); ++k)
                                    row[(size_t)(bt.layout.offset(s, l2) + k)] -=
                                        eval_basis(s, l2, xz, k);
                                row[(size_t)xi] = -1.0;
                                add_row(lp, std::move(row), 0.0);
                            }
        return lp;
    }

    CertArg fx = CertArg::composed(p.cont.dynamics, "f0");
    CertArg ay = CertArg::block(n);
    for (int i = 0; i < a.num_states; ++i)
        for (const auto& e : a.edges[i]) {
            const Labeling::Entry* le = p.labeling.find(e.letter);
            if (!le) continue;
            const auto& pool = ss.at(label_region_id(e.letter));

            ScopedRegionTable tstep;
            auto e_step = remap_basis(p, bt.basis(i, e.target), n, CertArg::block(0), &fx, tstep);
            for (const auto& x : pool) {
                std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
                accumulate(row, bt.layout.offset(i, e.target), e_step, 1.0, x, tstep);
                add_row(lp, std::move(row), rho);
            }
            for (int j = 0; j < a.num_states; ++j) {
                ScopedRegionTable tprop;
                auto e_here = remap_basis(p, bt.basis(i, j), n, CertArg::block(0), &ay, tprop);
                auto e_succ = remap_basis(p, bt.basis(e.target, j), n, fx, &ay, tprop);
                for (const auto& x : pool)
                    for (const auto& y : ss.at("S2")) {
                        std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
                        auto xy = stack2(x, y);
                        accumulate(row, bt.layout.offset(i, j), e_here, 1.0, xy, tprop);
                        accumulate(row, bt.layout.offset(e.target, j), e_succ, -cfg.tau1, xy,
                                   tprop);
                        add_row(lp, std::move(row), 0.0);
                    }
            }
        }
    CertArg b1 = CertArg::block(n), b2 = CertArg::block(2 * n);
    for (int s : a.initial)
        for (int l1 : a.accepting)
            for (int l2 : a.accepting) {
                ScopedRegionTable tdec;
                auto e_a = remap_basis(p, bt.basis(s, l1), n, CertArg::block(0), &b1, tdec);
                auto e_b = remap_basis(p, bt.basis(l1, l2), n, b1, &b2, tdec);
                auto e_c = remap_basis(p, bt.basis(s, l2), n, CertArg::block(0), &b2, tdec);
                for (const auto& x0 : ss.at("S3"))
                    for (const auto& yz : ss.at("S4")) {
                        std::vector<double> row((size_t)bt.layout.num_vars, 0.0);
                        auto pt = stack2(x0, yz);
                        accumulate(row, bt.layout.offset(s, l1), e_a, 1.0 - cfg.tau2, pt, tdec);
                        accumulate(row, bt.layout.offset(l1, l2), e_b, -cfg.tau3, pt, tdec);
                        accumulate(row, bt.layout.offset(s, l2), e_c, -1.0, pt, tdec);
                        row[(size_t)xi] = -1.0;
                        add_row(lp, std::move(row), 0.0);
                    }
            }
    return lp;
}

inline LinearProgram build_candidate_lp(const Problem& p, const CertificateTemplate& tmpl,
                                        const BoundTemplate& bt, const SampleSets& ss,
                                        const CegisConfig& cfg) {
    switch (tmpl.kind) {
    case CertKind::Barrier: return build_barrier_lp(p, bt, ss, cfg);
    case CertKind::SafetyClosure: return build_flat_closure_lp(p, bt, false, ss, cfg);
    case CertKind::PersistenceClosure: return build_flat_closure_lp(p, bt, true, ss, cfg);
    case CertKind::LtlClosure: return build_ltl_lp(p, bt, ss, cfg);
    }
    throw KindMismatch("unknown template kind");
}

// Secondary solve: pin the gap at its optimum and minimize the coefficient
// 1-norm so coefficients that are only present as solver noise go to zero.
inline std::vector<double> regularize(const LinearProgram& lp, const LpLayout& layout,
                                      const LpResult& primary) {
    LinearProgram reg;
    const int base = lp.num_vars;
    const int extra = layout.xi_col; // one |.| variable per coefficient
    reg.num_vars = base + extra;
    reg.lower = lp.lower;
    reg.upper = lp.upper;
    reg.lower[(size_t)layout.xi_col] = primary.x[(size_t)layout.xi_col];
    reg.upper[(size_t)layout.xi_col] = primary.x[(size_t)layout.xi_col];
    double amax = 0;
    for (int k = 0; k < extra; ++k)
        amax = std::max(amax, std::max(std::fabs(lp.lower[(size_t)k]), std::fabs(lp.upper[(size_t)k])));
    reg.lower.insert(reg.lower.end(), (size_t)extra, 0.0);
    reg.upper.insert(reg.upper.end(), (size_t)extra, amax);
    reg.objective.assign((size_t)reg.num_vars, 0.0);
    for (int k = 0; k < extra; ++k) reg.objective[(size_t)(base + k)] = -1.0;
    for (const auto& r : lp.rows) {
        std::vector<double> row = r.coeffs;
        row.resize((size_t)reg.num_vars, 0.0);
        reg.rows.push_back(LpRow{std::move(row), r.rel, r.rhs});
    }
    for (int k = 0; k < extra; ++k) {
        std::vector<double> up((size_t)reg.num_vars, 0.0), dn((size_t)reg.num_vars, 0.0);
        up[(size_t)(base + k)] = 1.0;
        up[(size_t)k] = -1.0;
        dn[(size_t)(base + k)] = 1.0;
        dn[(size_t)k] = 1.0;
        reg.add_row(std::move(up), Relation::Ge, 0.0);
        reg.add_row(std::move(dn), Relation::Ge, 0.0);
    }
    LpResult r = solve_lp_active(reg);
    if (r.status != LpStatus::Feasible) return primary.x; // keep the primal optimum
    std::vector<double> x(r.x.begin(), r.x.begin() + base);
    return x;
}

inline Certificate assemble_certificate(const CertificateTemplate& tmpl, const BoundTemplate& bt,
                                        const Problem& p, std::vector<double> x,
                                        const CegisConfig& cfg) {
    const double snap = cfg.coeff_snap;
    for (int k = 0; k < bt.layout.xi_col; ++k)
        if (std::fabs(x[(size_t)k]) < snap) x[(size_t)k] = 0.0;

    Certificate c;
    c.kind = tmpl.kind;
    c.dimension = p.dimension();
    c.basis_text = tmpl.basis_text;
    c.basis = bt.piece_bases[0];
    c.tau1 = cfg.tau1;
    c.tau2 = cfg.tau2;
    c.tau3 = cfg.tau3;
    double xi_star = x[(size_t)bt.layout.xi_col];
    double backoff = cfg.effective_cushion(p.is_finite);
    c.xi = std::clamp(xi_star - backoff, cfg.xi_min, xi_star);
    if (tmpl.piecewise) {
        c.piecewise = true;
        c.basis = bt.piece_bases[0];
        for (int i = 0; i < bt.layout.q; ++i)
            for (int j = 0; j < bt.layout.q; ++j) {
                auto first = x.begin() + bt.layout.offset(i, j);
                c.pieces[{i, j}] = std::vector<double>(first, first + bt.layout.size(i, j));
                auto it = tmpl.piece_basis_text.find({i, j});
                if (it != tmpl.piece_basis_text.end()) {
                    c.piece_basis_override[{i, j}] = bt.piece_bases[(size_t)(i * bt.layout.q + j)];
                    c.piece_basis_text[{i, j}] = it->second;
                }
            }
    } else {
        c.coeffs = std::vector<double>(x.begin(), x.begin() + bt.layout.size(0, 0));
    }
    c.validate();
    return c;
}

inline double claim_value_at(const ConditionClaim& cc, std::span<const double> pt) {
    if (cc.kind == ClaimKind::ForAllNonneg || cc.strict_positive)
        return cc.exprs[0].eval_point(pt, cc.table.get());
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& e : cc.exprs) worst = std::min(worst, e.eval_point(pt, cc.table.get()));
    return worst;
}

inline bool claim_violated(const ConditionClaim& cc, double value, double eps) {
    if (cc.strict_positive) return value <= 0;
    if (cc.kind == ClaimKind::ForAllNonneg) return value <= -eps / 2;
    return value >= eps / 2;
}

} // namespace detail

// ---------------------------------------------------------------------------
// The refinement loop.

inline std::vector<ConditionClaim> build_synthesis_claims(const Problem& p, const Certificate& c,
                                                          double eps) {
    switch (c.kind) {
    case CertKind::Barrier: return build_barrier_claims(p, c, CheckConfig::Mode::Strengthened, eps);
    case CertKind::SafetyClosure:
        return build_safety_cc_claims(p, c, CheckConfig::Mode::Strengthened, eps);
    case CertKind::PersistenceClosure:
        return build_persistence_cc_claims(p, c, CheckConfig::Mode::Strengthened, eps);
    case CertKind::LtlClosure:
        return build_ltl_cc_claims(p, c, CheckConfig::Mode::Strengthened, eps);
    }
    throw KindMismatch("unknown certificate kind");
}

namespace detail {

inline void route_counterexample(SampleSets& ss, const ConditionClaim& cc,
                                 const std::vector<double>& w) {
    const size_t d = (size_t)cc.dim;
    bool inserted = false;
    size_t b = 0;
    while (b < cc.block_pools.size()) {
        if (cc.block_pools[b] == "S4" && b + 1 < cc.block_pools.size() &&
            cc.block_pools[b + 1] == "S4") {
            inserted |= ss.add("S4", std::vector<double>(w.begin() + (long)(b * d),
                                                         w.begin() + (long)((b + 2) * d)));
            b += 2;
        } else {
            inserted |= ss.add(cc.block_pools[b],
                               std::vector<double>(w.begin() + (long)(b * d),
                                                   w.begin() + (long)((b + 1) * d)));
            b += 1;
        }
    }
    if (!inserted)
        throw NumericalBreakdown("counterexample for " + cc.condition +
                                 " was already in the sample pools; no progress possible");
}

struct Refutation {
    bool found = false;
    std::string condition;
    std::vector<double> witness;
    double value = 0;
};

// Cheap randomized screen before the branch-and-prune pass.
inline Refutation prescreen_claims(const std::vector<ConditionClaim>& claims,
                                   const CegisConfig& cfg, SampleSets& ss, uint64_t iter) {
    Refutation best;
    SplitMix64 root = SplitMix64(cfg.seed).fork(0x70F1D2E3 + iter);
    uint64_t idx = 0;
    for (const auto& cc : claims) {
        for (const auto& dom : cc.domains) {
            SplitMix64 rng = root.fork(idx++);
            std::vector<double> pt(dom.box.size());
            int produced = 0;
            uint64_t attempts = 0;
            const uint64_t cap = 1000ull * (uint64_t)cfg.prescreen + 1000;
            while (produced < cfg.prescreen && attempts < cap) {
                ++attempts;
                for (size_t k = 0; k < dom.box.size(); ++k)
                    pt[k] = rng.uniform(dom.box[k].lo, dom.box[k].hi);
                bool ok = true;
                for (const auto& g : dom.constraints)
                    if (g.eval_point(pt, cc.table.get()) < 0) {
                        ok = false;
                        break;
                    }
                if (!ok) continue;
                ++produced;
                double v = claim_value_at(cc, pt);
                if (claim_violated(cc, v, cfg.falsifier.eps)) {
                    route_counterexample(ss, cc, pt);
                    best.found = true;
                    best.condition = cc.condition;
                    best.witness = pt;
                    best.value = v;
                    return best;
                }
            }
        }
    }
    return best;
}

// Full branch-and-prune pass; mirrors the checker's engine but keeps the
// claim at hand so witnesses can be routed to the right pools.
inline Refutation falsify_claims(const std::vector<ConditionClaim>& claims,
                                 const CegisConfig& cfg, SampleSets& ss, std::string& unknown) {
    Refutation r;
    for (const auto& cc : claims) {
        if (cc.strict_positive) {
            for (const auto& dom : cc.domains) {
                BoundResult br =
                    bound_min(cc.exprs[0], dom.box, dom.constraints, cc.table.get(), cfg.falsifier);
                if (br.upper <= 0 && !br.arg_upper.empty()) {
                    route_counterexample(ss, cc, br.arg_upper);
                    r.found = true;
                    r.condition = cc.condition;
                    r.witness = br.arg_upper;
                    r.value = br.upper;
                    return r;
                }
                if (!(br.lower > 0)) {
                    unknown = cc.condition + ": could not separate the value from zero";
                    return r;
                }
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
            if (fr.outcome == Outcome::Falsified) {
                route_counterexample(ss, cc, fr.witness);
                r.found = true;
                r.condition = cc.condition;
                r.witness = fr.witness;
                r.value = fr.witness_value;
                return r;
            }
            if (fr.outcome == Outcome::Unknown) {
                unknown = cc.condition + ": " +
                          (fr.budget_exhausted ? "box budget exhausted" : "unresolved boxes") +
                          " (smallest box " + std::to_string(fr.smallest_box) + ")";
                return r;
            }
        }
    }
    return r;
}

} // namespace detail

inline SynthesisResult synthesize(const Problem& p, const CertificateTemplate& tmpl,
                                  const CegisConfig& cfg = {}) {
    if (tmpl.kind == CertKind::LtlClosure && !tmpl.piecewise)
        throw ArityMismatch("product synthesis needs a piecewise template");
    if ((tmpl.kind == CertKind::LtlClosure) != (p.spec == SpecKind::Ltl))
        throw KindMismatch("template kind does not fit the problem specification");
    if (tmpl.kind == CertKind::PersistenceClosure && p.spec != SpecKind::Persistence)
        throw KindMismatch("persistence template needs a persistence problem");
    if ((tmpl.kind == CertKind::Barrier || tmpl.kind == CertKind::SafetyClosure) &&
        p.spec != SpecKind::Safety)
        throw KindMismatch("safety template needs a safety problem");
    if (p.is_finite && !p.fin.has_embedding())
        throw FormatError("finite synthesis needs an embedding");

    const int q = p.has_nba ? p.nba.num_states : 1;
    detail::BoundTemplate bt = detail::bind_template(tmpl, p.dimension(), q);

    SplitMix64 rng(cfg.seed);
    SampleSets samples = init_sample_sets(p, tmpl.kind, cfg, rng);

    SynthesisResult res;
    for (int iter = 0; iter < std::max(cfg.max_iters, 1); ++iter) {
        res.iterations = iter + 1;
        LinearProgram lp = detail::build_candidate_lp(p, tmpl, bt, samples, cfg);
        LpResult primary = solve_lp_active(lp);
        if (primary.status == LpStatus::Infeasible) {
            // Confirm against the unabridged program before reporting.
            if (lp.rows.size() > 256 && solve_lp(lp).status == LpStatus::Feasible)
                throw NumericalBreakdown("row-activation solver disagreed with the direct solve");
            res.reason = FailureReason::InfeasibleLp;
            res.detail = "constraint system infeasible after " + std::to_string(iter) +
                         " refinement(s), " + std::to_string(lp.rows.size()) + " rows";
            return res;
        }
        std::vector<double> x = detail::regularize(lp, bt.layout, primary);
        Certificate cand = detail::assemble_certificate(tmpl, bt, p, std::move(x), cfg);

        IterationRecord rec;
        rec.iteration = iter;
        rec.xi = primary.x[(size_t)bt.layout.xi_col];
        rec.lp_rows = lp.rows.size();

        if (p.is_finite) {
            // Pools were exhaustive, so the candidate is final: hand it to the
            // exact checker.
            Verdict v = check_certificate(cand, p);
            if (!v.verified())
                throw NumericalBreakdown(
                    "exhaustive verification rejected an LP-feasible candidate on condition " +
                    v.condition);
            res.success = true;
            res.certificate = std::move(cand);
            res.verdict = std::move(v);
            res.history.push_back(std::move(rec));
            return res;
        }

        auto claims = build_synthesis_claims(p, cand, cfg.falsifier.eps);
        detail::Refutation ref = detail::prescreen_claims(claims, cfg, samples, (uint64_t)iter);
        if (!ref.found) {
            std::string unknown;
            ref = detail::falsify_claims(claims, cfg, samples, unknown);
            if (!ref.found && !unknown.empty()) {
                res.reason = FailureReason::FalsifierBudget;
                res.detail = unknown;
                res.history.push_back(std::move(rec));
                return res;
            }
        }
        if (ref.found) {
            rec.refuted_condition = ref.condition;
            rec.counterexample = ref.witness;
            res.history.push_back(std::move(rec));
            continue;
        }

        // Candidate survived; re-verify through the public checker interface.
        CheckConfig ck;
        ck.falsifier = cfg.falsifier;
        Verdict v = check_certificate(cand, p, ck);
        if (!v.verified())
            throw NumericalBreakdown("independent checker rejected a falsifier-clean candidate (" +
                                     std::string(to_string(v.kind)) + " on " + v.condition + ")");
        res.success = true;
        res.certificate = std::move(cand);
        res.verdict = std::move(v);
        res.history.push_back(std::move(rec));
        return res;
    }
    res.reason = FailureReason::MaxIterations;
    res.detail = "no candidate survived falsification within " + std::to_string(cfg.max_iters) +
                 " iterations";
    return res;
}

// Degree-d polynomial barrier feasibility on a finite embedded system: the
// exhaustive barrier LP with an all-monomials basis. Used to demonstrate
// problems where low-degree barriers cannot exist.
inline LpResult barrier_lp_feasibility(const Problem& p, int degree, double margin_min = 1e-3,
                                       Certificate* out = nullptr) {
    if (!p.is_finite) throw KindMismatch("barrier feasibility scan needs a finite problem");
    if (!p.fin.has_embedding()) throw FormatError("finite problem needs an embedding");
    if (degree < 0) throw FormatError("degree must be nonnegative");
    const int dim = p.fin.embedding_dim();

    // All monomials of total degree <= degree over the embedding variables.
    std::vector<std::string> names = make_var_names(dim, 1);
    std::vector<std::string> basis_text;
    std::vector<int> expo((size_t)dim, 0);
    auto emit = [&]() {
        std::string s;
        for (int v = 0; v < dim; ++v)
            for (int k = 0; k < expo[(size_t)v]; ++k)
                s += (s.empty() ? "" : "*") + names[(size_t)v];
        basis_text.push_back(s.empty() ? "1" : s);
    };
    // Enumerate exponent vectors in graded order.
    std::function<void(int, int)> rec = [&](int v, int left) {
        if (v == dim) {
            emit();
            return;
        }
        for (int e = 0; e <= left; ++e) {
            expo[(size_t)v] = e;
            rec(v + 1, left - e);
        }
        expo[(size_t)v] = 0;
    };
    rec(0, degree);

    CertificateTemplate tmpl;
    tmpl.kind = CertKind::Barrier;
    tmpl.basis_text = basis_text;

    CegisConfig cfg;
    cfg.xi_min = margin_min;
    detail::BoundTemplate bt = detail::bind_template(tmpl, dim, 1);
    SplitMix64 rng(cfg.seed);
    SampleSets ss = init_sample_sets(p, CertKind::Barrier, cfg, rng);
    LinearProgram lp = detail::build_barrier_lp(p, bt, ss, cfg);
    LpResult r = solve_lp_active(lp);
    if (r.status == LpStatus::Feasible && out)
        *out = detail::assemble_certificate(tmpl, bt, p, r.x, cfg);
    return r;
}

} // namespace ccert
