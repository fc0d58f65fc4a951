#pragma once

// Path-cutting baseline and its translation into a product closure.
//
// The baseline enumerates the automaton's simple paths from an initial to an
// accepting state, splits each path into consecutive state triples, and tries
// to separate the letter pair carried by the two edges of a triple with a
// barrier certificate (initial set = states labeled with the first letter,
// unsafe set = states labeled with the second). A path is cut when some
// position has *every* letter pair of its two edges separated; the property
// is established when every path is cut, optionally after unrolling the
// automaton once.
//
// A successful run can then be converted into a case-defined product closure:
// automaton states are split into a "left" part (can still reach a cut
// middle), a "right" part (reachable from every cut middle), and the middles
// themselves, whose barrier decides the sign. The conversion re-checks its
// own output exhaustively and refuses — with a report — on automata whose cut
// structure cannot support the case table, instead of emitting an unsound
// certificate.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ccert/cegis.hpp"
#include "ccert/checker.hpp"
#include "ccert/errors.hpp"
#include "ccert/finite_analysis.hpp"
#include "ccert/nba.hpp"
#include "ccert/problem.hpp"

namespace ccert {

struct TripletConfig {
    std::size_t max_paths = 4096;         // PathExplosion guard
    CertificateTemplate barrier_template; // continuous cuts; empty basis = affine
    CegisConfig synth;                    // continuous barrier synthesis knobs
    CheckConfig recheck;                  // independent re-check of every cut barrier
};

struct TripletCut {
    Triplet triplet;
    Certificate barrier; // passes check_barrier on triplet_problem(p, triplet)
    bool tabular = false; // finite reach-set barrier in indicator form
    Region support;       // region referenced by a tabular barrier's indicator
};

struct TripletVerification {
    bool verified = false;
    bool unroll_used = false;
    Nba automaton;                           // the automaton the cuts refer to
    std::vector<std::vector<int>> paths;     // simple paths of `automaton`
    std::vector<TripletCut> cuts;            // deduplicated; cover paths when verified
    std::vector<std::vector<int>> uncut_paths;
};

// Barrier sub-problem for one triplet: same dynamics, initial set = states
// labeled with the first letter, unsafe set = states labeled with the second.
inline Problem triplet_problem(const Problem& p, const Triplet& t) {
    const Labeling::Entry* ea = p.labeling.find(t.a);
    const Labeling::Entry* eb = p.labeling.find(t.b);
    if (!ea || (p.is_finite ? ea->states.empty() : ea->region.empty()))
        throw EmptyLabelRegion(t.a.str());
    if (!eb || (p.is_finite ? eb->states.empty() : eb->region.empty()))
        throw EmptyLabelRegion(t.b.str());

    Problem sub;
    sub.name = p.name + ":cut(" + t.a.str() + "," + t.b.str() + ")";
    sub.spec = SpecKind::Safety;
    sub.is_finite = p.is_finite;
    sub.parameters = p.parameters;
    sub.regions = p.regions;
    if (p.is_finite) {
        sub.fin = p.fin;
        sub.fin.initial = ea->states;
        sub.unsafe_states = eb->states;
    } else {
        sub.cont = p.cont;
        sub.cont.init = ea->region;
        sub.cont.init.id = "X0";
        sub.unsafe = eb->region;
        sub.unsafe.id = "Xu";
        sub.regions.add(sub.cont.init);
        sub.regions.add(sub.unsafe);
    }
    return sub;
}

// Paths of `a` not covered by `cuts`. A path is covered when some position
// carries a recorded cut for every letter pair of its two edges.
inline std::vector<std::vector<int>> uncovered_paths(const Nba& a,
                                                     const std::vector<TripletCut>& cuts,
                                                     std::size_t max_paths = 4096) {
    auto paths = enumerate_simple_paths(a);
    if (paths.size() > max_paths)
        throw PathExplosion("automaton has " + std::to_string(paths.size()) +
                            " simple paths to acceptance (limit " +
                            std::to_string(max_paths) + ")");
    std::set<std::tuple<int, int, int, Letter, Letter>> have;
    for (const auto& c : cuts)
        have.insert({c.triplet.q0, c.triplet.q1, c.triplet.q2, c.triplet.a, c.triplet.b});

    std::vector<std::vector<int>> uncut;
    for (auto& path : paths) {
        bool covered = false;
        for (std::size_t i = 0; !covered && i + 2 < path.size(); ++i) {
            auto first = a.letters_between(path[i], path[i + 1]);
            auto second = a.letters_between(path[i + 1], path[i + 2]);
            covered = true;
            for (const auto& la : first) {
                for (const auto& lb : second)
                    if (!have.count({path[i], path[i + 1], path[i + 2], la, lb})) {
                        covered = false;
                        break;
                    }
                if (!covered) break;
            }
        }
        if (!covered) uncut.push_back(std::move(path));
    }
    return uncut;
}

namespace detail {

struct CutAttempt {
    bool ok = false;
    Certificate barrier;
    bool tabular = false;
    Region support;
};

// Forward closure of `seed` under the successor relation, as a mask.
inline std::vector<char> forward_reach(const FiniteSystem& fin, const std::vector<int>& seed) {
    std::vector<char> reach(fin.num_states, 0);
    std::vector<int> stack;
    for (int s : seed)
        if (!reach[s]) {
            reach[s] = 1;
            stack.push_back(s);
        }
    while (!stack.empty()) {
        int s = stack.back();
        stack.pop_back();
        for (int u : fin.succ[s])
            if (!reach[u]) {
                reach[u] = 1;
                stack.push_back(u);
            }
    }
    return reach;
}

// Indicator barrier that is -1 on the states of `mask` and +1 elsewhere. The
// mask must be closed under successors, which makes the step condition hold
// with equality or better everywhere.
inline CutAttempt tabular_barrier(const Problem& p, const std::vector<char>& mask,
                                  const std::string& region_id) {
    if (!p.fin.has_embedding())
        throw FormatError("finite problem needs an embedding for cut barriers");
    Region r;
    r.id = region_id;
    for (int s = 0; s < p.fin.num_states; ++s)
        if (mask[s]) {
            Box b;
            for (double v : p.fin.embedding[s]) b.push_back(Interval(v, v));
            r.clauses.push_back(RegionClause{std::move(b), {}});
        }

    CutAttempt out;
    out.ok = true;
    out.tabular = true;
    out.support = r;
    out.barrier.kind = CertKind::Barrier;
    out.barrier.dimension = p.fin.embedding_dim();
    out.barrier.basis_text = {"1", "ind(" + r.id + ")"};
    out.barrier.basis = parse_basis(out.barrier.basis_text, out.barrier.dimension, 1);
    out.barrier.coeffs = {1.0, -2.0};
    return out;
}

inline CutAttempt try_cut_finite(const Problem& p, const Triplet& t, const CheckConfig& recheck,
                                 int serial) {
    CutAttempt out;
    Problem sub = triplet_problem(p, t);
    std::vector<char> reach = forward_reach(p.fin, sub.fin.initial);
    for (int su : sub.unsafe_states)
        if (reach[su]) return out; // the second letter's states are reachable

    out = tabular_barrier(p, reach, "cutreach" + std::to_string(serial));
    sub.regions.add(out.support);
    Verdict v = check_barrier(out.barrier, sub, recheck);
    if (!v.verified())
        throw NumericalBreakdown("reach-set cut barrier failed its re-check on condition '" +
                                 v.condition + "'");
    return out;
}

inline CutAttempt try_cut_continuous(const Problem& p, const Triplet& t,
                                     const TripletConfig& cfg) {
    CutAttempt out;
    Problem sub = triplet_problem(p, t);

    CertificateTemplate tmpl = cfg.barrier_template;
    tmpl.kind = CertKind::Barrier;
    tmpl.piecewise = false;
    if (tmpl.basis_text.empty()) {
        tmpl.basis_text.push_back("1");
        for (int d = 1; d <= p.cont.dimension; ++d)
            tmpl.basis_text.push_back("x" + std::to_string(d));
    }

    SynthesisResult sr = synthesize(sub, tmpl, cfg.synth);
    if (!sr.success) return out;
    // Independent re-check: a barrier that cannot be confirmed under the
    // caller's checking budget is conservatively treated as no cut.
    Verdict v = check_barrier(sr.certificate, sub, cfg.recheck);
    if (!v.verified()) return out;
    out.ok = true;
    out.barrier = std::move(sr.certificate);
    return out;
}

} // namespace detail

// Run the baseline. A position cuts its path only when every letter pair on
// its two edges is separated; positions are tried nearest-to-initial first,
// and the recorded cuts at a position follow the canonical letter order.
inline TripletVerification triplet_verify(const Problem& p, const TripletConfig& cfg = {},
                                          bool allow_unroll = false) {
    if (p.spec != SpecKind::Ltl || !p.has_nba)
        throw KindMismatch("triplet verification needs an ltl problem with an automaton");

    // Cut decisions depend only on the letter pair, so they are shared across
    // positions, paths, and the unrolled attempt.
    std::map<std::pair<Letter, Letter>, detail::CutAttempt> cache;
    int serial = 0;
    auto attempt_pair = [&](const Letter& la, const Letter& lb) -> const detail::CutAttempt& {
        auto key = std::make_pair(la, lb);
        auto it = cache.find(key);
        if (it == cache.end()) {
            detail::CutAttempt att;
            try {
                att = p.is_finite ? detail::try_cut_finite(p, Triplet{0, 0, 0, la, lb},
                                                           cfg.recheck, serial++)
                                  : detail::try_cut_continuous(p, Triplet{0, 0, 0, la, lb}, cfg);
            } catch (const EmptyLabelRegion&) {
                // a letter that labels nothing cannot anchor a barrier; the
                // pair stays uncut rather than failing the whole run
            }
            it = cache.emplace(std::move(key), std::move(att)).first;
        }
        return it->second;
    };

    auto attempt = [&](const Nba& a, bool unrolled) {
        TripletVerification tv;
        tv.automaton = a;
        tv.unroll_used = unrolled;
        tv.paths = enumerate_simple_paths(a);
        if (tv.paths.size() > cfg.max_paths)
            throw PathExplosion("automaton has " + std::to_string(tv.paths.size()) +
                                " simple paths to acceptance (limit " +
                                std::to_string(cfg.max_paths) + ")");
        std::set<Triplet> recorded;
        for (const auto& path : tv.paths) {
            if (path.size() < 3) {
                tv.uncut_paths.push_back(path); // too short to host a triple
                continue;
            }
            int cut_at = -1;
            for (std::size_t i = 0; cut_at < 0 && i + 2 < path.size(); ++i) {
                bool all = true;
                for (const auto& la : a.letters_between(path[i], path[i + 1]))
                    for (const auto& lb : a.letters_between(path[i + 1], path[i + 2]))
                        all = attempt_pair(la, lb).ok && all;
                if (all) cut_at = static_cast<int>(i);
            }
            if (cut_at < 0) {
                tv.uncut_paths.push_back(path);
                continue;
            }
            for (const auto& la : a.letters_between(path[cut_at], path[cut_at + 1]))
                for (const auto& lb : a.letters_between(path[cut_at + 1], path[cut_at + 2])) {
                    Triplet t{path[cut_at], path[cut_at + 1], path[cut_at + 2], la, lb};
                    if (!recorded.insert(t).second) continue;
                    const detail::CutAttempt& att = cache.at({la, lb});
                    tv.cuts.push_back(TripletCut{t, att.barrier, att.tabular, att.support});
                }
        }
        tv.verified = tv.uncut_paths.empty();
        return tv;
    };

    TripletVerification tv = attempt(p.nba, false);
    if (tv.verified || !allow_unroll) return tv;
    return attempt(unroll_once(p.nba).nba, true); // a second unrolling adds no new pairs
}

// Problem on which a recorded cut's barrier can be re-checked: the triplet's
// barrier sub-problem with the barrier's support region registered.
inline Problem cut_problem(const Problem& p, const TripletCut& cut) {
    Problem sub = triplet_problem(p, cut.triplet);
    if (cut.tabular) sub.regions.add(cut.support);
    return sub;
}

// ---------------------------------------------------------------------------
// Left/right split of the automaton around the cut middles.

struct QlQr {
    std::vector<int> ql, qr, middles;
    bool consistent = true;
    std::string issue;                 // first structural defect, empty when consistent
    std::vector<double> issue_witness; // offending automaton state, if any
};

inline QlQr compute_ql_qr(const Nba& a, const std::vector<TripletCut>& cuts) {
    const int n = a.num_states;
    std::vector<char> is_middle(n, 0);
    for (const auto& c : cuts) is_middle[c.triplet.q1] = 1;

    FiniteSystem graph;
    graph.num_states = n;
    graph.succ.assign(n, {});
    for (int q = 0; q < n; ++q) graph.succ[q] = a.successors(q);
    std::vector<char> closed = transitive_closure(graph);
    auto reaches = [&](int i, int j) { return closed[(std::size_t)i * n + j] != 0; };

    QlQr out;
    std::vector<char> in_ql(n, 0), in_qr(n, 0);
    for (int q = 0; q < n; ++q) {
        if (is_middle[q]) {
            out.middles.push_back(q);
            continue;
        }
        bool to_some = false, from_every = true;
        for (int m = 0; m < n; ++m) {
            if (!is_middle[m]) continue;
            if (reaches(q, m)) to_some = true;
            if (!reaches(m, q)) from_every = false;
        }
        if (to_some) in_ql[q] = 1;
        if (from_every) in_qr[q] = 1; // vacuously everything when no cut exists
        if (in_ql[q]) out.ql.push_back(q);
        if (in_qr[q]) out.qr.push_back(q);
    }

    auto flag = [&](const std::string& msg, int state) {
        if (!out.consistent) return;
        out.consistent = false;
        out.issue = msg;
        out.issue_witness = {static_cast<double>(state)};
    };
    for (int q : a.initial)
        if (!is_middle[q] && !in_ql[q]) flag("initial state q" + std::to_string(q) + " is not left of the cuts", q);
    for (int q : a.initial)
        if (is_middle[q]) flag("initial state q" + std::to_string(q) + " is itself a cut middle", q);
    for (int q : a.accepting)
        if (!in_qr[q]) flag("accepting state q" + std::to_string(q) + " is not right of the cuts", q);
    for (int q = 0; q < n; ++q)
        if (in_ql[q] && in_qr[q])
            flag("state q" + std::to_string(q) + " is on both sides of the cuts", q);
    for (int q = 0; q < n; ++q)
        if (!is_middle[q] && !in_ql[q] && !in_qr[q])
            flag("state q" + std::to_string(q) + " is on neither side of the cuts", q);
    return out;
}

// ---------------------------------------------------------------------------
// Case-defined product closure assembled from the cut barriers.

struct SubsumptionClosure {
    Nba automaton; // states the index sets below refer to
    std::vector<char> in_ql, in_qr;
    std::vector<int> middle_slot;      // automaton state -> barrier index, or -1
    std::vector<Certificate> barriers; // one merged barrier per middle
    RegionTable regions;               // support regions of tabular barriers
    double xi = 1.0;

    double barrier_at(int slot, std::span<const double> x) const {
        return barriers[(std::size_t)slot].eval(x, &regions);
    }

    // Sign table: right-side rows are flat zero; a left-to-right row carries
    // the gap -xi; rows anchored at a middle consult that middle's barrier.
    double value(std::span<const double> x, int i, std::span<const double> y, int j) const {
        if (middle_slot[i] >= 0) {
            int m = middle_slot[i];
            if (barrier_at(m, x) > 0) return 0.0;
            if ((j == i || in_ql[j]) && barrier_at(m, y) <= 0) return 0.0;
            return -xi;
        }
        if (middle_slot[j] >= 0) {
            if (in_qr[i]) return 0.0;
            if (in_ql[i] && barrier_at(middle_slot[j], y) <= 0) return 0.0;
            return -xi;
        }
        if (in_ql[i] && in_qr[j]) return -xi;
        return 0.0;
    }
};

// Exhaustive check of a case-defined product closure in the original
// implication form (the table only takes the values 0 and -xi, for which the
// strengthened inequalities are needlessly harsh).
inline Verdict check_ltl_cc(const SubsumptionClosure& sc, const Problem& p,
                            CheckConfig::Mode mode = CheckConfig::Mode::Implication) {
    if (!p.is_finite)
        throw KindMismatch("case-defined closures are checked exhaustively on finite systems");
    if (!p.has_nba) throw KindMismatch("problem has no automaton");
    if (p.nba.num_states != sc.automaton.num_states)
        throw KindMismatch("closure was built for a different automaton");
    if (!p.fin.has_embedding())
        throw FormatError("finite problem needs an embedding to evaluate cut barriers");
    ProductClosureFn T = [&p, &sc](int i, int j, int s, int t) {
        return sc.value(p.fin.embedding[s], i, p.fin.embedding[t], j);
    };
    return check_ltl_values(T, sc.xi, p, mode, 1.0, 0.0, 0.0);
}

// Build the case-defined closure for a covering cut set. Cuts sharing a
// middle are merged into a single barrier for that middle (finite systems:
// the reach set of the union of their first-letter states, re-checked against
// every member's second-letter states). Structural defects — an uncovered
// path, a broken left/right split, middles without a common barrier, or a
// case table the exhaustive check rejects — are reported as errors rather
// than silently producing an unsound certificate.
inline SubsumptionClosure cc_from_triplet_barriers(const Nba& a,
                                                   const std::vector<TripletCut>& cuts,
                                                   const Problem& p, double xi = 1.0,
                                                   std::size_t max_paths = 4096) {
    auto uncut = uncovered_paths(a, cuts, max_paths);
    if (!uncut.empty()) throw UncutPath(uncut.front());

    QlQr part = compute_ql_qr(a, cuts);
    if (!part.consistent) throw PartitionViolation(part.issue, part.issue_witness);

    const int n = a.num_states;
    SubsumptionClosure sc;
    sc.automaton = a;
    sc.xi = xi;
    sc.in_ql.assign(n, 0);
    sc.in_qr.assign(n, 0);
    sc.middle_slot.assign(n, -1);
    for (int q : part.ql) sc.in_ql[q] = 1;
    for (int q : part.qr) sc.in_qr[q] = 1;

    std::map<int, std::vector<const TripletCut*>> by_middle;
    for (const auto& c : cuts) by_middle[c.triplet.q1].push_back(&c);

    for (const auto& [mid, group] : by_middle) {
        int slot = static_cast<int>(sc.barriers.size());
        sc.middle_slot[mid] = slot;
        bool same = true;
        for (const TripletCut* c : group)
            if (!(c->triplet.a == group.front()->triplet.a)) same = false;
        if (group.size() == 1 || (same && group.front()->tabular)) {
            // one cut, or several sharing the same first letter and thus the
            // same reach barrier
            sc.barriers.push_back(group.front()->barrier);
            if (group.front()->tabular) sc.regions.add(group.front()->support);
            continue;
        }
        if (!p.is_finite || !group.front()->tabular)
            throw PartitionViolation("middle q" + std::to_string(mid) +
                                         " has cuts with different barriers and no tabular merge",
                                     {static_cast<double>(mid)});
        // merge: one reach set seeded by the union of the first letters
        std::vector<int> seed;
        for (const TripletCut* c : group) {
            const Labeling::Entry* e = p.labeling.find(c->triplet.a);
            if (e) seed.insert(seed.end(), e->states.begin(), e->states.end());
        }
        std::vector<char> reach = detail::forward_reach(p.fin, seed);
        for (const TripletCut* c : group) {
            const Labeling::Entry* e = p.labeling.find(c->triplet.b);
            for (int su : e ? e->states : std::vector<int>{})
                if (reach[su])
                    throw PartitionViolation(
                        "cuts at middle q" + std::to_string(mid) +
                            " do not admit a common barrier: joint reach set touches " +
                            c->triplet.b.str(),
                        {static_cast<double>(mid)});
        }
        detail::CutAttempt merged =
            detail::tabular_barrier(p, reach, "mergedreach" + std::to_string(mid));
        sc.barriers.push_back(std::move(merged.barrier));
        sc.regions.add(std::move(merged.support));
    }

    if (p.is_finite) {
        Problem check = p;
        check.nba = a; // the cuts may refer to the unrolled automaton
        Verdict v = check_ltl_cc(sc, check, CheckConfig::Mode::Implication);
        if (!v.verified())
            throw PartitionViolation("cut structure cannot support the case table: condition '" +
                                         v.condition + "' fails",
                                     v.witness);
    }
    return sc;
}

inline SubsumptionClosure subsume(const TripletVerification& tv, const Problem& p,
                                  double xi = 1.0) {
    if (!tv.verified)
        throw UncutPath(tv.uncut_paths.empty() ? std::vector<int>{} : tv.uncut_paths.front());
    return cc_from_triplet_barriers(tv.automaton, tv.cuts, p, xi);
}

} // namespace ccert
