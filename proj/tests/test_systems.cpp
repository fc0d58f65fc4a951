#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <vector>

#include "ccert/checker.hpp"
#include "ccert/finite_analysis.hpp"
#include "ccert/rng.hpp"
#include "ccert/system.hpp"

using namespace ccert;

namespace {

FiniteSystem random_system(SplitMix64& rng, int max_states = 12) {
    int n = 1 + (int)rng.below(max_states);
    std::vector<std::pair<int, int>> edges;
    for (int s = 0; s < n; ++s) {
        int out = 1 + (int)rng.below(3);
        for (int k = 0; k < out; ++k) edges.push_back({s, (int)rng.below(n)});
    }
    std::vector<int> init = {(int)rng.below(n)};
    for (int s = 0; s < n; ++s)
        if (rng.below(5) == 0) init.push_back(s);
    std::sort(init.begin(), init.end());
    init.erase(std::unique(init.begin(), init.end()), init.end());
    std::vector<std::vector<double>> emb;
    for (int s = 0; s < n; ++s) emb.push_back({double(s)});
    return FiniteSystem::from_edges(n, init, edges, emb);
}

// Reference closure: saturate R(s,t) = "t reachable from s in >= 1 step" by
// repeatedly appending one more step until nothing changes.
std::vector<char> naive_closure(const FiniteSystem& fs) {
    int n = fs.num_states;
    std::vector<char> r(n * n, 0);
    for (int s = 0; s < n; ++s)
        for (int t : fs.succ[s]) r[s * n + t] = 1;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int s = 0; s < n; ++s)
            for (int m = 0; m < n; ++m)
                if (r[s * n + m])
                    for (int t = 0; t < n; ++t)
                        if (r[m * n + t] && !r[s * n + t]) {
                            r[s * n + t] = 1;
                            changed = true;
                        }
    }
    return r;
}

// Pick a random subset of states avoiding the initial ones, so that 0-step
// membership never decides the property (the pair conditions speak about
// reachability in one or more steps).
std::vector<int> random_marked(SplitMix64& rng, const FiniteSystem& fs, int denom) {
    std::vector<char> is_init(fs.num_states, 0);
    for (int s : fs.initial) is_init[s] = 1;
    std::vector<int> out;
    for (int s = 0; s < fs.num_states; ++s)
        if (!is_init[s] && rng.below(denom) == 0) out.push_back(s);
    return out;
}

Problem finite_problem(const FiniteSystem& fs, SpecKind spec, std::vector<int> marked) {
    Problem p;
    p.name = "generated";
    p.is_finite = true;
    p.spec = spec;
    p.fin = fs;
    if (spec == SpecKind::Safety)
        p.unsafe_states = std::move(marked);
    else
        p.vf_states = std::move(marked);
    return p;
}

// Max number of marked states seen along any path from s, capped at n + 1
// (cap hit iff some reachable cycle goes through a marked state). Computed by
// value iteration on the max-plus recursion.
std::vector<int> max_marked_visits(const FiniteSystem& fs, const std::vector<int>& marked) {
    int n = fs.num_states;
    std::vector<char> is_marked(n, 0);
    for (int m : marked) is_marked[m] = 1;
    std::vector<int> w(n, 0);
    for (int round = 0; round <= n + 1; ++round) {
        bool changed = false;
        for (int s = 0; s < n; ++s) {
            int best = 0;
            for (int t : fs.succ[s]) best = std::max(best, w[t]);
            int v = std::min(best + (is_marked[s] ? 1 : 0), n + 1);
            if (v != w[s]) {
                w[s] = v;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return w;
}

} // namespace

TEST_CASE("bit-row closure matches the naive fixpoint on 500 systems") {
    SplitMix64 rng(4242);
    for (int it = 0; it < 500; ++it) {
        FiniteSystem fs = random_system(rng);
        REQUIRE(transitive_closure(fs) == naive_closure(fs));
    }
}

TEST_CASE("exact safety agrees with closure reachability") {
    SplitMix64 rng(515);
    for (int it = 0; it < 300; ++it) {
        FiniteSystem fs = random_system(rng);
        std::vector<int> unsafe = random_marked(rng, fs, 4);
        auto r = transitive_closure(fs);
        bool reach_bad = false;
        std::vector<char> is_unsafe(fs.num_states, 0);
        for (int u : unsafe) is_unsafe[u] = 1;
        for (int s : fs.initial) {
            if (is_unsafe[s]) reach_bad = true;
            for (int t = 0; t < fs.num_states; ++t)
                if (r[s * fs.num_states + t] && is_unsafe[t]) reach_bad = true;
        }
        FiniteSafety res = exact_safety(fs, unsafe);
        REQUIRE(res.safe == !reach_bad);
        if (!res.safe) {
            // the returned path must be a real trajectory ending in unsafe
            REQUIRE(!res.path.empty());
            REQUIRE(std::find(fs.initial.begin(), fs.initial.end(), res.path.front()) !=
                    fs.initial.end());
            REQUIRE(is_unsafe[res.path.back()]);
            for (size_t k = 0; k + 1 < res.path.size(); ++k) {
                const auto& succ = fs.succ[res.path[k]];
                REQUIRE(std::find(succ.begin(), succ.end(), res.path[k + 1]) != succ.end());
            }
        }
    }
}

TEST_CASE("exact persistence agrees with marked-cycle reachability") {
    SplitMix64 rng(616);
    for (int it = 0; it < 300; ++it) {
        FiniteSystem fs = random_system(rng);
        std::vector<int> vf = random_marked(rng, fs, 4);
        auto r = transitive_closure(fs);
        int n = fs.num_states;
        // Not persistent iff some vf state on a cycle is reachable from init.
        bool bad = false;
        for (int m : vf) {
            if (!r[m * n + m]) continue;
            for (int s : fs.initial)
                if (s == m || r[s * n + m]) bad = true;
        }
        FinitePersistence res = exact_persistence(fs, vf);
        REQUIRE(res.persistent == !bad);
        if (!res.persistent) {
            REQUIRE(!res.cycle.empty());
            std::vector<char> in_vf(n, 0);
            for (int m : vf) in_vf[m] = 1;
            bool cycle_hits_vf = false;
            for (int s : res.cycle) cycle_hits_vf = cycle_hits_vf || in_vf[s];
            REQUIRE(cycle_hits_vf);
        }
    }
}

TEST_CASE("canonical closure certificate verifies exactly the safe systems") {
    // Soundness theorem at finite scale, both directions: the reachability
    // closure itself, turned into a two-valued pair function, passes the
    // safety conditions iff the system is safe.
    SplitMix64 rng(868);
    int safe_seen = 0, unsafe_seen = 0;
    for (int it = 0; it < 500; ++it) {
        FiniteSystem fs = random_system(rng);
        std::vector<int> unsafe = random_marked(rng, fs, 3);
        Problem p = finite_problem(fs, SpecKind::Safety, unsafe);
        auto r = transitive_closure(fs);
        int n = fs.num_states;
        FlatClosureFn T = [&r, n](int s, int t) { return r[s * n + t] ? 0.0 : -1.0; };
        Verdict v = check_safety_values(T, 1.0, p, CheckConfig::Mode::Implication, 1.0);
        bool safe = exact_safety(fs, unsafe).safe;
        INFO("iteration " << it);
        REQUIRE(v.verified() == safe);
        (safe ? safe_seen : unsafe_seen)++;
    }
    REQUIRE(safe_seen > 100);
    REQUIRE(unsafe_seen > 100);
}

TEST_CASE("canonical persistence certificate verifies exactly the persistent systems") {
    SplitMix64 rng(969);
    int good = 0, bad = 0;
    for (int it = 0; it < 500; ++it) {
        FiniteSystem fs = random_system(rng);
        std::vector<int> vf = random_marked(rng, fs, 3);
        Problem p = finite_problem(fs, SpecKind::Persistence, vf);
        auto r = transitive_closure(fs);
        auto w = max_marked_visits(fs, vf);
        int n = fs.num_states;
        // Reachable pairs carry the remaining-visit budget of the target;
        // each marked-to-marked hop then drops the budget by at least one.
        FlatClosureFn T = [&](int s, int t) { return r[s * n + t] ? double(w[t]) : -1.0; };
        Verdict v = check_persistence_values(T, 1.0, p, CheckConfig::Mode::Implication, 1.0, 0.0,
                                             0.0, nullptr);
        bool persistent = exact_persistence(fs, vf).persistent;
        INFO("iteration " << it);
        REQUIRE(v.verified() == persistent);
        (persistent ? good : bad)++;
    }
    REQUIRE(good > 100);
    REQUIRE(bad > 100);
}

TEST_CASE("polynomial barrier enumeration on the star graph") {
    // All states feed state 0; initial odds, unsafe evens. A barrier must be
    // nonpositive at 0,1,3,5 and positive at 2,4 — four sign alternations on
    // the embedding line, hence no quadratic works but a quartic does.
    std::vector<std::pair<int, int>> edges;
    for (int s = 0; s < 6; ++s) edges.push_back({s, 0});
    std::vector<std::vector<double>> emb;
    for (int s = 0; s < 6; ++s) emb.push_back({double(s)});
    FiniteSystem fs = FiniteSystem::from_edges(6, {1, 3, 5}, edges, emb);

    REQUIRE(!exists_polynomial_barrier(fs, {2, 4}, 2).feasible);
    REQUIRE(!exists_polynomial_barrier(fs, {2, 4}, 3).feasible);
    BarrierLpResult quartic = exists_polynomial_barrier(fs, {2, 4}, 4);
    REQUIRE(quartic.feasible);
    // spot-check the returned polynomial actually separates
    auto B = [&](double x) { return detail::eval_poly(quartic.coefficients, x); };
    for (int s : {0, 1, 3, 5}) REQUIRE(B(s) <= 0);
    for (int s : {2, 4}) REQUIRE(B(s) > 0);
}

TEST_CASE("barrier enumeration detects reachable unsafe states") {
    FiniteSystem fs = FiniteSystem::from_edges(3, {0}, {{0, 1}, {1, 2}, {2, 2}},
                                               {{0.0}, {1.0}, {2.0}});
    REQUIRE(!exists_polynomial_barrier(fs, {2}, 6).feasible);
}
