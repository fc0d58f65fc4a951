#pragma once

// Exact analyses over finite systems. These are the ground-truth oracles the
// certificate machinery is tested against, plus the degree-bounded polynomial
// barrier feasibility decision.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "ccert/errors.hpp"
#include "ccert/lp.hpp"
#include "ccert/system.hpp"

namespace ccert {

// Pairs (i, j) with a path of length >= 1 from i to j. Returned as a dense
// row-major boolean matrix (n*n); Warshall over bit rows keeps this cheap for
// the sizes tests use.
inline std::vector<char> transitive_closure(const FiniteSystem& fs) {
    const int n = fs.num_states;
    const int w = (n + 63) / 64;
    std::vector<uint64_t> rows(static_cast<size_t>(n) * w, 0);
    auto set = [&](int i, int j) { rows[i * w + j / 64] |= uint64_t(1) << (j % 64); };
    auto get = [&](int i, int j) { return (rows[i * w + j / 64] >> (j % 64)) & 1; };
    for (int s = 0; s < n; ++s)
        for (int t : fs.succ[s]) set(s, t);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            if (get(i, k))
                for (int b = 0; b < w; ++b) rows[i * w + b] |= rows[k * w + b];
    std::vector<char> out(static_cast<size_t>(n) * n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[i * n + j] = static_cast<char>(get(i, j));
    return out;
}

struct FiniteSafety {
    bool safe = true;
    std::vector<int> path; // init .. unsafe witness when !safe
};

// BFS from the initial states; a hit on `unsafe` yields a shortest witness.
inline FiniteSafety exact_safety(const FiniteSystem& fs, const std::vector<int>& unsafe) {
    const int n = fs.num_states;
    std::vector<char> bad(n, 0);
    for (int u : unsafe) {
        if (u < 0 || u >= n) throw FormatError("unsafe state out of range");
        bad[u] = 1;
    }
    std::vector<int> parent(n, -2);
    std::vector<int> queue;
    for (int s : fs.initial)
        if (parent[s] == -2) { parent[s] = -1; queue.push_back(s); }
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        int s = queue[qi];
        if (bad[s]) {
            FiniteSafety r;
            r.safe = false;
            for (int v = s; v != -1; v = parent[v]) r.path.push_back(v);
            std::reverse(r.path.begin(), r.path.end());
            return r;
        }
        for (int t : fs.succ[s])
            if (parent[t] == -2) { parent[t] = s; queue.push_back(t); }
    }
    return {};
}

struct FinitePersistence {
    bool persistent = true;
    std::vector<int> stem;  // init .. v (when violated)
    std::vector<int> cycle; // v .. v taking at least one transition
};

namespace detail {
// Shortest path from any state in `from` to `to`. With at_least_one_step the
// path takes >= 1 transitions (so from == {to} finds a genuine cycle); the
// originating source is recorded separately so it can be prepended.
inline std::vector<int> bfs_path(const FiniteSystem& fs, const std::vector<int>& from,
                                 int to, bool at_least_one_step) {
    const int n = fs.num_states;
    std::vector<int> parent(n, -2), src(n, -1);
    std::vector<int> queue;
    auto visit = [&](int t, int par, int source) {
        if (parent[t] != -2) return;
        parent[t] = par;
        src[t] = source;
        queue.push_back(t);
    };
    if (at_least_one_step) {
        for (int s : from)
            for (int t : fs.succ[s]) visit(t, -1, s);
    } else {
        for (int s : from) visit(s, -1, s);
    }
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        int s = queue[qi];
        if (s == to) {
            std::vector<int> path{s};
            int v = s;
            while (parent[v] != -1) { v = parent[v]; path.push_back(v); }
            if (at_least_one_step) path.push_back(src[v]);
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (int t : fs.succ[s]) visit(t, s, src[s]);
    }
    return {};
}
} // namespace detail

// Persistence w.r.t. "visit VF only finitely often": violated iff some state
// v in VF is reachable from an initial state and lies on a cycle, giving a
// lasso whose loop revisits VF forever.
inline FinitePersistence exact_persistence(const FiniteSystem& fs,
                                           const std::vector<int>& vf) {
    const int n = fs.num_states;
    std::vector<char> in_vf(n, 0);
    for (int v : vf) {
        if (v < 0 || v >= n) throw FormatError("VF state out of range");
        in_vf[v] = 1;
    }
    std::vector<char> closure = transitive_closure(fs);
    // Reachable set (>= 0 steps) from initial states.
    std::vector<char> reach(n, 0);
    for (int s : fs.initial) {
        reach[s] = 1;
        for (int t = 0; t < n; ++t)
            if (closure[s * n + t]) reach[t] = 1;
    }
    for (int v = 0; v < n; ++v) {
        if (!in_vf[v] || !reach[v]) continue;
        if (!closure[v * n + v]) continue; // not on a cycle
        FinitePersistence r;
        r.persistent = false;
        r.stem = detail::bfs_path(fs, fs.initial, v, false);
        r.cycle = detail::bfs_path(fs, {v}, v, true);
        return r;
    }
    return {};
}

struct BarrierLpResult {
    bool feasible = false;
    std::vector<double> coefficients; // b_0..b_d over the 1-D embedding
};

namespace detail {
inline double eval_poly(const std::vector<double>& c, double x) {
    double v = 0.0;
    for (size_t k = c.size(); k-- > 0;) v = v * x + c[k];
    return v;
}
} // namespace detail

// Does a polynomial barrier of the given degree exist over the 1-D embedding?
//
// B satisfies the barrier conditions iff S = {s : B(e(s)) <= 0} contains the
// initial states, avoids the unsafe states, and is closed under transitions.
// So: enumerate candidate sets S (the forward closure of the initial states,
// extended by any subset of unconstrained states, kept f-closed), and for each
// ask one small LP whether a degree-d polynomial separates S from its
// complement with margin epsilon. Exact up to the stated epsilon/coefficient
// box; exponential only in the unconstrained-state count, which callers keep
// small.
inline BarrierLpResult exists_polynomial_barrier(const FiniteSystem& fs,
                                                 const std::vector<int>& unsafe,
                                                 int degree, double epsilon = 1e-3,
                                                 double coeff_bound = 1e3) {
    if (!fs.has_embedding() || fs.embedding_dim() != 1)
        throw FormatError("polynomial barrier search needs a 1-D state embedding");
    if (degree < 0) throw FormatError("degree must be nonnegative");
    const int n = fs.num_states;
    std::vector<char> bad(n, 0);
    for (int u : unsafe) bad[u] = 1;

    // Forward closure of the initial states: must be inside S.
    std::vector<char> must(n, 0);
    {
        std::vector<int> stack = fs.initial;
        for (int s : fs.initial) must[s] = 1;
        while (!stack.empty()) {
            int s = stack.back();
            stack.pop_back();
            for (int t : fs.succ[s])
                if (!must[t]) { must[t] = 1; stack.push_back(t); }
        }
    }
    for (int s = 0; s < n; ++s)
        if (must[s] && bad[s]) return {}; // reachable unsafe state: no barrier of any degree

    std::vector<int> free;
    for (int s = 0; s < n; ++s)
        if (!must[s] && !bad[s]) free.push_back(s);
    if (free.size() > 20)
        throw Error("too many unconstrained states for exact barrier enumeration");

    auto closed = [&](const std::vector<char>& in_s) {
        for (int s = 0; s < n; ++s)
            if (in_s[s])
                for (int t : fs.succ[s])
                    if (!in_s[t]) return false;
        return true;
    };

    for (uint64_t mask = 0; mask < (uint64_t(1) << free.size()); ++mask) {
        std::vector<char> in_s(must.begin(), must.end());
        for (size_t k = 0; k < free.size(); ++k)
            if (mask >> k & 1) in_s[free[k]] = 1;
        if (!closed(in_s)) continue;

        LinearProgram lp;
        lp.num_vars = degree + 1;
        lp.lower.assign(lp.num_vars, -coeff_bound);
        lp.upper.assign(lp.num_vars, coeff_bound);
        lp.objective.assign(lp.num_vars, 0.0);
        for (int s = 0; s < n; ++s) {
            std::vector<double> row(lp.num_vars);
            double e = fs.embedding[s][0];
            double p = 1.0;
            for (int k = 0; k <= degree; ++k) { row[k] = p; p *= e; }
            if (in_s[s]) lp.add_row(std::move(row), Relation::Le, 0.0);
            else lp.add_row(std::move(row), Relation::Ge, epsilon);
        }
        LpResult r = solve_lp(lp);
        if (r.status == LpStatus::Feasible) {
            // Sanity: the barrier conditions must hold exhaustively.
            for (int s = 0; s < n; ++s) {
                double bs = detail::eval_poly(r.x, fs.embedding[s][0]);
                if (in_s[s] ? bs > 1e-6 : bs < epsilon - 1e-6)
                    throw NumericalBreakdown("barrier LP solution fails re-verification");
            }
            return BarrierLpResult{true, r.x};
        }
    }
    return {};
}

} // namespace ccert
