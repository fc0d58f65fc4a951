#pragma once

// Nondeterministic Büchi automata with state-based acceptance, plus the graph
// operations the certificate pipeline needs: product successors, simple-path
// enumeration, overlapping-triplet decomposition, single unrolling, and an
// exact lasso-word acceptance test used as an oracle in property tests.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ccert/errors.hpp"
#include "ccert/system.hpp"

namespace ccert {

struct NbaEdge {
    Letter letter;
    int target = -1;
    bool operator==(const NbaEdge& o) const {
        return letter == o.letter && target == o.target;
    }
    bool operator<(const NbaEdge& o) const {
        if (letter == o.letter) return target < o.target;
        return letter < o.letter;
    }
};

struct Nba {
    std::string name;
    std::vector<std::string> aps;
    int num_states = 0;
    std::vector<int> initial;                 // sorted, unique
    std::vector<int> accepting;               // sorted, unique
    std::vector<std::vector<NbaEdge>> edges;  // per state, sorted

    bool is_accepting(int q) const {
        return std::binary_search(accepting.begin(), accepting.end(), q);
    }

    std::vector<int> delta(int q, const Letter& l) const {
        std::vector<int> out;
        for (const auto& e : edges[q])
            if (e.letter == l) out.push_back(e.target);
        return out;
    }

    // Distinct successor states over any letter, ascending.
    std::vector<int> successors(int q) const {
        std::vector<int> out;
        for (const auto& e : edges[q]) out.push_back(e.target);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    // Letters carried by edges q -> r, in canonical order.
    std::vector<Letter> letters_between(int q, int r) const {
        std::vector<Letter> out;
        for (const auto& e : edges[q])
            if (e.target == r) out.push_back(e.letter);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    // All 2^|aps| letters in mask order (APs in declared order).
    std::vector<Letter> alphabet() const {
        if (aps.size() > 20) throw UnsupportedFeature("too many atomic propositions");
        std::vector<Letter> out;
        for (uint32_t mask = 0; mask < (uint32_t(1) << aps.size()); ++mask) {
            std::vector<std::string> names;
            for (size_t i = 0; i < aps.size(); ++i)
                if (mask >> i & 1) names.push_back(aps[i]);
            out.push_back(Letter::of(std::move(names)));
        }
        return out;
    }

    void normalize() {
        std::sort(initial.begin(), initial.end());
        initial.erase(std::unique(initial.begin(), initial.end()), initial.end());
        std::sort(accepting.begin(), accepting.end());
        accepting.erase(std::unique(accepting.begin(), accepting.end()), accepting.end());
        for (auto& es : edges) {
            std::sort(es.begin(), es.end());
            es.erase(std::unique(es.begin(), es.end()), es.end());
        }
    }

    void validate() const {
        if (num_states <= 0) throw FormatError("automaton needs at least one state");
        if ((int)edges.size() != num_states)
            throw FormatError("edge table does not match state count");
        if (initial.empty()) throw FormatError("automaton has no initial state");
        for (int q : initial)
            if (q < 0 || q >= num_states) throw FormatError("initial state out of range");
        for (int q : accepting)
            if (q < 0 || q >= num_states) throw FormatError("accepting state out of range");
        for (const auto& es : edges)
            for (const auto& e : es) {
                if (e.target < 0 || e.target >= num_states)
                    throw FormatError("edge target out of range");
                for (const auto& ap : e.letter.aps)
                    if (std::find(aps.begin(), aps.end(), ap) == aps.end())
                        throw FormatError("edge letter uses undeclared proposition '" + ap + "'");
            }
    }
};

// ---------------------------------------------------------------------------
// Product successors: the synchronous composition reads the letter of the
// current system state and moves both components.

inline std::vector<std::pair<int, int>> product_step(const FiniteSystem& fs,
                                                     const Labeling& lab,
                                                     const Nba& nba, int s, int q) {
    Letter l = lab.letter_of_state(s);
    std::vector<std::pair<int, int>> out;
    for (int qn : nba.delta(q, l))
        for (int sn : fs.succ[s]) out.emplace_back(sn, qn);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::vector<std::pair<std::vector<double>, int>> product_step(
    const ContinuousSystem& sys, const Labeling& lab, const RegionResolver* rr,
    const Nba& nba, std::span<const double> x, int q) {
    Letter l = lab.letter_at(x, rr);
    std::vector<double> xn = sys.step(x, rr);
    std::vector<std::pair<std::vector<double>, int>> out;
    for (int qn : nba.delta(q, l)) out.emplace_back(xn, qn);
    return out;
}

// ---------------------------------------------------------------------------
// Simple paths from an initial state to a first accepting state. Only the
// final state is accepting (a run that reaches acceptance is witnessed by such
// a path); states never repeat. Output is ordered lexicographically by state
// sequence: initial states ascending, successors ascending.

inline std::vector<std::vector<int>> enumerate_simple_paths(const Nba& nba) {
    std::vector<std::vector<int>> out;
    std::vector<int> path;
    std::vector<char> on_path(nba.num_states, 0);

    auto dfs = [&](auto&& self, int q) -> void {
        path.push_back(q);
        on_path[q] = 1;
        if (nba.is_accepting(q)) {
            out.push_back(path);
        } else {
            for (int r : nba.successors(q))
                if (!on_path[r]) self(self, r);
        }
        on_path[q] = 0;
        path.pop_back();
    };
    for (int q0 : nba.initial) dfs(dfs, q0);
    return out;
}

// ---------------------------------------------------------------------------
// Triplets: consecutive state triples of a path, one record per letter pair
// carried by the two edges.

struct Triplet {
    int q0 = -1, q1 = -1, q2 = -1; // path positions i, i+1, i+2
    Letter a, b;                   // letters of edges (q0,q1) and (q1,q2)

    bool operator==(const Triplet& o) const {
        return q0 == o.q0 && q1 == o.q1 && q2 == o.q2 && a == o.a && b == o.b;
    }
    bool operator<(const Triplet& o) const {
        return std::tie(q0, q1, q2, a, b) < std::tie(o.q0, o.q1, o.q2, o.a, o.b);
    }

    std::string str() const {
        return "(" + std::to_string(q0) + "," + std::to_string(q1) + "," +
               std::to_string(q2) + ") letters (" + a.str() + "," + b.str() + ")";
    }
};

inline std::vector<Triplet> decompose_triplets(const Nba& nba, const std::vector<int>& path) {
    if (path.size() < 3)
        throw PathTooShort("path with " + std::to_string(path.size()) +
                           " states has no triplet");
    std::vector<Triplet> out;
    for (size_t i = 0; i + 2 < path.size(); ++i) {
        auto first = nba.letters_between(path[i], path[i + 1]);
        auto second = nba.letters_between(path[i + 1], path[i + 2]);
        for (const auto& a : first)
            for (const auto& b : second)
                out.push_back(Triplet{path[i], path[i + 1], path[i + 2], a, b});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Unrolling: clone every state reachable (>= 1 step) from an accepting state
// as a primed copy, redirect edges leaving accepting states to the primed
// copies, replicate the internal edges among primed copies, and make the
// primed accepting states the new accepting set. The language is preserved;
// applying the construction twice adds no new triplet letter pairs.

struct UnrollResult {
    Nba nba;
    std::vector<int> primed_of; // original index -> primed index, or -1
};

inline UnrollResult unroll_once(const Nba& in) {
    const int n = in.num_states;
    // R: states reachable from an accepting state in >= 1 step.
    std::vector<char> reached(n, 0);
    std::vector<int> stack;
    for (int a : in.accepting)
        for (int t : in.successors(a))
            if (!reached[t]) { reached[t] = 1; stack.push_back(t); }
    while (!stack.empty()) {
        int s = stack.back();
        stack.pop_back();
        for (int t : in.successors(s))
            if (!reached[t]) { reached[t] = 1; stack.push_back(t); }
    }

    UnrollResult res;
    res.primed_of.assign(n, -1);
    int next = n;
    for (int s = 0; s < n; ++s)
        if (reached[s]) res.primed_of[s] = next++;

    Nba& out = res.nba;
    out.name = in.name.empty() ? "unrolled" : in.name + "-unrolled";
    out.aps = in.aps;
    out.num_states = next;
    out.initial = in.initial;
    out.edges.assign(next, {});
    for (int s = 0; s < n; ++s) {
        bool acc = in.is_accepting(s);
        for (const auto& e : in.edges[s]) {
            if (acc) {
                // Exits of accepting states jump into the primed copy; the
                // target is reachable from an accepting state by definition.
                out.edges[s].push_back(NbaEdge{e.letter, res.primed_of[e.target]});
            } else {
                out.edges[s].push_back(e);
            }
            if (reached[s] && reached[e.target])
                out.edges[res.primed_of[s]].push_back(
                    NbaEdge{e.letter, res.primed_of[e.target]});
        }
    }
    for (int a : in.accepting)
        if (res.primed_of[a] >= 0) out.accepting.push_back(res.primed_of[a]);
    out.normalize();
    out.validate();
    return res;
}

// ---------------------------------------------------------------------------
// Exact acceptance of the lasso word stem.cycle^omega (cycle nonempty).
// Used as a language-preservation oracle.

namespace detail {
inline std::vector<char> read_word(const Nba& nba, std::vector<char> from,
                                   const std::vector<Letter>& word) {
    for (const auto& l : word) {
        std::vector<char> next(nba.num_states, 0);
        for (int q = 0; q < nba.num_states; ++q)
            if (from[q])
                for (int t : nba.delta(q, l)) next[t] = 1;
        from = std::move(next);
    }
    return from;
}
} // namespace detail

inline bool accepts_lasso(const Nba& nba, const std::vector<Letter>& stem,
                          const std::vector<Letter>& cycle) {
    if (cycle.empty()) throw FormatError("lasso cycle must be nonempty");
    const int n = nba.num_states;
    std::vector<char> after_stem(n, 0);
    for (int q : nba.initial) after_stem[q] = 1;
    after_stem = detail::read_word(nba, after_stem, stem);

    // One cycle pass from each single state, tracking whether an accepting
    // state was visited at any position >= 1 of the pass.
    std::vector<std::vector<char>> pass(n, std::vector<char>(n, 0));
    std::vector<std::vector<char>> pass_acc(n, std::vector<char>(n, 0));
    for (int q = 0; q < n; ++q) {
        // frontier of (state, flag) pairs
        std::vector<char> cur(n * 2, 0);
        cur[q * 2 + 0] = 1;
        for (const auto& l : cycle) {
            std::vector<char> next(n * 2, 0);
            for (int s = 0; s < n; ++s)
                for (int f = 0; f < 2; ++f) {
                    if (!cur[s * 2 + f]) continue;
                    for (int t : nba.delta(s, l)) {
                        int nf = f || nba.is_accepting(t);
                        next[t * 2 + nf] = 1;
                    }
                }
            cur = std::move(next);
        }
        for (int t = 0; t < n; ++t) {
            if (cur[t * 2 + 0]) pass[q][t] = 1;
            if (cur[t * 2 + 1]) pass[q][t] = pass_acc[q][t] = 1;
        }
    }

    // States reachable from after_stem by >= 0 passes.
    std::vector<char> reach = after_stem;
    for (bool changed = true; changed;) {
        changed = false;
        for (int q = 0; q < n; ++q)
            if (reach[q])
                for (int t = 0; t < n; ++t)
                    if (pass[q][t] && !reach[t]) { reach[t] = 1; changed = true; }
    }

    // Accepting lasso: a flagged pass edge (u, v) with v able to return to u.
    // Pass-reachability closure:
    std::vector<std::vector<char>> closure = pass;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            if (closure[i][k])
                for (int j = 0; j < n; ++j)
                    if (closure[k][j]) closure[i][j] = 1;
    for (int u = 0; u < n; ++u) {
        if (!reach[u]) continue;
        for (int v = 0; v < n; ++v)
            if (pass_acc[u][v] && (v == u || closure[v][u])) return true;
    }
    return false;
}

} // namespace ccert
