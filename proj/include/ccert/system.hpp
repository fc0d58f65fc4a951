#pragma once

// Discrete-time systems under verification.
//
// A ContinuousSystem is deterministic: state box X, init region X0, update map
// f given componentwise as expressions over x1..xn. A FiniteSystem is a total
// nondeterministic transition relation over {0..n-1} with distinguished
// initial states and an optional numeric embedding (used to evaluate
// expression-template certificates at finite states).

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "ccert/errors.hpp"
#include "ccert/expr.hpp"
#include "ccert/interval.hpp"
#include "ccert/region.hpp"

namespace ccert {

struct ContinuousSystem {
    int dimension = 0;
    Box state_box;                 // X
    Region init;                   // X0 (subset of X)
    std::vector<Expr> dynamics;    // f_1..f_n over x1..xn

    std::vector<double> step(std::span<const double> x,
                             const RegionResolver* rr = nullptr) const {
        std::vector<double> out(dynamics.size());
        for (size_t i = 0; i < dynamics.size(); ++i)
            out[i] = dynamics[i].eval_point(x, rr);
        return out;
    }
};

struct FiniteSystem {
    int num_states = 0;
    std::vector<int> initial;
    std::vector<std::vector<int>> succ;            // successor lists, sorted
    std::vector<std::vector<double>> embedding;    // optional; per-state vector

    bool has_embedding() const { return !embedding.empty(); }
    int embedding_dim() const { return embedding.empty() ? 0 : (int)embedding[0].size(); }

    void validate() const {
        if (num_states <= 0) throw FormatError("finite system needs at least one state");
        if ((int)succ.size() != num_states)
            throw FormatError("successor table does not match state count");
        for (int s = 0; s < num_states; ++s) {
            if (succ[s].empty())
                throw FormatError("state " + std::to_string(s) +
                                  " has no successor; the transition relation must be total");
            for (int t : succ[s])
                if (t < 0 || t >= num_states)
                    throw FormatError("transition target out of range");
        }
        for (int s : initial)
            if (s < 0 || s >= num_states) throw FormatError("initial state out of range");
        if (!embedding.empty()) {
            if ((int)embedding.size() != num_states)
                throw FormatError("embedding does not cover every state");
            for (const auto& v : embedding)
                if (v.size() != embedding[0].size())
                    throw FormatError("embedding vectors must share one dimension");
        }
    }

    static FiniteSystem from_edges(int n, std::vector<int> init,
                                   const std::vector<std::pair<int, int>>& edges,
                                   std::vector<std::vector<double>> emb = {}) {
        FiniteSystem fs;
        fs.num_states = n;
        fs.initial = std::move(init);
        fs.succ.assign(n, {});
        for (auto [a, b] : edges) {
            if (a < 0 || a >= n || b < 0 || b >= n)
                throw FormatError("edge endpoint out of range");
            fs.succ[a].push_back(b);
        }
        for (auto& v : fs.succ) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        }
        fs.embedding = std::move(emb);
        fs.validate();
        return fs;
    }
};

// A letter is a set of atomic propositions, canonicalized as a sorted list of
// names. Stable ordering keeps every letter-indexed iteration deterministic.
struct Letter {
    std::vector<std::string> aps; // sorted, unique

    static Letter of(std::vector<std::string> names) {
        std::sort(names.begin(), names.end());
        names.erase(std::unique(names.begin(), names.end()), names.end());
        return Letter{std::move(names)};
    }

    bool operator==(const Letter& o) const { return aps == o.aps; }
    bool operator<(const Letter& o) const { return aps < o.aps; }

    bool has(const std::string& ap) const {
        return std::binary_search(aps.begin(), aps.end(), ap);
    }

    std::string str() const {
        std::string s = "{";
        for (size_t i = 0; i < aps.size(); ++i) s += (i ? "," : "") + aps[i];
        return s + "}";
    }
};

// Labeling for continuous systems: letter -> region, regions expected to
// partition the state box (validated separately with the falsifier). For
// finite systems: letter -> state set, validated exactly.
struct Labeling {
    struct Entry {
        Letter letter;
        Region region;               // continuous systems
        std::vector<int> states;     // finite systems (sorted)
    };
    std::vector<Entry> entries;      // sorted by letter for determinism

    void sort_entries() {
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.letter < b.letter; });
    }

    const Entry* find(const Letter& l) const {
        for (const auto& e : entries)
            if (e.letter == l) return &e;
        return nullptr;
    }

    Letter letter_at(std::span<const double> x, const RegionResolver* rr) const {
        for (const auto& e : entries)
            if (e.region.contains(x, rr)) return e.letter;
        std::string where = "(";
        for (size_t i = 0; i < x.size(); ++i)
            where += (i ? ", " : "") + std::to_string(x[i]);
        throw NoLetterForState("no labeling region contains the state " + where + ")");
    }

    Letter letter_of_state(int s) const {
        for (const auto& e : entries)
            if (std::binary_search(e.states.begin(), e.states.end(), s)) return e.letter;
        throw NoLetterForState("no label for finite state " + std::to_string(s));
    }

    // Exact partition check over finite states.
    void validate_finite(int num_states) const {
        std::vector<int> owner(num_states, -1);
        for (size_t e = 0; e < entries.size(); ++e) {
            for (int s : entries[e].states) {
                if (s < 0 || s >= num_states)
                    throw FormatError("labeled state out of range");
                if (owner[s] != -1)
                    throw PartitionViolation(
                        "state " + std::to_string(s) + " carries letters " +
                            entries[owner[s]].letter.str() + " and " + entries[e].letter.str(),
                        {static_cast<double>(s)});
                owner[s] = static_cast<int>(e);
            }
        }
        for (int s = 0; s < num_states; ++s)
            if (owner[s] == -1)
                throw PartitionViolation("state " + std::to_string(s) + " carries no letter",
                                         {static_cast<double>(s)});
    }
};

} // namespace ccert
