#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

#include "ccert/hoa.hpp"
#include "ccert/nba.hpp"
#include "ccert/rng.hpp"

using namespace ccert;

namespace {

Nba random_nba(SplitMix64& rng, int max_states = 6, int max_aps = 3, int max_out = 3) {
    Nba a;
    a.num_states = 2 + (int)rng.below(max_states - 1);
    int naps = 1 + (int)rng.below(max_aps);
    for (int k = 0; k < naps; ++k) a.aps.push_back("p" + std::to_string(k));
    a.edges.assign(a.num_states, {});
    // random letters as AP subsets
    auto random_letter = [&] {
        std::vector<std::string> aps;
        for (const auto& ap : a.aps)
            if (rng.below(2)) aps.push_back(ap);
        return Letter::of(std::move(aps));
    };
    for (int q = 0; q < a.num_states; ++q) {
        int out = 1 + (int)rng.below(max_out);
        for (int e = 0; e < out; ++e)
            a.edges[q].push_back(NbaEdge{random_letter(), (int)rng.below(a.num_states)});
    }
    a.initial = {0};
    a.accepting = {(int)rng.below(a.num_states)};
    if (rng.below(3) == 0) a.accepting.push_back((int)rng.below(a.num_states));
    a.normalize();
    a.validate();
    return a;
}

std::set<std::pair<Letter, Letter>> triplet_letter_pairs(const Nba& a) {
    std::set<std::pair<Letter, Letter>> out;
    for (const auto& path : enumerate_simple_paths(a)) {
        if (path.size() < 3) continue;
        for (const auto& t : decompose_triplets(a, path)) out.insert({t.a, t.b});
    }
    return out;
}

} // namespace

TEST_CASE("bundled automata survive a print/parse round trip") {
    for (const char* file : {"fig2.hoa", "fig5a.hoa", "fig7.hoa", "fig8.hoa"}) {
        Nba a = load_hoa_file(std::string("problems/") + file);
        std::ostringstream os;
        print_hoa(os, a);
        Nba b = parse_hoa(os.str());
        INFO(file);
        REQUIRE(a.num_states == b.num_states);
        REQUIRE(a.aps == b.aps);
        REQUIRE(a.initial == b.initial);
        REQUIRE(a.accepting == b.accepting);
        REQUIRE(a.edges == b.edges);
    }
}

TEST_CASE("label formulas expand to concrete letters") {
    Nba a = parse_hoa(R"(HOA: v1
States: 2
Start: 0
AP: 2 "p" "q"
Acceptance: 1 Inf(0)
--BODY--
State: 0
[0 | 1] 1
State: 1 {0}
[t] 1
--END--
)");
    // p|q holds for {p}, {q}, {p,q} — three concrete letters
    REQUIRE(a.edges[0].size() == 3);
    REQUIRE(a.edges[1].size() == 4);
    REQUIRE(a.delta(0, Letter::of({"p"})) == std::vector<int>{1});
    REQUIRE(a.delta(0, Letter::of({})).empty());
}

TEST_CASE("unsupported HOA features are rejected loudly") {
    REQUIRE_THROWS_AS(parse_hoa("HOA: v2\nStates: 1\nAcceptance: 1 Inf(0)\n--BODY--\n--END--\n"),
                      UnsupportedFeature);
    REQUIRE_THROWS_AS(parse_hoa("HOA: v1\nStates: 1\nStart: 0\nAP: 0\n"
                                "Acceptance: 2 Inf(0)&Inf(1)\n--BODY--\nState: 0\n--END--\n"),
                      UnsupportedFeature);
    REQUIRE_THROWS_AS(parse_hoa("HOA: v1\nStates: 1\nStart: 0\nAP: 0\n"
                                "Acceptance: 1 Inf(0)\nAlias: @a 0\n--BODY--\n--END--\n"),
                      UnsupportedFeature);
}

TEST_CASE("simple path enumeration ends at the first accepting visit") {
    Nba a = load_hoa_file("problems/fig2.hoa");
    auto paths = enumerate_simple_paths(a);
    REQUIRE(paths == std::vector<std::vector<int>>{{0, 1, 2, 3}});

    auto triplets = decompose_triplets(a, paths[0]);
    REQUIRE(triplets.size() == 2);
    REQUIRE(triplets[0].str() == "(0,1,2) letters ({a1},{a0})");
    REQUIRE_THROWS_AS(decompose_triplets(a, {0, 1}), PathTooShort);
}

TEST_CASE("unrolling fig5a primes the accepting cycle") {
    Nba a = load_hoa_file("problems/fig5a.hoa");
    UnrollResult u = unroll_once(a);
    REQUIRE(u.nba.num_states == 6);           // q3 and q2 get primed copies
    REQUIRE(u.nba.accepting.size() == 1);     // only the primed accepting state
    REQUIRE(u.primed_of[2] >= 4);
    REQUIRE(u.primed_of[3] >= 4);
    REQUIRE(u.primed_of[0] == -1);
    // the paper's worked example: the unrolled automaton admits the path
    // q0 q1 q2 q3' q2' whose last triplet reads (c, b)
    auto paths = enumerate_simple_paths(u.nba);
    REQUIRE(paths.size() == 1);
    REQUIRE(paths[0] == std::vector<int>{0, 1, 2, u.primed_of[3], u.primed_of[2]});
}

TEST_CASE("unrolling preserves sample lasso verdicts") {
    SplitMix64 rng(1213);
    Letter empty = Letter::of({});
    for (int it = 0; it < 100; ++it) {
        Nba a = random_nba(rng);
        Nba b = unroll_once(a).nba;
        auto sigma = a.alphabet();
        if (sigma.empty()) sigma.push_back(empty);
        for (int w = 0; w < 20; ++w) {
            std::vector<Letter> stem, cycle;
            int sl = (int)rng.below(3), cl = 1 + (int)rng.below(3);
            for (int k = 0; k < sl; ++k) stem.push_back(sigma[rng.below(sigma.size())]);
            for (int k = 0; k < cl; ++k) cycle.push_back(sigma[rng.below(sigma.size())]);
            INFO("iteration " << it << " word " << w);
            REQUIRE(accepts_lasso(a, stem, cycle) == accepts_lasso(b, stem, cycle));
        }
    }
}

TEST_CASE("second unrolling leaves the cb-cycle example's letter pairs unchanged") {
    // Letter-pair stability under repeated unrolling is NOT a general law: an
    // accepting self-loop already manufactures an identical-letter pair at the
    // second level that the first level is too short to contain, and automata
    // with two accepting states in sequence can surface genuinely new pairs
    // (the acceptance suite carries the general random-NBA probe and reports
    // its counterexample). For this automaton the set is stable, and this is
    // the shape the unroll feature exists for.
    Nba a = load_hoa_file("problems/fig5a.hoa");
    Nba once = unroll_once(a).nba;
    Nba twice = unroll_once(once).nba;
    REQUIRE(triplet_letter_pairs(twice) == triplet_letter_pairs(once));
    REQUIRE(triplet_letter_pairs(once).size() == 3);
}

TEST_CASE("letters_between collects parallel edge labels once") {
    Nba a;
    a.num_states = 2;
    a.aps = {"p"};
    a.initial = {0};
    a.accepting = {1};
    a.edges.assign(2, {});
    a.edges[0].push_back(NbaEdge{Letter::of({"p"}), 1});
    a.edges[0].push_back(NbaEdge{Letter::of({}), 1});
    a.edges[0].push_back(NbaEdge{Letter::of({"p"}), 1}); // duplicate
    a.edges[1].push_back(NbaEdge{Letter::of({}), 1});
    a.normalize();
    a.validate();
    auto ls = a.letters_between(0, 1);
    REQUIRE(ls.size() == 2);
    REQUIRE(ls[0] < ls[1]);
    REQUIRE(a.letters_between(1, 0).empty());
}
