#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "ccert/problem.hpp"

using namespace ccert;

TEST_CASE("bundled problems load with the expected shapes") {
    Problem fig1 = load_problem("problems/fig1.json");
    REQUIRE(fig1.spec == SpecKind::Safety);
    REQUIRE(fig1.is_finite);
    REQUIRE(fig1.fin.num_states == 6);
    REQUIRE(fig1.fin.initial == std::vector<int>{1, 3, 5});
    REQUIRE(fig1.unsafe_states == std::vector<int>{2, 4});
    REQUIRE(fig1.fin.embedding.size() == 6);

    Problem kur = load_problem("problems/kuramoto1d.json");
    REQUIRE(kur.spec == SpecKind::Safety);
    REQUIRE(!kur.is_finite);
    REQUIRE(kur.cont.dimension == 1);
    REQUIRE(kur.param("tau", 0.0) == Catch::Approx(0.1));
    REQUIRE(kur.regions.has("X"));
    REQUIRE(kur.regions.has("X0"));
    REQUIRE(kur.regions.has("Xu"));

    Problem kur2 = load_problem("problems/kuramoto2d.json");
    REQUIRE(kur2.spec == SpecKind::Ltl);
    REQUIRE(kur2.has_nba);
    REQUIRE(kur2.nba.num_states == 2);
    REQUIRE(kur2.labeling.entries.size() == 2);
    REQUIRE(kur2.regions.has("L_empty"));
    REQUIRE(kur2.regions.has("L_a"));

    Problem rooms = load_problem("problems/tworoom.json");
    REQUIRE(rooms.labeling.entries.size() == 3);
    REQUIRE(rooms.regions.has("L_a0_a1"));
    REQUIRE(rooms.nba.num_states == 4);

    Problem toy = load_problem("problems/persistence_toy.json");
    REQUIRE(toy.spec == SpecKind::Persistence);
    REQUIRE(toy.vf_states == std::vector<int>{0});

    Problem fig2 = load_problem("problems/fig2.json");
    REQUIRE(fig2.spec == SpecKind::Ltl);
    REQUIRE(fig2.is_finite);
    REQUIRE(fig2.labeling.letter_of_state(0).str() == "{a1}");
    REQUIRE(fig2.labeling.letter_of_state(1).str() == "{a0}");
}

TEST_CASE("parameters substitute into dynamics and regions") {
    Problem p = parse_problem_text(R"({
        "name": "param-demo",
        "spec": "safety",
        "dimension": 1,
        "parameters": {"tau": 0.5, "c": 2.0},
        "state_box": [[0, 10]],
        "dynamics": ["x1 + tau*c"],
        "init": [[0, 1]],
        "unsafe": {"box": [[9, 10]], "where": ["x1 - c - 7"]}
    })");
    std::vector<double> x = {1.0};
    REQUIRE(p.cont.step(x, &p.regions)[0] == Catch::Approx(2.0));
    // the where-clause x1 >= 9 from the parameter: unsafe is [9,10]
    REQUIRE(p.unsafe.contains(std::vector<double>{9.5}, &p.regions));
    REQUIRE(!p.unsafe.contains(std::vector<double>{8.5}, &p.regions));
}

TEST_CASE("region clause forms: array, box+where, clauses, points") {
    Problem p = parse_problem_text(R"({
        "name": "regions",
        "spec": "persistence",
        "dimension": 2,
        "state_box": [[-5, 5], [-5, 5]],
        "dynamics": ["x1", "x2"],
        "init": {"points": [[0, 0], [1, 1]]},
        "vf": {"clauses": [
            [[2, 3], [2, 3]],
            {"box": [[-3, -2], [-3, -2]], "where": ["x1 - x2"]}
        ]}
    })");
    REQUIRE(p.cont.init.clauses.size() == 2);
    REQUIRE(p.cont.init.clauses[0].bound[0].is_point());
    REQUIRE(p.vf.clauses.size() == 2);
    REQUIRE(p.vf.contains(std::vector<double>{2.5, 2.5}, &p.regions));
    // second clause keeps only points with x1 >= x2
    REQUIRE(p.vf.contains(std::vector<double>{-2.2, -2.8}, &p.regions));
    REQUIRE(!p.vf.contains(std::vector<double>{-2.8, -2.2}, &p.regions));
}

TEST_CASE("inline HOA text works as an nba value") {
    Problem p = parse_problem_text(R"({
        "name": "inline-nba",
        "spec": "ltl",
        "states": 1,
        "transitions": [[0, 0]],
        "init": [0],
        "labeling": [{"letter": ["p"], "states": [0]}],
        "nba": [
            "HOA: v1",
            "States: 1",
            "Start: 0",
            "AP: 1 \"p\"",
            "acc-name: Buchi",
            "Acceptance: 1 Inf(0)",
            "--BODY--",
            "State: 0 {0}",
            "[0] 0",
            "--END--"
        ]
    })");
    REQUIRE(p.has_nba);
    REQUIRE(p.nba.num_states == 1);
    REQUIRE(p.nba.accepting == std::vector<int>{0});
}

TEST_CASE("structural problems are rejected with specific errors") {
    // no spec
    REQUIRE_THROWS_AS(parse_problem_text(R"({"name": "x"})"), FormatError);
    // unknown spec
    REQUIRE_THROWS_AS(parse_problem_text(R"({"spec": "liveness"})"), FormatError);
    // both finite and continuous bodies
    REQUIRE_THROWS_AS(parse_problem_text(R"({
        "spec": "safety", "dimension": 1, "state_box": [[0,1]],
        "dynamics": ["x1"], "transitions": [[0,0]], "states": 1, "init": [0]
    })"), FormatError);
    // box with lo > hi
    REQUIRE_THROWS_AS(parse_problem_text(R"({
        "spec": "safety", "dimension": 1, "state_box": [[1, 0]],
        "dynamics": ["x1"], "init": [[0, 0]], "unsafe": [[0, 0]]
    })"), FormatError);
    // dynamics arity mismatch
    REQUIRE_THROWS_AS(parse_problem_text(R"({
        "spec": "safety", "dimension": 2, "state_box": [[0,1],[0,1]],
        "dynamics": ["x1"], "init": [[0,1],[0,1]], "unsafe": [[0,1],[0,1]]
    })"), DimensionMismatch);
    // init region escaping the state box (caught by containment sampling)
    REQUIRE_THROWS_AS(parse_problem_text(R"({
        "spec": "safety", "dimension": 1, "state_box": [[0, 1]],
        "dynamics": ["x1"], "init": [[2, 3]], "unsafe": [[0.5, 1]]
    })"), FormatError);
    // finite: init outside the state range
    REQUIRE_THROWS_AS(parse_problem_text(R"({
        "spec": "safety", "states": 2, "transitions": [[0,1]], "init": [5]
    })"), FormatError);
    // finite: embedding arity
    REQUIRE_THROWS_AS(parse_problem_text(R"({
        "spec": "safety", "states": 2, "transitions": [[0,1],[1,1]],
        "init": [0], "embedding": [0]
    })"), DimensionMismatch);
    // persistence without vf
    REQUIRE_THROWS_AS(parse_problem_text(R"({
        "spec": "persistence", "states": 1, "transitions": [[0,0]], "init": [0]
    })"), FormatError);
    // empty region
    REQUIRE_THROWS_AS(parse_problem_text(R"({
        "spec": "safety", "dimension": 1, "state_box": [[0, 1]],
        "dynamics": ["x1"], "init": {"clauses": []}, "unsafe": [[0.5, 1]]
    })"), EmptyRegion);
    // not JSON at all
    REQUIRE_THROWS_AS(parse_problem_text("not json"), FormatError);
}

TEST_CASE("ltl problems must declare automaton-known propositions") {
    REQUIRE_THROWS_AS(parse_problem_text(R"({
        "spec": "ltl", "states": 1, "transitions": [[0,0]], "init": [0],
        "labeling": [{"letter": ["q"], "states": [0]}],
        "nba": ["HOA: v1", "States: 1", "Start: 0", "AP: 1 \"p\"",
                "acc-name: Buchi", "Acceptance: 1 Inf(0)", "--BODY--",
                "State: 0 {0}", "[0] 0", "--END--"]
    })"), FormatError);
}

TEST_CASE("finite labelings must partition the states exactly") {
    // overlapping letters on state 0
    REQUIRE_THROWS_AS(parse_problem_text(R"({
        "spec": "ltl", "states": 2, "transitions": [[0,1],[1,1]], "init": [0],
        "labeling": [{"letter": ["p"], "states": [0, 1]},
                      {"letter": [], "states": [0]}],
        "nba": ["HOA: v1", "States: 1", "Start: 0", "AP: 1 \"p\"",
                "acc-name: Buchi", "Acceptance: 1 Inf(0)", "--BODY--",
                "State: 0 {0}", "[t] 0", "--END--"]
    })"), PartitionViolation);
    // state 1 unlabeled
    REQUIRE_THROWS_AS(parse_problem_text(R"({
        "spec": "ltl", "states": 2, "transitions": [[0,1],[1,1]], "init": [0],
        "labeling": [{"letter": ["p"], "states": [0]}],
        "nba": ["HOA: v1", "States: 1", "Start: 0", "AP: 1 \"p\"",
                "acc-name: Buchi", "Acceptance: 1 Inf(0)", "--BODY--",
                "State: 0 {0}", "[t] 0", "--END--"]
    })"), PartitionViolation);
}

TEST_CASE("continuous label regions must tile the state box") {
    auto with_labels = [](const std::string& a_box, const std::string& empty_box) {
        return std::string(R"({
            "spec": "ltl", "dimension": 1, "state_box": [[0, 2]],
            "dynamics": ["x1"], "init": [[0, 0.5]],
            "labeling": [
                {"letter": ["p"], "region": )") + a_box + R"(},
                {"letter": [], "region": )" + empty_box + R"(}
            ],
            "nba": ["HOA: v1", "States: 1", "Start: 0", "AP: 1 \"p\"",
                    "acc-name: Buchi", "Acceptance: 1 Inf(0)", "--BODY--",
                    "State: 0 {0}", "[t] 0", "--END--"]
        })";
    };
    // clean tiling: [0,1] and [1,2] share only a face
    REQUIRE_NOTHROW(parse_problem_text(with_labels("[[0, 1]]", "[[1, 2]]")));
    // interior overlap on (0.8, 1.2)
    try {
        parse_problem_text(with_labels("[[0, 1.2]]", "[[0.8, 2]]"));
        FAIL("overlap not detected");
    } catch (const PartitionViolation& e) {
        REQUIRE(e.witness.size() == 1);
        REQUIRE(e.witness[0] > 0.8);
        REQUIRE(e.witness[0] < 1.2);
    }
    // coverage hole on (1, 1.5)
    try {
        parse_problem_text(with_labels("[[0, 1]]", "[[1.5, 2]]"));
        FAIL("hole not detected");
    } catch (const PartitionViolation& e) {
        REQUIRE(e.witness.size() == 1);
        REQUIRE(e.witness[0] > 1.0);
        REQUIRE(e.witness[0] < 1.5);
    }
}

TEST_CASE("letter region ids read off the alphabet") {
    REQUIRE(label_region_id(Letter::of({})) == "L_empty");
    REQUIRE(label_region_id(Letter::of({"a"})) == "L_a");
    REQUIRE(label_region_id(Letter::of({"a0", "a1"})) == "L_a0_a1");
}
