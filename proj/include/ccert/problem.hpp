#pragma once

// Problem files bundle a system (continuous dynamics or a finite transition
// relation), a specification kind, the regions it needs, an optional labeling
// and automaton, and named numeric parameters. See docs/problem-format.md for
// the schema. Loading validates everything that is cheap to validate eagerly:
// dimensions, expression parsing, containment samples, and (for labeled
// problems) that the label regions tile the state box without interior
// overlap, up to falsifier precision.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccert/errors.hpp"
#include "ccert/expr.hpp"
#include "ccert/falsifier.hpp"
#include "ccert/hoa.hpp"
#include "ccert/nba.hpp"
#include "ccert/region.hpp"
#include "ccert/rng.hpp"
#include "ccert/system.hpp"

namespace ccert {

enum class SpecKind { Safety, Persistence, Ltl };

inline const char* to_string(SpecKind k) {
    switch (k) {
    case SpecKind::Safety: return "safety";
    case SpecKind::Persistence: return "persistence";
    case SpecKind::Ltl: return "ltl";
    }
    return "?";
}

inline SpecKind parse_spec_kind(const std::string& s) {
    if (s == "safety") return SpecKind::Safety;
    if (s == "persistence") return SpecKind::Persistence;
    if (s == "ltl") return SpecKind::Ltl;
    throw FormatError("unknown spec kind '" + s + "' (expected safety, persistence, or ltl)");
}

struct Problem {
    std::string name;
    SpecKind spec = SpecKind::Safety;
    bool is_finite = false;

    // Continuous form
    ContinuousSystem cont;
    Region unsafe;  // safety
    Region vf;      // persistence

    // Finite form
    FiniteSystem fin;
    std::vector<int> unsafe_states;
    std::vector<int> vf_states;

    // Shared
    Labeling labeling;
    Nba nba;
    bool has_nba = false;
    RegionTable regions; // X, X0, Xu/XVF, and L_* label regions (continuous)
    std::map<std::string, double> parameters;

    double param(const std::string& key, double fallback) const {
        auto it = parameters.find(key);
        return it == parameters.end() ? fallback : it->second;
    }

    int dimension() const { return is_finite ? 1 : cont.dimension; }
};

// Region id under which a letter's label region is registered: "L_" followed
// by the APs joined with underscores, or "L_empty" for the empty letter.
inline std::string label_region_id(const Letter& l) {
    if (l.aps.empty()) return "L_empty";
    std::string id = "L";
    for (const auto& ap : l.aps) id += "_" + ap;
    return id;
}

namespace detail {

using nlohmann::json;

inline double num_at(const json& j, const char* what) {
    if (!j.is_number()) throw FormatError(std::string(what) + " must be a number");
    return j.get<double>();
}

inline Box parse_box_json(const json& j, int dim, const char* what) {
    if (!j.is_array()) throw FormatError(std::string(what) + " must be an array of [lo, hi] pairs");
    Box b;
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2)
            throw FormatError(std::string(what) + " entries must be [lo, hi] pairs");
        double lo = num_at(p[0], what), hi = num_at(p[1], what);
        if (!(lo <= hi)) throw FormatError(std::string(what) + " has lo > hi");
        b.push_back(Interval(lo, hi));
    }
    if (dim > 0 && (int)b.size() != dim)
        throw DimensionMismatch(std::string(what) + " has " + std::to_string(b.size()) +
                                " dimensions, expected " + std::to_string(dim));
    return b;
}

// Expressions may reference declared parameters by name; they are substituted
// as constants immediately after parsing.
inline Expr parse_with_params(const std::string& text, int dim,
                              const std::map<std::string, double>& params) {
    std::vector<std::string> vars = make_var_names(dim);
    for (const auto& [k, v] : params) vars.push_back(k);
    Expr e = parse_expr(text, vars);
    std::vector<Expr> map;
    for (int i = 0; i < dim; ++i) map.push_back(Expr::var(i, vars[i]));
    for (const auto& [k, v] : params) map.push_back(Expr::constant(v));
    return e.substitute(map);
}

inline Region parse_region_json(const json& j, const std::string& id, int dim,
                                const std::map<std::string, double>& params) {
    Region r;
    r.id = id;
    auto add_clause = [&](const json& c) {
        RegionClause clause;
        if (c.is_array()) {
            clause.bound = parse_box_json(c, dim, id.c_str());
        } else if (c.is_object()) {
            if (!c.contains("box"))
                throw FormatError("region '" + id + "' clause needs a \"box\"");
            clause.bound = parse_box_json(c["box"], dim, id.c_str());
            if (c.contains("where")) {
                if (!c["where"].is_array())
                    throw FormatError("region '" + id + "' \"where\" must be a list of expressions");
                for (const auto& g : c["where"])
                    clause.constraints.push_back(
                        parse_with_params(g.get<std::string>(), dim, params));
            }
        } else {
            throw FormatError("region '" + id + "' clause must be a box array or an object");
        }
        r.clauses.push_back(std::move(clause));
    };

    if (j.is_array()) {
        add_clause(j);
    } else if (j.is_object() && j.contains("points")) {
        for (const auto& p : j["points"]) {
            if (!p.is_array() || (int)p.size() != dim)
                throw DimensionMismatch("region '" + id + "' point has wrong dimension");
            Box b;
            for (const auto& v : p) {
                double x = num_at(v, id.c_str());
                b.push_back(Interval(x, x));
            }
            RegionClause clause;
            clause.bound = std::move(b);
            r.clauses.push_back(std::move(clause));
        }
    } else if (j.is_object() && j.contains("clauses")) {
        for (const auto& c : j["clauses"]) add_clause(c);
    } else if (j.is_object() && j.contains("box")) {
        add_clause(j);
    } else {
        throw FormatError("region '" + id + "' has an unrecognized shape");
    }
    if (r.clauses.empty()) throw EmptyRegion("region '" + id + "' has no clauses");
    return r;
}

inline std::vector<int> parse_state_list(const json& j, int num_states, const char* what) {
    if (!j.is_array()) throw FormatError(std::string(what) + " must be a list of state indices");
    std::vector<int> out;
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw FormatError(std::string(what) + " entries must be integers");
        int s = v.get<int>();
        if (s < 0 || s >= num_states)
            throw FormatError(std::string(what) + " references state " + std::to_string(s) +
                              " outside 0.." + std::to_string(num_states - 1));
        out.push_back(s);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Interior overlap between two label regions, restricted to the state box.
// Box-only clauses are decided geometrically; clauses with extra constraints
// fall back to a falsifier satisfiability probe on the intersection box.
inline bool find_label_overlap(const Region& a, const Region& b, const Box& state,
                               const RegionResolver* rr, std::vector<double>& witness) {
    for (const auto& ca : a.clauses)
        for (const auto& cb : b.clauses) {
            Box inter;
            bool open = true;
            for (size_t d = 0; d < state.size(); ++d) {
                double lo = std::max({ca.bound[d].lo, cb.bound[d].lo, state[d].lo});
                double hi = std::min({ca.bound[d].hi, cb.bound[d].hi, state[d].hi});
                if (hi - lo <= 1e-9) { open = false; break; }
                inter.push_back(Interval(lo, hi));
            }
            if (!open) continue; // at most a shared face: not an interior overlap
            if (ca.constraints.empty() && cb.constraints.empty()) {
                witness = inter.midpoint();
                return true;
            }
            Claim probe;
            probe.kind = ClaimKind::UnsatConj;
            probe.exprs = ca.constraints;
            probe.exprs.insert(probe.exprs.end(), cb.constraints.begin(), cb.constraints.end());
            probe.domain = inter;
            probe.regions = rr;
            probe.tag = "label-overlap";
            FalsifierResult fr = decide(probe);
            if (fr.outcome == Outcome::Falsified) {
                witness = fr.witness;
                return true;
            }
            // Verified or Unknown: no interior overlap demonstrated.
        }
    return false;
}

} // namespace detail

inline Problem parse_problem(const nlohmann::json& j, const std::string& base_dir) {
    using detail::json;
    Problem p;
    p.name = j.value("name", "unnamed");
    if (!j.contains("spec")) throw FormatError("problem is missing \"spec\"");
    p.spec = parse_spec_kind(j["spec"].get<std::string>());

    if (j.contains("parameters")) {
        for (auto it = j["parameters"].begin(); it != j["parameters"].end(); ++it)
            p.parameters[it.key()] = detail::num_at(it.value(), "parameter");
    }

    const bool finite = j.contains("transitions");
    const bool continuous = j.contains("dynamics");
    if (finite == continuous)
        throw FormatError("problem must have either \"dynamics\" or \"transitions\"");
    p.is_finite = finite;

    if (finite) {
        if (!j.contains("states")) throw FormatError("finite problem needs \"states\"");
        int n = j["states"].get<int>();
        std::vector<std::pair<int, int>> edges;
        for (const auto& e : j["transitions"]) {
            if (!e.is_array() || e.size() != 2)
                throw FormatError("\"transitions\" entries must be [from, to] pairs");
            edges.emplace_back(e[0].get<int>(), e[1].get<int>());
        }
        std::vector<int> init = detail::parse_state_list(
            j.contains("init") ? j["init"] : json::array(), n, "init");
        if (init.empty()) throw FormatError("finite problem needs a non-empty \"init\"");
        p.fin = FiniteSystem::from_edges(n, init, edges);
        if (j.contains("embedding")) {
            for (const auto& v : j["embedding"]) {
                if (v.is_array()) {
                    std::vector<double> pt;
                    for (const auto& c : v) pt.push_back(detail::num_at(c, "embedding"));
                    p.fin.embedding.push_back(std::move(pt));
                } else {
                    p.fin.embedding.push_back({detail::num_at(v, "embedding")});
                }
            }
            if ((int)p.fin.embedding.size() != n)
                throw DimensionMismatch("embedding must list one vector per state");
        }
        if (p.spec == SpecKind::Safety)
            p.unsafe_states = detail::parse_state_list(
                j.contains("unsafe") ? j["unsafe"] : json::array(), n, "unsafe");
        if (p.spec == SpecKind::Persistence) {
            if (!j.contains("vf")) throw FormatError("persistence problem needs \"vf\"");
            p.vf_states = detail::parse_state_list(j["vf"], n, "vf");
        }
        if (p.spec == SpecKind::Ltl) {
            if (!j.contains("labeling")) throw FormatError("ltl problem needs \"labeling\"");
            for (const auto& e : j["labeling"]) {
                Labeling::Entry entry;
                std::vector<std::string> aps;
                for (const auto& a : e["letter"]) aps.push_back(a.get<std::string>());
                entry.letter = Letter::of(std::move(aps));
                entry.states = detail::parse_state_list(e["states"], n, "labeling states");
                p.labeling.entries.push_back(std::move(entry));
            }
            p.labeling.sort_entries();
            p.labeling.validate_finite(n);
        }
    } else {
        if (!j.contains("dimension")) throw FormatError("continuous problem needs \"dimension\"");
        int dim = j["dimension"].get<int>();
        if (dim < 1) throw FormatError("dimension must be >= 1");
        p.cont.dimension = dim;
        p.cont.state_box = detail::parse_box_json(
            j.contains("state_box") ? j["state_box"] : json::array(), dim, "state_box");
        for (const auto& d : p.cont.state_box)
            if (!d.is_finite()) throw FormatError("state_box must be finite");
        if ((int)j["dynamics"].size() != dim)
            throw DimensionMismatch("dynamics must list one expression per dimension");
        for (const auto& f : j["dynamics"])
            p.cont.dynamics.push_back(
                detail::parse_with_params(f.get<std::string>(), dim, p.parameters));

        p.regions.add(Region::from_box("X", p.cont.state_box));
        if (!j.contains("init")) throw FormatError("continuous problem needs \"init\"");
        p.cont.init = detail::parse_region_json(j["init"], "X0", dim, p.parameters);
        p.regions.add(p.cont.init);

        if (p.spec == SpecKind::Safety) {
            if (!j.contains("unsafe")) throw FormatError("safety problem needs \"unsafe\"");
            p.unsafe = detail::parse_region_json(j["unsafe"], "Xu", dim, p.parameters);
            p.regions.add(p.unsafe);
        }
        if (p.spec == SpecKind::Persistence) {
            if (!j.contains("vf")) throw FormatError("persistence problem needs \"vf\"");
            p.vf = detail::parse_region_json(j["vf"], "XVF", dim, p.parameters);
            p.regions.add(p.vf);
        }
        if (p.spec == SpecKind::Ltl) {
            if (!j.contains("labeling")) throw FormatError("ltl problem needs \"labeling\"");
            for (const auto& e : j["labeling"]) {
                Labeling::Entry entry;
                std::vector<std::string> aps;
                for (const auto& a : e["letter"]) aps.push_back(a.get<std::string>());
                entry.letter = Letter::of(std::move(aps));
                if (p.labeling.find(entry.letter))
                    throw FormatError("duplicate labeling entry for letter " + entry.letter.str());
                std::string id = label_region_id(entry.letter);
                entry.region = detail::parse_region_json(e["region"], id, dim, p.parameters);
                p.regions.add(entry.region);
                p.labeling.entries.push_back(std::move(entry));
            }
            p.labeling.sort_entries();
        }

        // Containment sample: X0 must live inside the state box.
        SplitMix64 rng(0x9e3779b97f4a7c15ull);
        for (const auto& pt : sample_region(p.cont.init, 64, rng, &p.regions))
            if (!p.cont.state_box.contains(pt)) {
                std::string w;
                for (double v : pt) w += (w.empty() ? "" : ", ") + std::to_string(v);
                throw FormatError("init region leaves the state box at (" + w + ")");
            }
    }

    if (p.spec == SpecKind::Ltl) {
        if (!j.contains("nba")) throw FormatError("ltl problem needs \"nba\"");
        if (j["nba"].is_string()) {
            std::filesystem::path path(j["nba"].get<std::string>());
            if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
            p.nba = load_hoa_file(path.string());
        } else if (j["nba"].is_array()) {
            std::string text;
            for (const auto& line : j["nba"]) text += line.get<std::string>() + "\n";
            p.nba = parse_hoa(text);
        } else {
            throw FormatError("\"nba\" must be a file path or a list of HOA lines");
        }
        p.has_nba = true;
        // Every labeling letter must be over the automaton's propositions.
        for (const auto& e : p.labeling.entries)
            for (const auto& ap : e.letter.aps)
                if (std::find(p.nba.aps.begin(), p.nba.aps.end(), ap) == p.nba.aps.end())
                    throw FormatError("labeling uses proposition '" + ap +
                                      "' not declared by the automaton");
    }

    // Labeled continuous problems: label regions must tile the state box.
    if (p.spec == SpecKind::Ltl && !p.is_finite) {
        const auto& entries = p.labeling.entries;
        for (size_t a = 0; a < entries.size(); ++a)
            for (size_t b = a + 1; b < entries.size(); ++b) {
                std::vector<double> witness;
                if (detail::find_label_overlap(entries[a].region, entries[b].region,
                                               p.cont.state_box, &p.regions, witness))
                    throw PartitionViolation("label regions " + entries[a].letter.str() +
                                                 " and " + entries[b].letter.str() + " overlap",
                                             witness);
            }
        Claim cover;
        cover.kind = ClaimKind::ForAllNonneg;
        Expr total = Expr::constant(-0.5);
        for (const auto& e : entries) total = total + Expr::indicator(e.region.id);
        cover.exprs = {total};
        cover.domain = p.cont.state_box;
        cover.regions = &p.regions;
        cover.tag = "label-coverage";
        FalsifierResult fr = decide(cover);
        if (fr.outcome == Outcome::Falsified)
            throw PartitionViolation("label regions do not cover the state box", fr.witness);
    }

    return p;
}

inline Problem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open problem file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("problem file is not valid JSON: " + std::string(e.what()));
    }
    std::string dir = std::filesystem::path(path).parent_path().string();
    if (dir.empty()) dir = ".";
    return parse_problem(j, dir);
}

inline Problem parse_problem_text(const std::string& text, const std::string& base_dir = ".") {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("problem text is not valid JSON: " + std::string(e.what()));
    }
    return parse_problem(j, base_dir);
}

} // namespace ccert
