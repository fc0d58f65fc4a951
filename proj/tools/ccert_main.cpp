// Command-line front end: check certificates, synthesize them, run the
// path-cutting baseline, and run exact finite-state analyses. Exit codes:
// 0 = the property/certificate holds, 1 = refuted/inconclusive/failed,
// 2 = usage or input errors.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ccert/cegis.hpp"
#include "ccert/certificate.hpp"
#include "ccert/checker.hpp"
#include "ccert/errors.hpp"
#include "ccert/finite_analysis.hpp"
#include "ccert/problem.hpp"
#include "ccert/report.hpp"
#include "ccert/triplet.hpp"

namespace {

using namespace ccert;

CheckConfig::Mode parse_mode(const std::string& s) {
    if (s == "strengthened") return CheckConfig::Mode::Strengthened;
    if (s == "implication") return CheckConfig::Mode::Implication;
    throw FormatError("unknown mode '" + s + "' (expected strengthened or implication)");
}

CheckConfig::Engine parse_engine(const std::string& s) {
    if (s == "auto") return CheckConfig::Engine::Auto;
    if (s == "exhaustive") return CheckConfig::Engine::Exhaustive;
    if (s == "falsifier") return CheckConfig::Engine::Falsifier;
    if (s == "sampled") return CheckConfig::Engine::Sampled;
    throw FormatError("unknown engine '" + s + "' (expected auto, exhaustive, falsifier, sampled)");
}

int finish(RunReport& rep, const Stopwatch& sw, const std::string& out_path) {
    rep.elapsed_seconds = sw.seconds();
    std::cout << rep.text();
    if (!out_path.empty()) rep.write(out_path);
    return rep.exit_code;
}

std::string verdict_line(const Verdict& v) {
    std::string s = to_string(v.kind);
    if (v.falsified()) s += " [" + v.condition + "]";
    if (v.kind == Verdict::Kind::Unknown && !v.note.empty()) s += " (" + v.note + ")";
    return s;
}

struct CheckFlags {
    std::string problem, certificate, out;
    std::string mode = "strengthened", engine = "auto";
    double delta = 1e-3;
    uint64_t budget = 1000000;
    int samples = 10000;
    uint64_t seed = 0;
    int jobs = 1;
};

int run_check(const CheckFlags& f) {
    Stopwatch sw;
    Problem p = load_problem(f.problem);
    Certificate c = load_certificate(f.certificate);
    CheckConfig cfg;
    cfg.mode = parse_mode(f.mode);
    cfg.engine = parse_engine(f.engine);
    cfg.falsifier.delta = f.delta;
    cfg.falsifier.budget = f.budget;
    cfg.samples = f.samples;
    cfg.seed = f.seed;

    Verdict v = check_certificate(c, p, cfg);

    RunReport rep;
    rep.command = "check";
    rep.problem_name = p.name;
    rep.problem_digest = digest_file(f.problem);
    rep.seed = f.seed;
    rep.verdict = verdict_line(v);
    rep.exit_code = v.verified() ? 0 : 1;
    rep.payload = verdict_json(v);
    return finish(rep, sw, f.out);
}

struct SynthFlags {
    std::string problem, tmpl, out, cert_out;
    double tau1 = 1.0, tau2 = 0.0, tau3 = 0.0;
    double xi_min = 1e-3;
    int n = 50;
    uint64_t seed = 0;
    int max_iters = 200;
    double delta = 1e-3;
    int jobs = 1;
};

int run_synth(const SynthFlags& f) {
    Stopwatch sw;
    Problem p = load_problem(f.problem);
    CertificateTemplate tmpl = load_template(f.tmpl);
    CegisConfig cfg;
    cfg.tau1 = f.tau1;
    cfg.tau2 = f.tau2;
    cfg.tau3 = f.tau3;
    cfg.xi_min = f.xi_min;
    cfg.samples_per_set = f.n;
    cfg.seed = f.seed;
    cfg.max_iters = f.max_iters;
    cfg.falsifier.delta = f.delta;
    cfg.jobs = f.jobs;

    SynthesisResult sr = synthesize(p, tmpl, cfg);
    if (log_level() >= 1)
        for (const auto& it : sr.history)
            std::cerr << "iter " << it.iteration << ": xi=" << it.xi << " rows=" << it.lp_rows
                      << (it.refuted_condition.empty() ? "" : " refuted=" + it.refuted_condition)
                      << "\n";

    RunReport rep;
    rep.command = "synth";
    rep.problem_name = p.name;
    rep.problem_digest = digest_file(f.problem);
    rep.seed = f.seed;
    rep.exit_code = sr.success ? 0 : 1;
    rep.payload["iterations"] = sr.iterations;
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& it : sr.history) {
        nlohmann::json h;
        h["iteration"] = it.iteration;
        h["xi"] = it.xi;
        h["lp_rows"] = it.lp_rows;
        if (!it.refuted_condition.empty()) {
            h["refuted_condition"] = it.refuted_condition;
            h["counterexample"] = it.counterexample;
        }
        hist.push_back(std::move(h));
    }
    rep.payload["history"] = std::move(hist);
    if (sr.success) {
        rep.verdict = "Success";
        rep.payload["certificate"] = to_json(sr.certificate);
        rep.payload["verdict"] = verdict_json(sr.verdict);
        std::string cert_path = f.cert_out;
        if (cert_path.empty())
            cert_path = std::filesystem::path(f.problem).stem().string() + "-synth.json";
        save_certificate(sr.certificate, cert_path);
        rep.payload["certificate_file"] = cert_path;
    } else {
        rep.verdict = "Failure(" + std::string(to_string(sr.reason)) + ")";
        rep.payload["reason"] = to_string(sr.reason);
        rep.payload["detail"] = sr.detail;
    }
    return finish(rep, sw, f.out);
}

struct TripletFlags {
    std::string problem, out;
    bool allow_unroll = false;
    uint64_t seed = 0;
    double delta = 1e-3;
    int jobs = 1;
};

int run_triplet(const TripletFlags& f) {
    Stopwatch sw;
    Problem p = load_problem(f.problem);
    TripletConfig cfg;
    cfg.synth.seed = f.seed;
    cfg.synth.falsifier.delta = f.delta;
    cfg.synth.jobs = f.jobs;
    cfg.recheck.falsifier.delta = f.delta;
    cfg.recheck.seed = f.seed;

    TripletVerification tv = triplet_verify(p, cfg, f.allow_unroll);

    RunReport rep;
    rep.command = "triplet";
    rep.problem_name = p.name;
    rep.problem_digest = digest_file(f.problem);
    rep.seed = f.seed;
    rep.verdict = tv.verified ? "Verified" : "Inconclusive";
    rep.exit_code = tv.verified ? 0 : 1;
    rep.payload["paths"] = tv.paths;
    rep.payload["unroll_used"] = tv.unroll_used;
    nlohmann::json cuts = nlohmann::json::array();
    for (const auto& c : tv.cuts) {
        nlohmann::json cj;
        cj["triplet"] = c.triplet.str();
        cj["tabular"] = c.tabular;
        cj["barrier"] = to_json(c.barrier);
        cuts.push_back(std::move(cj));
    }
    rep.payload["cuts"] = std::move(cuts);
    rep.payload["uncut_paths"] = tv.uncut_paths;
    return finish(rep, sw, f.out);
}

struct FiniteFlags {
    std::string problem, action, out;
    int degree = -1;
};

int run_finite(const FiniteFlags& f) {
    Stopwatch sw;
    Problem p = load_problem(f.problem);
    if (!p.is_finite) throw KindMismatch("'" + f.problem + "' is not a finite-state problem");

    RunReport rep;
    rep.command = "finite " + f.action;
    rep.problem_name = p.name;
    rep.problem_digest = digest_file(f.problem);

    if (f.action == "closure") {
        auto closed = transitive_closure(p.fin);
        uint64_t pairs = 0;
        for (char c : closed) pairs += c != 0;
        rep.verdict = "Computed";
        rep.exit_code = 0;
        rep.payload["states"] = p.fin.num_states;
        rep.payload["reachable_pairs"] = pairs;
    } else if (f.action == "safety") {
        FiniteSafety fs = exact_safety(p.fin, p.unsafe_states);
        rep.verdict = fs.safe ? "Safe" : "Unsafe";
        rep.exit_code = fs.safe ? 0 : 1;
        if (!fs.safe) rep.payload["path"] = fs.path;
    } else if (f.action == "persistence") {
        FinitePersistence fp = exact_persistence(p.fin, p.vf_states);
        rep.verdict = fp.persistent ? "Persistent" : "NotPersistent";
        rep.exit_code = fp.persistent ? 0 : 1;
        if (!fp.persistent) {
            rep.payload["stem"] = fp.stem;
            rep.payload["cycle"] = fp.cycle;
        }
    } else if (f.action == "barrier-lp") {
        if (f.degree < 0)
            throw FormatError("barrier-lp needs a nonnegative degree argument");
        Certificate cert;
        LpResult res = barrier_lp_feasibility(p, f.degree, 1e-3, &cert);
        bool feasible = res.status == LpStatus::Feasible;
        rep.verdict = feasible ? "Feasible" : "Infeasible";
        rep.exit_code = feasible ? 0 : 1;
        rep.payload["degree"] = f.degree;
        if (feasible) rep.payload["certificate"] = to_json(cert);
    } else {
        throw FormatError("unknown finite action '" + f.action +
                          "' (expected closure, safety, persistence, or barrier-lp)");
    }
    return finish(rep, sw, f.out);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"closure certificate toolkit: check, synthesize, and baseline verifiers"};
    app.require_subcommand(1);

    CheckFlags cf;
    CLI::App* check = app.add_subcommand("check", "check a certificate against a problem");
    check->add_option("problem", cf.problem, "problem JSON file")->required();
    check->add_option("certificate", cf.certificate, "certificate JSON file")->required();
    check->add_option("--mode", cf.mode, "strengthened|implication");
    check->add_option("--engine", cf.engine, "auto|exhaustive|falsifier|sampled");
    check->add_option("--delta", cf.delta, "falsifier width floor");
    check->add_option("--budget", cf.budget, "falsifier box budget");
    check->add_option("--samples", cf.samples, "sampled engine tuples per condition");
    check->add_option("--seed", cf.seed, "random seed");
    check->add_option("--jobs", cf.jobs, "worker count (runs are sequential)");
    check->add_option("--out", cf.out, "write the JSON report here");

    SynthFlags sf;
    CLI::App* synth = app.add_subcommand("synth", "synthesize a certificate from a template");
    synth->add_option("problem", sf.problem, "problem JSON file")->required();
    synth->add_option("template", sf.tmpl, "template JSON file")->required();
    synth->add_option("--tau1", sf.tau1, "step-condition multiplier");
    synth->add_option("--tau2", sf.tau2, "decrease-condition multiplier");
    synth->add_option("--tau3", sf.tau3, "decrease-condition cross multiplier");
    synth->add_option("--xi-min", sf.xi_min, "smallest acceptable gap");
    synth->add_option("--n", sf.n, "initial samples per sample set");
    synth->add_option("--seed", sf.seed, "random seed");
    synth->add_option("--max-iters", sf.max_iters, "iteration cap");
    synth->add_option("--delta", sf.delta, "falsifier width floor");
    synth->add_option("--jobs", sf.jobs, "worker count (runs are sequential)");
    synth->add_option("--out", sf.out, "write the JSON report here");
    synth->add_option("--cert-out", sf.cert_out, "certificate output path");

    TripletFlags tf;
    CLI::App* triplet = app.add_subcommand("triplet", "run the path-cutting baseline");
    triplet->add_option("problem", tf.problem, "problem JSON file")->required();
    triplet->add_flag("--allow-unroll", tf.allow_unroll, "retry once on the unrolled automaton");
    triplet->add_option("--seed", tf.seed, "random seed");
    triplet->add_option("--delta", tf.delta, "falsifier width floor");
    triplet->add_option("--jobs", tf.jobs, "worker count (runs are sequential)");
    triplet->add_option("--out", tf.out, "write the JSON report here");

    FiniteFlags ff;
    CLI::App* finite = app.add_subcommand("finite", "exact analyses of finite-state problems");
    finite->add_option("problem", ff.problem, "problem JSON file")->required();
    finite->add_option("action", ff.action, "closure|safety|persistence|barrier-lp")->required();
    finite->add_option("degree", ff.degree, "polynomial degree for barrier-lp");
    finite->add_option("--out", ff.out, "write the JSON report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2; // usage problems are exit 2
    }

    try {
        if (check->parsed()) return run_check(cf);
        if (synth->parsed()) return run_synth(sf);
        if (triplet->parsed()) return run_triplet(tf);
        if (finite->parsed()) return run_finite(ff);
    } catch (const ccert::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
