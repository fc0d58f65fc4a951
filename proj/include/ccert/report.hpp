#pragma once

// Machine-readable run reports for the command-line front end: a stable
// digest of the problem file, the verdict with its margins or witness, seed,
// timing, and tool version. Reports print as key/value text for scripts and
// serialize to JSON for --out files.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccert/checker.hpp"
#include "ccert/errors.hpp"

namespace ccert {

inline constexpr const char* kToolVersion = "0.1.0";

// Verbosity from the CLOSURE_CERT_LOG environment variable: unset/0 quiet,
// 1 progress notes, 2 debug chatter.
inline int log_level() {
    static int level = [] {
        const char* v = std::getenv("CLOSURE_CERT_LOG");
        if (!v || !*v) return 0;
        char* end = nullptr;
        long n = std::strtol(v, &end, 10);
        return (end && *end == '\0') ? static_cast<int>(n) : 1;
    }();
    return level;
}

// 64-bit FNV-1a over raw bytes; digests must be stable across runs and
// platforms, so nothing seeded or pointer-dependent is allowed in here.
inline uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[(size_t)i] = digits[v & 0xf];
    return out;
}

inline std::string digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return hex64(fnv1a64(ss.str()));
}

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

inline nlohmann::json verdict_json(const Verdict& v) {
    nlohmann::json j;
    j["kind"] = to_string(v.kind);
    if (v.verified()) {
        nlohmann::json m = nlohmann::json::object();
        for (const auto& cm : v.margins) m[cm.condition] = cm.margin;
        j["margins"] = m;
    }
    if (v.falsified()) {
        j["condition"] = v.condition;
        j["witness"] = v.witness;
        j["value"] = v.value;
    }
    if (v.kind == Verdict::Kind::Unknown) {
        j["smallest_box"] = v.smallest_box;
        j["unknown_leaves"] = v.unknown_leaves;
        j["budget_exhausted"] = v.budget_exhausted;
    }
    if (v.boxes) j["boxes"] = v.boxes;
    if (v.samples_checked) j["samples_checked"] = v.samples_checked;
    if (v.violations) j["violations"] = v.violations;
    if (!std::isnan(v.t_star)) j["t_star"] = v.t_star;
    if (!v.note.empty()) j["note"] = v.note;
    return j;
}

struct RunReport {
    std::string command;
    std::string problem_name;
    std::string problem_digest; // fnv1a64 of the problem file bytes
    std::string verdict;        // one-line outcome, consistent with exit_code
    int exit_code = 0;
    uint64_t seed = 0;
    double elapsed_seconds = 0;
    std::string version = kToolVersion;
    nlohmann::json payload = nlohmann::json::object(); // margins, witnesses, history, paths

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["command"] = command;
        j["problem"] = problem_name;
        j["digest"] = problem_digest;
        j["verdict"] = verdict;
        j["exit_code"] = exit_code;
        j["seed"] = seed;
        j["elapsed_seconds"] = elapsed_seconds;
        j["version"] = version;
        j["payload"] = payload;
        return j;
    }

    std::string text() const {
        std::ostringstream out;
        out << "command: " << command << "\n";
        out << "problem: " << problem_name << "\n";
        out << "digest: " << problem_digest << "\n";
        out << "verdict: " << verdict << "\n";
        out << "exit: " << exit_code << "\n";
        out << "seed: " << seed << "\n";
        out << "elapsed: " << elapsed_seconds << "s\n";
        out << "version: " << version << "\n";
        if (!payload.empty()) out << "payload: " << payload.dump() << "\n";
        return out.str();
    }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw FormatError("cannot write '" + path + "'");
        out << to_json().dump(2) << "\n";
    }
};

} // namespace ccert
