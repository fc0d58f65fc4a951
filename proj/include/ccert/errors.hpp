#pragma once

// Error taxonomy. Everything user-triggerable derives from ccert::Error so the
// CLI can map "any Error" to the usage/IO exit code; the concrete types exist
// because tests and callers dispatch on them.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccert {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- expression layer ---

struct SyntaxError : Error {
    size_t position;
    SyntaxError(const std::string& what, size_t pos)
        : Error(what + " (at offset " + std::to_string(pos) + ")"), position(pos) {}
};

struct UnknownVariable : Error {
    std::string name;
    explicit UnknownVariable(const std::string& n)
        : Error("unknown variable '" + n + "'"), name(n) {}
};

struct UnknownRegion : Error {
    std::string name;
    explicit UnknownRegion(const std::string& n)
        : Error("unknown region '" + n + "'"), name(n) {}
};

struct NegativeExponent : Error {
    explicit NegativeExponent(const std::string& what) : Error(what) {}
};

// --- systems / problems ---

struct FormatError : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct PartitionViolation : Error {
    std::vector<double> witness;
    PartitionViolation(const std::string& what, std::vector<double> w)
        : Error(what), witness(std::move(w)) {}
};

struct EmptyRegion : Error {
    using Error::Error;
};

// --- automata ---

struct UnsupportedFeature : Error {
    using Error::Error;
};

struct NoLetterForState : Error {
    using Error::Error;
};

struct PathTooShort : Error {
    using Error::Error;
};

// --- certificates / checking ---

struct MissingPiece : Error {
    int i, j;
    MissingPiece(int i_, int j_)
        : Error("certificate has no piece for automaton state pair (" +
                std::to_string(i_) + ", " + std::to_string(j_) + ")"),
          i(i_), j(j_) {}
};

struct UnboundedTemplate : Error {
    using Error::Error;
};

struct KindMismatch : Error {
    using Error::Error;
};

struct ArityMismatch : Error {
    using Error::Error;
};

struct TemplateNotLinearInCoefficients : Error {
    using Error::Error;
};

// --- state-triplet baseline ---

struct EmptyLabelRegion : Error {
    using Error::Error;
};

struct PathExplosion : Error {
    using Error::Error;
};

struct UncutPath : Error {
    std::vector<int> path;
    explicit UncutPath(std::vector<int> p)
        : Error("no cut triplet on an accepting path"), path(std::move(p)) {}
};

// --- numerics ---

struct NumericalBreakdown : Error {
    using Error::Error;
};

} // namespace ccert
