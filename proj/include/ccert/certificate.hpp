#pragma once

// Certificates are linear combinations of user-chosen basis expressions:
// barriers B(x) over one state argument, closures T(x, y) over two. A closure
// for an automaton-product check is piecewise: one coefficient vector per
// automaton state pair (i, j), usually over a shared basis. Templates are the
// same shape with the coefficients left free inside a bounded box.
//
// Basis variables follow the convention x1..xn for the first argument and
// y1..yn for the second; ind(R) inside a basis always tests the FIRST
// argument against region R. Checkers instantiate basis terms at different
// argument blocks (or through the dynamics), which is what instantiate_terms
// and merge_terms below are for.

#include <cmath>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ccert/errors.hpp"
#include "ccert/expr.hpp"

namespace ccert {

enum class CertKind { Barrier, SafetyClosure, PersistenceClosure, LtlClosure };

inline const char* to_string(CertKind k) {
    switch (k) {
    case CertKind::Barrier: return "barrier";
    case CertKind::SafetyClosure: return "safety-cc";
    case CertKind::PersistenceClosure: return "persistence-cc";
    case CertKind::LtlClosure: return "ltl-cc";
    }
    return "?";
}

inline CertKind parse_cert_kind(const std::string& s) {
    if (s == "barrier") return CertKind::Barrier;
    if (s == "safety-cc") return CertKind::SafetyClosure;
    if (s == "persistence-cc") return CertKind::PersistenceClosure;
    if (s == "ltl-cc") return CertKind::LtlClosure;
    throw FormatError("unknown certificate kind '" + s + "'");
}

inline int cert_arity(CertKind k) { return k == CertKind::Barrier ? 1 : 2; }

namespace detail {

inline std::vector<Expr> parse_basis(const std::vector<std::string>& texts, int dim, int arity) {
    std::vector<std::string> vars = make_var_names(dim, arity);
    std::vector<Expr> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(parse_expr(t, vars));
    if (out.empty()) throw FormatError("certificate basis is empty");
    return out;
}

} // namespace detail

struct Certificate {
    CertKind kind = CertKind::SafetyClosure;
    int dimension = 0;
    std::vector<std::string> basis_text;
    std::vector<Expr> basis;
    std::vector<double> coeffs; // flat certificates
    bool piecewise = false;
    std::map<std::pair<int, int>, std::vector<double>> pieces;
    std::map<std::pair<int, int>, std::vector<Expr>> piece_basis_override;
    std::map<std::pair<int, int>, std::vector<std::string>> piece_basis_text;
    double xi = 1.0;
    double tau1 = 1.0, tau2 = 0.0, tau3 = 0.0;

    int arity() const { return cert_arity(kind); }

    const std::vector<Expr>& piece_basis(int i, int j) const {
        auto it = piece_basis_override.find({i, j});
        return it == piece_basis_override.end() ? basis : it->second;
    }

    const std::vector<double>& piece(int i, int j) const {
        auto it = pieces.find({i, j});
        if (it == pieces.end()) throw MissingPiece(i, j);
        return it->second;
    }

    void validate() const {
        if (dimension < 1) throw FormatError("certificate needs dimension >= 1");
        auto check_coeffs = [&](const std::vector<double>& c, const std::vector<Expr>& b) {
            if (c.size() != b.size())
                throw FormatError("certificate has " + std::to_string(c.size()) +
                                  " coefficients for " + std::to_string(b.size()) +
                                  " basis terms");
            for (double v : c)
                if (!std::isfinite(v)) throw FormatError("certificate coefficient is not finite");
        };
        if (piecewise) {
            if (pieces.empty()) throw FormatError("piecewise certificate has no pieces");
            for (const auto& [key, c] : pieces)
                check_coeffs(c, piece_basis(key.first, key.second));
        } else {
            check_coeffs(coeffs, basis);
        }
        if (kind != CertKind::Barrier && !(xi > 0))
            throw FormatError("closure certificate needs xi > 0");
        if (tau1 < 0 || tau2 < 0 || tau3 < 0)
            throw FormatError("tau parameters must be nonnegative");
        int max_var = 0;
        auto scan = [&](const std::vector<Expr>& b) {
            for (const auto& e : b) max_var = std::max(max_var, e.max_var_index());
        };
        scan(basis);
        for (const auto& [key, b] : piece_basis_override) scan(b);
        if (max_var >= arity() * dimension)
            throw ArityMismatch("basis references variables beyond " +
                                std::to_string(arity() * dimension) + " slots");
    }

    // Pointwise evaluation of a flat certificate on stacked arguments
    // (x for barriers, x followed by y for closures).
    double eval(std::span<const double> stacked, const RegionResolver* rr = nullptr) const {
        if (piecewise) throw KindMismatch("piecewise certificate needs a state pair to evaluate");
        double v = 0;
        for (size_t m = 0; m < basis.size(); ++m)
            if (coeffs[m] != 0) v += coeffs[m] * basis[m].eval_point(stacked, rr);
        return v;
    }

    double eval_piece(int i, int j, std::span<const double> stacked,
                      const RegionResolver* rr = nullptr) const {
        const auto& c = piece(i, j);
        const auto& b = piece_basis(i, j);
        double v = 0;
        for (size_t m = 0; m < b.size(); ++m)
            if (c[m] != 0) v += c[m] * b[m].eval_point(stacked, rr);
        return v;
    }
};

struct CertificateTemplate {
    CertKind kind = CertKind::SafetyClosure;
    std::vector<std::string> basis_text;
    bool piecewise = false;
    std::map<std::pair<int, int>, std::vector<std::string>> piece_basis_text;
    double coeff_lo = -10.0, coeff_hi = 10.0;

    int arity() const { return cert_arity(kind); }

    // Parse the basis for a concrete state dimension; throws on empty basis.
    std::vector<Expr> bind(int dim) const {
        return detail::parse_basis(basis_text, dim, arity());
    }
};

// ---------------------------------------------------------------------------
// Instantiation: rewriting basis terms onto claim-level argument blocks.

// One certificate argument inside a claim: either a plain variable block
// starting at `offset`, or a vector of expressions over the ambient claim
// variables (e.g. the dynamics applied to another block). `scope` labels the
// argument for indicator naming and must be distinct between distinct
// argument bindings within one claim.
struct CertArg {
    int offset = 0;
    std::vector<Expr> map;
    std::string scope;

    bool plain() const { return map.empty(); }

    static CertArg block(int offset) {
        CertArg a;
        a.offset = offset;
        a.scope = std::to_string(offset);
        return a;
    }
    static CertArg composed(std::vector<Expr> map, std::string scope) {
        CertArg a;
        a.map = std::move(map);
        a.scope = std::move(scope);
        return a;
    }
};

// How an indicator in an instantiated term should be resolved by the claim's
// region table: the base region id, the scoped name the expression now uses,
// and either a block offset or a coordinate map.
struct IndBinding {
    std::string base;
    std::string scoped;
    int offset = 0;
    std::vector<Expr> map;

    bool operator<(const IndBinding& o) const { return scoped < o.scoped; }
};

struct WeightedTerm {
    double coeff = 0;
    Expr term = Expr::constant(1);
};

namespace detail {

inline Expr remap_term(const Expr& e, int dim, const CertArg& ax, const CertArg* ay,
                       std::vector<IndBinding>& inds) {
    switch (e.kind()) {
    case ExprKind::Const: return e;
    case ExprKind::Var: {
        int i = e.var_index();
        if (i < dim) return ax.plain() ? Expr::var(ax.offset + i, e.name()) : ax.map[i];
        if (!ay) throw ArityMismatch("basis term uses a second argument the certificate lacks");
        int j = i - dim;
        if (j >= dim) throw ArityMismatch("basis term variable out of range");
        return ay->plain() ? Expr::var(ay->offset + j, e.name()) : ay->map[j];
    }
    case ExprKind::Ind: {
        std::string scoped = e.name() + "@" + ax.scope;
        IndBinding b;
        b.base = e.name();
        b.scoped = scoped;
        b.offset = ax.offset;
        b.map = ax.map;
        inds.push_back(std::move(b));
        return Expr::indicator(scoped);
    }
    case ExprKind::Add:
        return remap_term(e.left(), dim, ax, ay, inds) + remap_term(e.right(), dim, ax, ay, inds);
    case ExprKind::Sub:
        return remap_term(e.left(), dim, ax, ay, inds) - remap_term(e.right(), dim, ax, ay, inds);
    case ExprKind::Mul:
        return remap_term(e.left(), dim, ax, ay, inds) * remap_term(e.right(), dim, ax, ay, inds);
    case ExprKind::Neg: return -remap_term(e.left(), dim, ax, ay, inds);
    case ExprKind::Pow: return Expr::pow(remap_term(e.left(), dim, ax, ay, inds), e.exponent());
    case ExprKind::Sin: return Expr::sin(remap_term(e.left(), dim, ax, ay, inds));
    case ExprKind::Cos: return Expr::cos(remap_term(e.left(), dim, ax, ay, inds));
    case ExprKind::Max:
        return Expr::max(remap_term(e.left(), dim, ax, ay, inds),
                         remap_term(e.right(), dim, ax, ay, inds));
    case ExprKind::Min:
        return Expr::min(remap_term(e.left(), dim, ax, ay, inds),
                         remap_term(e.right(), dim, ax, ay, inds));
    }
    throw Error("unreachable expression kind");
}

} // namespace detail

// Instantiate Σ coeff_m · basis_m(ax, ay) as a list of weighted terms over the
// ambient claim variables. Zero coefficients are dropped; indicator bindings
// are appended to `inds` (the caller registers them in its region table).
inline std::vector<WeightedTerm> instantiate_terms(const std::vector<Expr>& basis,
                                                   std::span<const double> coeffs, int dim,
                                                   const CertArg& ax, const CertArg* ay,
                                                   std::vector<IndBinding>& inds) {
    if (coeffs.size() != basis.size())
        throw DimensionMismatch("coefficient/basis size mismatch");
    std::vector<WeightedTerm> out;
    for (size_t m = 0; m < basis.size(); ++m) {
        if (coeffs[m] == 0) continue;
        WeightedTerm wt;
        wt.coeff = coeffs[m];
        wt.term = detail::remap_term(basis[m], dim, ax, ay, inds);
        out.push_back(std::move(wt));
    }
    return out;
}

namespace detail {

// Distribute a weighted term over top-level sums, differences, negations, and
// constant factors. Splitting `1·(x+1)` into `1·x` plus a constant lets the
// `x` summand cancel against a `−1·x` from another term.
inline void flatten_term(double coeff, const Expr& e, std::vector<WeightedTerm>& out,
                         double& constant) {
    if (coeff == 0) return;
    switch (e.kind()) {
    case ExprKind::Const: constant += coeff * e.const_value(); return;
    case ExprKind::Add:
        flatten_term(coeff, e.left(), out, constant);
        flatten_term(coeff, e.right(), out, constant);
        return;
    case ExprKind::Sub:
        flatten_term(coeff, e.left(), out, constant);
        flatten_term(-coeff, e.right(), out, constant);
        return;
    case ExprKind::Neg: flatten_term(-coeff, e.left(), out, constant); return;
    case ExprKind::Mul:
        if (e.left().kind() == ExprKind::Const) {
            flatten_term(coeff * e.left().const_value(), e.right(), out, constant);
            return;
        }
        if (e.right().kind() == ExprKind::Const) {
            flatten_term(coeff * e.right().const_value(), e.left(), out, constant);
            return;
        }
        break;
    default: break;
    }
    out.push_back(WeightedTerm{coeff, e});
}

} // namespace detail

// Sum weighted terms into a single expression, first distributing each term
// over sums and constant factors and then merging structurally equal summands
// by adding their coefficients. The merge matters: a difference like
// T(x,y) − τ·T(f(x),y) shares all terms that do not read x, and an affine
// step like f(x) = x + 1 shares the bare `x` with the certificate's own
// terms. Keeping such summands separate would make interval bounds needlessly
// loose (classic dependency blowup), turning tight certificates unverifiable.
inline Expr merge_terms(std::vector<WeightedTerm> terms) {
    std::vector<WeightedTerm> flat;
    double constant = 0;
    for (auto& wt : terms) detail::flatten_term(wt.coeff, wt.term, flat, constant);
    std::vector<WeightedTerm> merged;
    for (auto& wt : flat) {
        bool joined = false;
        for (auto& m : merged)
            if (m.term.same_as(wt.term)) {
                m.coeff += wt.coeff;
                joined = true;
                break;
            }
        if (!joined) merged.push_back(std::move(wt));
    }
    Expr sum = Expr::constant(constant);
    for (const auto& m : merged) {
        if (m.coeff == 0) continue;
        Expr piece = m.coeff == 1 ? m.term : Expr::constant(m.coeff) * m.term;
        sum = sum.kind() == ExprKind::Const && sum.const_value() == 0 ? piece : sum + piece;
    }
    return sum;
}

inline void append_terms(std::vector<WeightedTerm>& into, std::vector<WeightedTerm> more,
                         double scale = 1.0) {
    for (auto& wt : more) {
        wt.coeff *= scale;
        if (wt.coeff != 0) into.push_back(std::move(wt));
    }
}

// ---------------------------------------------------------------------------
// Case-defined closure obtained from a barrier: value 0 unless x is on the
// barrier's nonpositive side and y on its positive side, in which case −γ.
// Evaluated by sign tests; not representable as a polynomial template.
struct BarrierClosure {
    Expr barrier = Expr::constant(0);
    double gamma = 1.0;
    double xi = 1.0;

    double value(std::span<const double> x, std::span<const double> y,
                 const RegionResolver* rr = nullptr) const {
        double bx = barrier.eval_point(x, rr);
        double by = barrier.eval_point(y, rr);
        return (bx > 0 || by <= 0) ? 0.0 : -gamma;
    }
};

inline BarrierClosure cc_from_barrier(const Certificate& b, double gamma) {
    if (b.kind != CertKind::Barrier) throw KindMismatch("cc_from_barrier needs a barrier");
    if (!(gamma > 0)) throw FormatError("cc_from_barrier needs gamma > 0");
    if (b.piecewise) throw KindMismatch("cc_from_barrier needs a flat barrier");
    std::vector<WeightedTerm> terms;
    for (size_t m = 0; m < b.basis.size(); ++m)
        if (b.coeffs[m] != 0) terms.push_back({b.coeffs[m], b.basis[m]});
    BarrierClosure c;
    c.barrier = merge_terms(std::move(terms));
    c.gamma = gamma;
    c.xi = gamma;
    return c;
}

// ---------------------------------------------------------------------------
// JSON serialization.

namespace detail {

inline std::pair<int, int> parse_pair_key(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2)
        throw FormatError("piece \"pair\" must be [i, j]");
    return {j[0].get<int>(), j[1].get<int>()};
}

} // namespace detail

inline Certificate parse_certificate(const nlohmann::json& j) {
    Certificate c;
    if (!j.contains("kind")) throw FormatError("certificate is missing \"kind\"");
    c.kind = parse_cert_kind(j["kind"].get<std::string>());
    if (!j.contains("dimension")) throw FormatError("certificate is missing \"dimension\"");
    c.dimension = j["dimension"].get<int>();
    if (!j.contains("basis")) throw FormatError("certificate is missing \"basis\"");
    for (const auto& t : j["basis"]) c.basis_text.push_back(t.get<std::string>());
    c.basis = detail::parse_basis(c.basis_text, c.dimension, c.arity());

    if (j.contains("pieces")) {
        c.piecewise = true;
        for (const auto& pj : j["pieces"]) {
            auto key = detail::parse_pair_key(pj.at("pair"));
            std::vector<double> cv;
            for (const auto& v : pj.at("coefficients")) cv.push_back(v.get<double>());
            if (!c.pieces.emplace(key, std::move(cv)).second)
                throw FormatError("duplicate certificate piece (" + std::to_string(key.first) +
                                  ", " + std::to_string(key.second) + ")");
            if (pj.contains("basis")) {
                std::vector<std::string> bt;
                for (const auto& t : pj["basis"]) bt.push_back(t.get<std::string>());
                c.piece_basis_override[key] = detail::parse_basis(bt, c.dimension, c.arity());
                c.piece_basis_text[key] = std::move(bt);
            }
        }
    } else {
        if (!j.contains("coefficients"))
            throw FormatError("certificate is missing \"coefficients\"");
        for (const auto& v : j["coefficients"]) c.coeffs.push_back(v.get<double>());
    }

    c.xi = j.value("xi", c.kind == CertKind::Barrier ? 0.0 : 1.0);
    c.tau1 = j.value("tau1", 1.0);
    c.tau2 = j.value("tau2", 0.0);
    c.tau3 = j.value("tau3", 0.0);
    c.validate();
    return c;
}

inline nlohmann::json to_json(const Certificate& c) {
    nlohmann::json j;
    j["kind"] = to_string(c.kind);
    j["dimension"] = c.dimension;
    j["basis"] = c.basis_text;
    if (c.piecewise) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [key, cv] : c.pieces) {
            nlohmann::json pj;
            pj["pair"] = {key.first, key.second};
            pj["coefficients"] = cv;
            auto bt = c.piece_basis_text.find(key);
            if (bt != c.piece_basis_text.end()) pj["basis"] = bt->second;
            arr.push_back(std::move(pj));
        }
        j["pieces"] = std::move(arr);
    } else {
        j["coefficients"] = c.coeffs;
    }
    if (c.kind != CertKind::Barrier) j["xi"] = c.xi;
    j["tau1"] = c.tau1;
    j["tau2"] = c.tau2;
    j["tau3"] = c.tau3;
    return j;
}

inline Certificate load_certificate(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open certificate file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("certificate file is not valid JSON: " + std::string(e.what()));
    }
    return parse_certificate(j);
}

inline void save_certificate(const Certificate& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write certificate file: " + path);
    out << to_json(c).dump(2) << "\n";
}

inline CertificateTemplate parse_template(const nlohmann::json& j) {
    CertificateTemplate t;
    if (!j.contains("kind")) throw FormatError("template is missing \"kind\"");
    t.kind = parse_cert_kind(j["kind"].get<std::string>());
    if (!j.contains("basis")) throw FormatError("template is missing \"basis\"");
    for (const auto& b : j["basis"]) t.basis_text.push_back(b.get<std::string>());
    if (t.basis_text.empty()) throw FormatError("template basis is empty");
    t.piecewise = j.value("piecewise", false);
    if (j.contains("pieces")) {
        t.piecewise = true;
        for (const auto& pj : j["pieces"]) {
            auto key = detail::parse_pair_key(pj.at("pair"));
            std::vector<std::string> bt;
            for (const auto& b : pj.at("basis")) bt.push_back(b.get<std::string>());
            t.piece_basis_text[key] = std::move(bt);
        }
    }
    double bound = j.value("coeff_bound", 10.0);
    t.coeff_lo = j.value("coeff_lo", -bound);
    t.coeff_hi = j.value("coeff_hi", bound);
    if (!(t.coeff_lo < t.coeff_hi)) throw FormatError("template coefficient box is empty");
    return t;
}

inline CertificateTemplate load_template(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open template file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("template file is not valid JSON: " + std::string(e.what()));
    }
    return parse_template(j);
}

} // namespace ccert
