#pragma once

// Expression trees for dynamics, region constraints and certificate templates.
//
// Grammar (see docs/grammar.md for the EBNF):
//   expr   := term (('+'|'-') term)*
//   term   := unary ('*' unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?            -- right-associative, integer >= 0
//   atom   := NUMBER | IDENT | IDENT '(' args ')' | '(' expr ')'
// Functions: sin/1, cos/1, max/2, min/2, ind/1 (argument: a region name).
// Anything outside the grammar is rejected with SyntaxError; identifiers that
// are not declared variables (or known functions) raise UnknownVariable.
//
// Nodes are immutable and shared; copying an Expr is a pointer copy, so
// substitution and template assembly can reuse subtrees freely.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ccert/errors.hpp"
#include "ccert/interval.hpp"

namespace ccert {

enum class ExprKind : uint8_t {
    Const, Var, Add, Sub, Mul, Pow, Neg, Sin, Cos, Max, Min, Ind,
};

// Three-valued region membership of a box, used by indicator evaluation and
// by the falsifier's split policy.
enum class BoxStatus { Inside, Outside, Straddles };

struct RegionResolver {
    virtual ~RegionResolver() = default;
    virtual bool contains_point(const std::string& region,
                                std::span<const double> pt) const = 0;
    virtual BoxStatus box_status(const std::string& region, const Box& box) const = 0;
    // Bounding information so split policies can cut along region faces.
    virtual std::vector<Box> region_boxes(const std::string& region) const = 0;
    // Variable indices a region membership test actually reads. Indicator
    // nodes carry no Var children, so the falsifier asks the resolver which
    // dimensions matter when it picks a split axis.
    virtual std::vector<int> region_dims(const std::string& region) const {
        (void)region;
        return {};
    }
};

class Expr;

namespace detail {
struct ExprNode {
    ExprKind kind;
    double value = 0.0;        // Const
    int var = -1;              // Var: index into the variable list
    std::string name;          // Var: display name; Ind: region name
    int exponent = 0;          // Pow
    std::shared_ptr<const ExprNode> a, b;
};
} // namespace detail

class Expr {
public:
    using NodePtr = std::shared_ptr<const detail::ExprNode>;

    Expr() : node_(make_const_node(0.0)) {}
    explicit Expr(NodePtr n) : node_(std::move(n)) {}

    static Expr constant(double v) { return Expr(make_const_node(v)); }
    static Expr var(int index, std::string name) {
        auto n = std::make_shared<detail::ExprNode>();
        n->kind = ExprKind::Var;
        n->var = index;
        n->name = std::move(name);
        return Expr(std::move(n));
    }
    static Expr indicator(std::string region) {
        auto n = std::make_shared<detail::ExprNode>();
        n->kind = ExprKind::Ind;
        n->name = std::move(region);
        return Expr(std::move(n));
    }

    ExprKind kind() const { return node_->kind; }
    double const_value() const { return node_->value; }
    int var_index() const { return node_->var; }
    const std::string& name() const { return node_->name; }
    int exponent() const { return node_->exponent; }
    Expr left() const { return Expr(node_->a); }
    Expr right() const { return Expr(node_->b); }
    const NodePtr& node() const { return node_; }

    bool is_const(double v) const {
        return node_->kind == ExprKind::Const && node_->value == v;
    }

    // ---- construction with constant folding -------------------------------
    // Folding is limited to: both-children-constant collapse, and the
    // annihilator/identity rules for 0 and 1. No other rewriting happens.

    friend Expr operator+(const Expr& a, const Expr& b) {
        if (a.kind() == ExprKind::Const && b.kind() == ExprKind::Const)
            return constant(a.const_value() + b.const_value());
        if (a.is_const(0.0)) return b;
        if (b.is_const(0.0)) return a;
        return binary(ExprKind::Add, a, b);
    }
    friend Expr operator-(const Expr& a, const Expr& b) {
        if (a.kind() == ExprKind::Const && b.kind() == ExprKind::Const)
            return constant(a.const_value() - b.const_value());
        if (b.is_const(0.0)) return a;
        return binary(ExprKind::Sub, a, b);
    }
    friend Expr operator*(const Expr& a, const Expr& b) {
        if (a.kind() == ExprKind::Const && b.kind() == ExprKind::Const)
            return constant(a.const_value() * b.const_value());
        if (a.is_const(0.0) || b.is_const(0.0)) return constant(0.0);
        if (a.is_const(1.0)) return b;
        if (b.is_const(1.0)) return a;
        return binary(ExprKind::Mul, a, b);
    }
    friend Expr operator-(const Expr& a) {
        if (a.kind() == ExprKind::Const) return constant(-a.const_value());
        auto n = std::make_shared<detail::ExprNode>();
        n->kind = ExprKind::Neg;
        n->a = a.node_;
        return Expr(std::move(n));
    }

    static Expr pow(const Expr& a, int e) {
        if (e < 0) throw NegativeExponent("exponent must be a nonnegative integer");
        if (e == 0) return constant(1.0);
        if (e == 1) return a;
        if (a.kind() == ExprKind::Const) return constant(std::pow(a.const_value(), e));
        auto n = std::make_shared<detail::ExprNode>();
        n->kind = ExprKind::Pow;
        n->a = a.node_;
        n->exponent = e;
        return Expr(std::move(n));
    }
    static Expr sin(const Expr& a) {
        if (a.kind() == ExprKind::Const) return constant(std::sin(a.const_value()));
        return unary(ExprKind::Sin, a);
    }
    static Expr cos(const Expr& a) {
        if (a.kind() == ExprKind::Const) return constant(std::cos(a.const_value()));
        return unary(ExprKind::Cos, a);
    }
    static Expr max(const Expr& a, const Expr& b) {
        if (a.kind() == ExprKind::Const && b.kind() == ExprKind::Const)
            return constant(std::max(a.const_value(), b.const_value()));
        return binary(ExprKind::Max, a, b);
    }
    static Expr min(const Expr& a, const Expr& b) {
        if (a.kind() == ExprKind::Const && b.kind() == ExprKind::Const)
            return constant(std::min(a.const_value(), b.const_value()));
        return binary(ExprKind::Min, a, b);
    }

    // ---- evaluation --------------------------------------------------------

    double eval_point(std::span<const double> vals,
                      const RegionResolver* regions = nullptr) const {
        return eval_point_rec(node_.get(), vals, regions);
    }

    Interval eval_box(const Box& box, const RegionResolver* regions = nullptr) const {
        return eval_box_rec(node_.get(), box, regions);
    }

    // ---- analysis ----------------------------------------------------------

    int max_var_index() const { return max_var_rec(node_.get()); }

    void collect_vars(std::vector<bool>& used) const { collect_vars_rec(node_.get(), used); }

    bool uses_var_at_or_above(int first) const {
        std::vector<bool> used;
        collect_vars(used);
        for (size_t i = first; i < used.size(); ++i)
            if (used[i]) return true;
        return false;
    }

    void collect_regions(std::vector<std::string>& out) const {
        collect_regions_rec(node_.get(), out);
    }

    // Structural equality (same shape, same constants, same names).
    bool same_as(const Expr& o) const { return same_rec(node_.get(), o.node_.get()); }

    // Replace every variable i by map[i] (map entries may be arbitrary
    // expressions). Variables beyond the map keep their index.
    Expr substitute(std::span<const Expr> map) const {
        return Expr(subst_rec(node_.get(), map));
    }

    // Shift every variable index by `delta` (renaming preserved names is the
    // caller's business); used to move a template's y-block onto z-variables.
    Expr shift_vars(int delta, const std::vector<std::string>& names) const {
        return Expr(shift_rec(node_.get(), delta, names));
    }

    std::string to_string() const {
        std::ostringstream os;
        print_rec(node_.get(), os, 0);
        return os.str();
    }

private:
    NodePtr node_;

    static NodePtr make_const_node(double v) {
        auto n = std::make_shared<detail::ExprNode>();
        n->kind = ExprKind::Const;
        n->value = v;
        return n;
    }
    static Expr unary(ExprKind k, const Expr& a) {
        auto n = std::make_shared<detail::ExprNode>();
        n->kind = k;
        n->a = a.node_;
        return Expr(std::move(n));
    }
    static Expr binary(ExprKind k, const Expr& a, const Expr& b) {
        auto n = std::make_shared<detail::ExprNode>();
        n->kind = k;
        n->a = a.node_;
        n->b = b.node_;
        return Expr(std::move(n));
    }

    static double eval_point_rec(const detail::ExprNode* n, std::span<const double> vals,
                                 const RegionResolver* regions) {
        switch (n->kind) {
        case ExprKind::Const: return n->value;
        case ExprKind::Var:
            if (n->var < 0 || static_cast<size_t>(n->var) >= vals.size())
                throw DimensionMismatch("point has no value for variable '" + n->name + "'");
            return vals[n->var];
        case ExprKind::Add: return eval_point_rec(n->a.get(), vals, regions) +
                                   eval_point_rec(n->b.get(), vals, regions);
        case ExprKind::Sub: return eval_point_rec(n->a.get(), vals, regions) -
                                   eval_point_rec(n->b.get(), vals, regions);
        case ExprKind::Mul: return eval_point_rec(n->a.get(), vals, regions) *
                                   eval_point_rec(n->b.get(), vals, regions);
        case ExprKind::Pow: return std::pow(eval_point_rec(n->a.get(), vals, regions), n->exponent);
        case ExprKind::Neg: return -eval_point_rec(n->a.get(), vals, regions);
        case ExprKind::Sin: return std::sin(eval_point_rec(n->a.get(), vals, regions));
        case ExprKind::Cos: return std::cos(eval_point_rec(n->a.get(), vals, regions));
        case ExprKind::Max: return std::max(eval_point_rec(n->a.get(), vals, regions),
                                            eval_point_rec(n->b.get(), vals, regions));
        case ExprKind::Min: return std::min(eval_point_rec(n->a.get(), vals, regions),
                                            eval_point_rec(n->b.get(), vals, regions));
        case ExprKind::Ind:
            if (!regions) throw UnknownRegion(n->name);
            return regions->contains_point(n->name, vals) ? 1.0 : 0.0;
        }
        throw Error("corrupt expression node");
    }

    static Interval eval_box_rec(const detail::ExprNode* n, const Box& box,
                                 const RegionResolver* regions) {
        switch (n->kind) {
        case ExprKind::Const: return Interval(n->value);
        case ExprKind::Var:
            if (n->var < 0 || static_cast<size_t>(n->var) >= box.size())
                throw DimensionMismatch("box has no interval for variable '" + n->name + "'");
            return box[n->var];
        case ExprKind::Add: return eval_box_rec(n->a.get(), box, regions) +
                                   eval_box_rec(n->b.get(), box, regions);
        case ExprKind::Sub: return eval_box_rec(n->a.get(), box, regions) -
                                   eval_box_rec(n->b.get(), box, regions);
        case ExprKind::Mul: return eval_box_rec(n->a.get(), box, regions) *
                                   eval_box_rec(n->b.get(), box, regions);
        case ExprKind::Pow: return pow_n(eval_box_rec(n->a.get(), box, regions), n->exponent);
        case ExprKind::Neg: return -eval_box_rec(n->a.get(), box, regions);
        case ExprKind::Sin: return sin_i(eval_box_rec(n->a.get(), box, regions));
        case ExprKind::Cos: return cos_i(eval_box_rec(n->a.get(), box, regions));
        case ExprKind::Max: return max_i(eval_box_rec(n->a.get(), box, regions),
                                         eval_box_rec(n->b.get(), box, regions));
        case ExprKind::Min: return min_i(eval_box_rec(n->a.get(), box, regions),
                                         eval_box_rec(n->b.get(), box, regions));
        case ExprKind::Ind: {
            if (!regions) throw UnknownRegion(n->name);
            switch (regions->box_status(n->name, box)) {
            case BoxStatus::Inside:    return Interval(1.0);
            case BoxStatus::Outside:   return Interval(0.0);
            case BoxStatus::Straddles: return Interval(0.0, 1.0);
            }
            throw Error("corrupt box status");
        }
        }
        throw Error("corrupt expression node");
    }

    static int max_var_rec(const detail::ExprNode* n) {
        int m = n->kind == ExprKind::Var ? n->var : -1;
        if (n->a) m = std::max(m, max_var_rec(n->a.get()));
        if (n->b) m = std::max(m, max_var_rec(n->b.get()));
        return m;
    }

    static void collect_vars_rec(const detail::ExprNode* n, std::vector<bool>& used) {
        if (n->kind == ExprKind::Var) {
            if (used.size() <= static_cast<size_t>(n->var)) used.resize(n->var + 1, false);
            used[n->var] = true;
        }
        if (n->a) collect_vars_rec(n->a.get(), used);
        if (n->b) collect_vars_rec(n->b.get(), used);
    }

    static void collect_regions_rec(const detail::ExprNode* n, std::vector<std::string>& out) {
        if (n->kind == ExprKind::Ind) out.push_back(n->name);
        if (n->a) collect_regions_rec(n->a.get(), out);
        if (n->b) collect_regions_rec(n->b.get(), out);
    }

    static bool same_rec(const detail::ExprNode* x, const detail::ExprNode* y) {
        if (x == y) return true;
        if (x->kind != y->kind || x->value != y->value || x->var != y->var ||
            x->exponent != y->exponent || x->name != y->name)
            return false;
        if (!!x->a != !!y->a || !!x->b != !!y->b) return false;
        if (x->a && !same_rec(x->a.get(), y->a.get())) return false;
        if (x->b && !same_rec(x->b.get(), y->b.get())) return false;
        return true;
    }

    static NodePtr subst_rec(const detail::ExprNode* n, std::span<const Expr> map) {
        if (n->kind == ExprKind::Var && n->var >= 0 &&
            static_cast<size_t>(n->var) < map.size())
            return map[n->var].node();
        if (!n->a && !n->b)
            return std::make_shared<detail::ExprNode>(*n);
        auto copy = std::make_shared<detail::ExprNode>(*n);
        if (n->a) copy->a = subst_rec(n->a.get(), map);
        if (n->b) copy->b = subst_rec(n->b.get(), map);
        return copy;
    }

    static NodePtr shift_rec(const detail::ExprNode* n, int delta,
                             const std::vector<std::string>& names) {
        auto copy = std::make_shared<detail::ExprNode>(*n);
        if (n->kind == ExprKind::Var) {
            copy->var = n->var + delta;
            if (copy->var >= 0 && static_cast<size_t>(copy->var) < names.size())
                copy->name = names[copy->var];
        }
        if (n->a) copy->a = shift_rec(n->a.get(), delta, names);
        if (n->b) copy->b = shift_rec(n->b.get(), delta, names);
        return copy;
    }

    // Printing with minimal parentheses; binding strength mirrors the parser.
    // Levels: 0 add/sub, 1 mul, 2 unary minus, 3 pow/atom.
    static void print_rec(const detail::ExprNode* n, std::ostream& os, int parent) {
        auto paren = [&](int level, auto&& body) {
            if (level < parent) { os << '('; body(); os << ')'; }
            else body();
        };
        switch (n->kind) {
        case ExprKind::Const: {
            if (n->value < 0) {
                paren(2, [&] {
                    std::ostringstream tmp;
                    tmp.precision(17);
                    tmp << n->value;
                    os << tmp.str();
                });
            } else {
                std::ostringstream tmp;
                tmp.precision(17);
                tmp << n->value;
                os << tmp.str();
            }
            return;
        }
        case ExprKind::Var: os << n->name; return;
        case ExprKind::Add:
            paren(0, [&] { print_rec(n->a.get(), os, 0); os << " + "; print_rec(n->b.get(), os, 1); });
            return;
        case ExprKind::Sub:
            paren(0, [&] { print_rec(n->a.get(), os, 0); os << " - "; print_rec(n->b.get(), os, 1); });
            return;
        case ExprKind::Mul:
            paren(1, [&] { print_rec(n->a.get(), os, 1); os << "*"; print_rec(n->b.get(), os, 2); });
            return;
        case ExprKind::Neg:
            paren(2, [&] { os << "-"; print_rec(n->a.get(), os, 3); });
            return;
        case ExprKind::Pow:
            paren(3, [&] { print_rec(n->a.get(), os, 4); os << "^" << n->exponent; });
            return;
        case ExprKind::Sin:
            os << "sin("; print_rec(n->a.get(), os, 0); os << ")"; return;
        case ExprKind::Cos:
            os << "cos("; print_rec(n->a.get(), os, 0); os << ")"; return;
        case ExprKind::Max:
            os << "max("; print_rec(n->a.get(), os, 0); os << ", ";
            print_rec(n->b.get(), os, 0); os << ")"; return;
        case ExprKind::Min:
            os << "min("; print_rec(n->a.get(), os, 0); os << ", ";
            print_rec(n->b.get(), os, 0); os << ")"; return;
        case ExprKind::Ind:
            os << "ind(" << n->name << ")"; return;
        }
    }
};

// ---------------------------------------------------------------------------
// Parser

namespace detail {

class Parser {
public:
    Parser(std::string_view text, std::span<const std::string> vars)
        : text_(text), vars_(vars) {}

    Expr parse() {
        Expr e = parse_expr();
        skip_ws();
        if (pos_ != text_.size())
            throw SyntaxError("trailing input after expression", pos_);
        return e;
    }

private:
    std::string_view text_;
    std::span<const std::string> vars_;
    size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) { ++pos_; return true; }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    Expr parse_expr() {
        Expr e = parse_term();
        for (;;) {
            if (eat('+')) e = e + parse_term();
            else if (eat('-')) e = e - parse_term();
            else return e;
        }
    }

    Expr parse_term() {
        Expr e = parse_unary();
        while (eat('*')) e = e * parse_unary();
        return e;
    }

    Expr parse_unary() {
        if (eat('-')) return -parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        skip_ws();
        if (eat('^')) {
            // Exponent: optional '-' (rejected with a specific error) then an
            // integer literal. Right-associativity is moot since exponents are
            // literals, but nested '^' still parses naturally via parse_atom.
            skip_ws();
            size_t at = pos_;
            bool neg = eat('-');
            size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (pos_ == start) throw SyntaxError("expected integer exponent after '^'", at);
            if (pos_ < text_.size() && text_[pos_] == '.')
                throw SyntaxError("exponent must be an integer", pos_);
            int e = std::stoi(std::string(text_.substr(start, pos_ - start)));
            if (neg) throw NegativeExponent("negative exponent at offset " + std::to_string(at));
            return Expr::pow(base, e);
        }
        return base;
    }

    Expr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError("unexpected end of input", pos_);
        char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        if (c == '(') {
            ++pos_;
            Expr e = parse_expr();
            if (!eat(')')) throw SyntaxError("expected ')'", pos_);
            return e;
        }
        throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
    }

    Expr parse_number() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        // Scientific suffix: e/E [+-] digits.
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            size_t mark = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                pos_ = mark; // not an exponent suffix after all (e.g. "2*e" would be ident)
            } else {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            }
        }
        std::string tok(text_.substr(start, pos_ - start));
        try {
            size_t used = 0;
            double v = std::stod(tok, &used);
            if (used != tok.size()) throw SyntaxError("malformed number '" + tok + "'", start);
            return Expr::constant(v);
        } catch (const std::invalid_argument&) {
            throw SyntaxError("malformed number '" + tok + "'", start);
        }
    }

    Expr parse_ident() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name(text_.substr(start, pos_ - start));
        if (peek() == '(') {
            if (name == "sin" || name == "cos") {
                eat('(');
                Expr a = parse_expr();
                if (!eat(')')) throw SyntaxError("expected ')'", pos_);
                return name == "sin" ? Expr::sin(a) : Expr::cos(a);
            }
            if (name == "max" || name == "min") {
                eat('(');
                Expr a = parse_expr();
                if (!eat(',')) throw SyntaxError("expected ',' in " + name + "()", pos_);
                Expr b = parse_expr();
                if (!eat(')')) throw SyntaxError("expected ')'", pos_);
                return name == "max" ? Expr::max(a, b) : Expr::min(a, b);
            }
            if (name == "ind") {
                eat('(');
                skip_ws();
                size_t rstart = pos_;
                while (pos_ < text_.size() &&
                       (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                    ++pos_;
                std::string region(text_.substr(rstart, pos_ - rstart));
                if (region.empty()) throw SyntaxError("expected region name in ind()", pos_);
                if (!eat(')')) throw SyntaxError("expected ')'", pos_);
                return Expr::indicator(region);
            }
            throw SyntaxError("unknown function '" + name + "'", start);
        }
        for (size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i] == name) return Expr::var(static_cast<int>(i), name);
        throw UnknownVariable(name);
    }
};

} // namespace detail

inline Expr parse_expr(std::string_view text, std::span<const std::string> vars) {
    return detail::Parser(text, vars).parse();
}

inline Expr parse_expr(std::string_view text, const std::vector<std::string>& vars) {
    return detail::Parser(text, std::span<const std::string>(vars)).parse();
}

// Standard variable lists: x1..xn, then optionally y1..yn, z1..zn.
inline std::vector<std::string> make_var_names(int dim, int blocks = 1) {
    static const char* prefix[3] = {"x", "y", "z"};
    std::vector<std::string> names;
    for (int b = 0; b < blocks; ++b)
        for (int i = 1; i <= dim; ++i)
            names.push_back(prefix[b] + std::to_string(i));
    return names;
}

} // namespace ccert
