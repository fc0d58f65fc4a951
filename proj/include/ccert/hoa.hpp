#pragma once

// Reader and writer for a strict subset of the HOA v1 automaton format:
// state-based Büchi acceptance ("Acceptance: 1 Inf(0)"), explicit edge labels
// built from !, &, |, parentheses, AP indices, and t/f. Aliases, transition
// acceptance marks, implicit labels, state labels, and unknown capitalized
// headers are rejected with UnsupportedFeature so callers never misread an
// automaton silently.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ccert/errors.hpp"
#include "ccert/nba.hpp"

namespace ccert {
namespace detail {

// Label formulas are evaluated against every AP subset to expand an edge into
// one concrete letter per satisfying assignment.
struct LabelParser {
    std::string text;
    size_t pos = 0;
    size_t num_aps = 0;

    explicit LabelParser(std::string t, size_t n) : text(std::move(t)), num_aps(n) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace((unsigned char)text[pos])) ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) { ++pos; return true; }
        return false;
    }

    // eval against assignment mask; grammar: disj := conj ('|' conj)*
    bool parse_disj(uint32_t mask) {
        bool v = parse_conj(mask);
        while (eat('|')) v = parse_conj(mask) || v;
        return v;
    }
    bool parse_conj(uint32_t mask) {
        bool v = parse_atom(mask);
        while (eat('&')) v = parse_atom(mask) && v;
        return v;
    }
    bool parse_atom(uint32_t mask) {
        skip_ws();
        if (pos >= text.size()) throw SyntaxError("label formula ends early", pos);
        char c = text[pos];
        if (c == '!') { ++pos; return !parse_atom(mask); }
        if (c == '(') {
            ++pos;
            bool v = parse_disj(mask);
            if (!eat(')')) throw SyntaxError("missing ')' in label", pos);
            return v;
        }
        if (c == 't') { ++pos; return true; }
        if (c == 'f') { ++pos; return false; }
        if (c == '@') throw UnsupportedFeature("label aliases are not supported");
        if (std::isdigit((unsigned char)c)) {
            size_t start = pos;
            while (pos < text.size() && std::isdigit((unsigned char)text[pos])) ++pos;
            size_t idx = std::stoul(text.substr(start, pos - start));
            if (idx >= num_aps)
                throw FormatError("label references AP " + std::to_string(idx) +
                                  " but only " + std::to_string(num_aps) + " declared");
            return (mask >> idx) & 1;
        }
        throw SyntaxError(std::string("unexpected character '") + c + "' in label", pos);
    }

    bool eval(uint32_t mask) {
        pos = 0;
        bool v = parse_disj(mask);
        skip_ws();
        if (pos != text.size()) throw SyntaxError("trailing input in label", pos);
        return v;
    }
};

inline std::vector<Letter> expand_label(const std::string& formula,
                                        const std::vector<std::string>& aps) {
    if (aps.size() > 16) throw UnsupportedFeature("more than 16 atomic propositions");
    LabelParser p(formula, aps.size());
    std::vector<Letter> out;
    for (uint32_t mask = 0; mask < (uint32_t(1) << aps.size()); ++mask) {
        if (!p.eval(mask)) continue;
        std::vector<std::string> names;
        for (size_t i = 0; i < aps.size(); ++i)
            if (mask >> i & 1) names.push_back(aps[i]);
        out.push_back(Letter::of(std::move(names)));
    }
    return out;
}

inline std::string strip_comment(const std::string& line) {
    // HOA comments are /* ... */; we only support whole-line or trailing ones
    // that do not nest.
    auto at = line.find("/*");
    if (at == std::string::npos) return line;
    auto end = line.find("*/", at + 2);
    if (end == std::string::npos) throw SyntaxError("unterminated comment", at);
    return strip_comment(line.substr(0, at) + line.substr(end + 2));
}

inline std::string parse_quoted(const std::string& s, size_t& i) {
    if (i >= s.size() || s[i] != '"') throw SyntaxError("expected quoted string", i);
    std::string out;
    for (++i; i < s.size(); ++i) {
        if (s[i] == '"') { ++i; return out; }
        if (s[i] == '\\' && i + 1 < s.size()) { out.push_back(s[++i]); continue; }
        out.push_back(s[i]);
    }
    throw SyntaxError("unterminated quoted string", i);
}

} // namespace detail

inline Nba parse_hoa(std::istream& in) {
    Nba nba;
    bool saw_hoa = false, saw_states = false, saw_acceptance = false, in_body = false;
    bool done = false;
    int cur_state = -1;
    std::vector<std::string> pending_edges; // edge lines of current state
    std::string line;
    int lineno = 0;

    auto flush_state = [&]() {
        if (cur_state < 0) return;
        for (const auto& el : pending_edges) {
            size_t i = 0;
            while (i < el.size() && std::isspace((unsigned char)el[i])) ++i;
            if (i >= el.size()) continue;
            if (el[i] != '[')
                throw UnsupportedFeature("implicit edge labels are not supported");
            size_t close = el.find(']', i);
            if (close == std::string::npos) throw SyntaxError("missing ']' on edge", i);
            std::string formula = el.substr(i + 1, close - i - 1);
            std::string rest = el.substr(close + 1);
            if (rest.find('{') != std::string::npos)
                throw UnsupportedFeature("transition-based acceptance marks are not supported");
            std::istringstream rs(rest);
            int target;
            if (!(rs >> target)) throw SyntaxError("edge target missing", close);
            std::string extra;
            if (rs >> extra) throw SyntaxError("unexpected tokens after edge target", close);
            for (auto& l : detail::expand_label(formula, nba.aps))
                nba.edges[cur_state].push_back(NbaEdge{std::move(l), target});
        }
        pending_edges.clear();
    };

    while (std::getline(in, line)) {
        ++lineno;
        line = detail::strip_comment(line);
        // trim
        size_t b = line.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) continue;
        size_t e = line.find_last_not_of(" \t\r\n");
        line = line.substr(b, e - b + 1);

        if (done) throw SyntaxError("content after --END--", lineno);

        if (!in_body) {
            if (line == "--BODY--") {
                if (!saw_hoa || !saw_states || !saw_acceptance)
                    throw FormatError("HOA header incomplete before --BODY--");
                if (nba.aps.size() > 16)
                    throw UnsupportedFeature("more than 16 atomic propositions");
                nba.edges.assign(nba.num_states, {});
                in_body = true;
                continue;
            }
            auto colon = line.find(':');
            if (colon == std::string::npos)
                throw SyntaxError("expected 'header: value' line", lineno);
            std::string key = line.substr(0, colon);
            std::string val = line.substr(colon + 1);
            size_t vb = val.find_first_not_of(" \t");
            val = (vb == std::string::npos) ? "" : val.substr(vb);

            if (key == "HOA") {
                if (val != "v1") throw UnsupportedFeature("only HOA v1 is supported");
                saw_hoa = true;
            } else if (key == "States") {
                nba.num_states = std::stoi(val);
                saw_states = true;
            } else if (key == "Start") {
                if (val.find('&') != std::string::npos)
                    throw UnsupportedFeature("conjunctive start states are not supported");
                nba.initial.push_back(std::stoi(val));
            } else if (key == "AP") {
                std::istringstream vs(val);
                int n = 0;
                vs >> n;
                std::string tail;
                std::getline(vs, tail);
                size_t i = 0;
                for (int k = 0; k < n; ++k) {
                    while (i < tail.size() && std::isspace((unsigned char)tail[i])) ++i;
                    nba.aps.push_back(detail::parse_quoted(tail, i));
                }
            } else if (key == "Acceptance") {
                std::string squeezed;
                for (char c : val)
                    if (!std::isspace((unsigned char)c)) squeezed.push_back(c);
                if (squeezed != "1Inf(0)")
                    throw UnsupportedFeature("only acceptance '1 Inf(0)' is supported");
                saw_acceptance = true;
            } else if (key == "acc-name") {
                if (val.substr(0, 5) != "Buchi")
                    throw UnsupportedFeature("acc-name must be Buchi");
            } else if (key == "name") {
                size_t i = 0;
                nba.name = detail::parse_quoted(val, i);
            } else if (key == "Alias") {
                throw UnsupportedFeature("aliases are not supported");
            } else if (key == "tool" || key == "properties" || key == "owner" ||
                       key == "comment") {
                // informational; ignored
            } else if (!key.empty() && std::isupper((unsigned char)key[0])) {
                throw UnsupportedFeature("unsupported header '" + key + "'");
            }
            continue;
        }

        // body
        if (line == "--END--") {
            flush_state();
            done = true;
            continue;
        }
        if (line.rfind("State:", 0) == 0) {
            flush_state();
            std::string rest = line.substr(6);
            size_t i = 0;
            while (i < rest.size() && std::isspace((unsigned char)rest[i])) ++i;
            if (i < rest.size() && rest[i] == '[')
                throw UnsupportedFeature("state labels are not supported");
            size_t start = i;
            while (i < rest.size() && std::isdigit((unsigned char)rest[i])) ++i;
            if (start == i) throw SyntaxError("state index missing", lineno);
            cur_state = std::stoi(rest.substr(start, i - start));
            if (cur_state < 0 || cur_state >= nba.num_states)
                throw FormatError("state index out of range");
            while (i < rest.size() && std::isspace((unsigned char)rest[i])) ++i;
            if (i < rest.size() && rest[i] == '"') detail::parse_quoted(rest, i);
            while (i < rest.size() && std::isspace((unsigned char)rest[i])) ++i;
            if (i < rest.size() && rest[i] == '{') {
                size_t close = rest.find('}', i);
                if (close == std::string::npos) throw SyntaxError("missing '}'", i);
                std::string sig = rest.substr(i + 1, close - i - 1);
                std::string squeezed;
                for (char c : sig)
                    if (!std::isspace((unsigned char)c)) squeezed.push_back(c);
                if (squeezed != "0")
                    throw UnsupportedFeature("only acceptance set 0 is supported");
                nba.accepting.push_back(cur_state);
                i = close + 1;
            }
            while (i < rest.size() && std::isspace((unsigned char)rest[i])) ++i;
            if (i < rest.size()) throw SyntaxError("unexpected tokens after State:", lineno);
            continue;
        }
        if (cur_state < 0) throw SyntaxError("edge before any State:", lineno);
        pending_edges.push_back(line);
    }
    if (!done) throw FormatError("missing --END--");
    nba.normalize();
    nba.validate();
    return nba;
}

inline Nba parse_hoa(const std::string& text) {
    std::istringstream in(text);
    return parse_hoa(in);
}

// Writes the subset back out. Every edge letter becomes a full conjunction
// over all APs, so parse(print(A)) reproduces A exactly.
inline void print_hoa(std::ostream& out, const Nba& nba) {
    out << "HOA: v1\n";
    if (!nba.name.empty()) out << "name: \"" << nba.name << "\"\n";
    out << "States: " << nba.num_states << "\n";
    for (int q : nba.initial) out << "Start: " << q << "\n";
    out << "AP: " << nba.aps.size();
    for (const auto& ap : nba.aps) out << " \"" << ap << "\"";
    out << "\n";
    out << "acc-name: Buchi\n";
    out << "Acceptance: 1 Inf(0)\n";
    out << "--BODY--\n";
    for (int q = 0; q < nba.num_states; ++q) {
        out << "State: " << q;
        if (nba.is_accepting(q)) out << " {0}";
        out << "\n";
        for (const auto& e : nba.edges[q]) {
            out << "[";
            if (nba.aps.empty()) {
                out << "t";
            } else {
                for (size_t i = 0; i < nba.aps.size(); ++i) {
                    if (i) out << "&";
                    if (!e.letter.has(nba.aps[i])) out << "!";
                    out << i;
                }
            }
            out << "] " << e.target << "\n";
        }
    }
    out << "--END--\n";
}

inline std::string hoa_to_string(const Nba& nba) {
    std::ostringstream out;
    print_hoa(out, nba);
    return out.str();
}

inline Nba load_hoa_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open automaton file: " + path);
    return parse_hoa(in);
}

} // namespace ccert
