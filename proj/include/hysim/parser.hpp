#pragma once

// Recursive-descent parser for the hybrid automaton specification language:
//
//   model    = {letdef} vardecl initdecl {locdef} [propdecl]
//   letdef   = "let" IDENT "=" (expr | "R" NUMBER)
//   vardecl  = "var" IDENT {"," IDENT}
//   initdecl = "init" IDENT "," expr {"," expr}
//   locdef   = "at" IDENT "wait" expr {"," expr} {trans} "end"
//   trans    = "once" "(" guardlist ")" "goto" IDENT "then" expr {"," expr}
//   propdecl = "prop" stl
//
// Whitespace-insensitive; `#` comments to end of line. "R k" draws one point
// value uniformly from [0,k] per run, from the given seed, so repeated-seed
// batches are reproducible. Constants fold into the expression trees.

#include <cctype>
#include <functional>
#include <random>
#include <sstream>

#include "hysim/model.hpp"

namespace hysim {

struct SyntaxError : std::runtime_error {
    int line, col;
    SyntaxError(int line_, int col_, const std::string& msg)
        : std::runtime_error("syntax error at " + std::to_string(line_) + ":" +
                             std::to_string(col_) + ": " + msg),
          line(line_), col(col_) {}
};

struct SemanticError : std::runtime_error {
    int line;
    SemanticError(int line_, const std::string& msg)
        : std::runtime_error("semantic error at line " + std::to_string(line_) + ": " + msg),
          line(line_) {}
};

namespace detail {

struct Token {
    enum Kind { Ident, Number, Punct, End } kind;
    std::string text;
    double num = 0;
    int line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(&src) { advance(); }

    const Token& peek() const { return tok_; }
    Token take() { Token t = tok_; advance(); return t; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw SyntaxError(tok_.line, tok_.col, msg);
    }

private:
    void advance() {
        while (pos_ < src().size()) {
            char c = src()[pos_];
            if (c == '#') {
                while (pos_ < src().size() && src()[pos_] != '\n') ++pos_;
            } else if (c == '\n') {
                ++pos_; ++line_; col_ = 1;
            } else if (std::isspace((unsigned char)c)) {
                ++pos_; ++col_;
            } else break;
        }
        tok_.line = line_;
        tok_.col = col_;
        if (pos_ >= src().size()) { tok_.kind = Token::End; tok_.text = "<eof>"; return; }
        char c = src()[pos_];
        if (std::isalpha((unsigned char)c) || c == '_') {
            std::size_t s = pos_;
            while (pos_ < src().size() &&
                   (std::isalnum((unsigned char)src()[pos_]) || src()[pos_] == '_'))
                { ++pos_; ++col_; }
            tok_.kind = Token::Ident;
            tok_.text = src().substr(s, pos_ - s);
            return;
        }
        if (std::isdigit((unsigned char)c) || (c == '.' && pos_ + 1 < src().size() &&
                                               std::isdigit((unsigned char)src()[pos_ + 1]))) {
            std::size_t s = pos_;
            while (pos_ < src().size() &&
                   (std::isdigit((unsigned char)src()[pos_]) || src()[pos_] == '.' ||
                    src()[pos_] == 'e' || src()[pos_] == 'E' ||
                    ((src()[pos_] == '+' || src()[pos_] == '-') && pos_ > s &&
                     (src()[pos_ - 1] == 'e' || src()[pos_ - 1] == 'E'))))
                { ++pos_; ++col_; }
            tok_.kind = Token::Number;
            tok_.text = src().substr(s, pos_ - s);
            try {
                std::size_t used = 0;
                tok_.num = std::stod(tok_.text, &used);
                if (used != tok_.text.size()) throw std::invalid_argument("trail");
            } catch (...) {
                throw SyntaxError(line_, tok_.col, "malformed number '" + tok_.text + "'");
            }
            return;
        }
        // multi-char operators
        if ((c == '&' || c == '|') && pos_ + 1 < src().size() && src()[pos_ + 1] == c) {
            tok_.kind = Token::Punct;
            tok_.text = std::string(2, c);
            pos_ += 2; col_ += 2;
            return;
        }
        static const std::string singles = "+-*/^(),[]!=";
        if (singles.find(c) != std::string::npos) {
            tok_.kind = Token::Punct;
            tok_.text = std::string(1, c);
            ++pos_; ++col_;
            return;
        }
        throw SyntaxError(line_, col_, std::string("unexpected character '") + c + "'");
    }

    const std::string& src() const { return *src_; }

    const std::string* src_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

class Parser {
public:
    Parser(const std::string& src, std::uint64_t seed) : lex_(src), rng_(seed) {}

    Model parse_model() {
        Model m;
        while (is_kw("let")) parse_let(m);
        parse_vardecl(m);
        parse_initdecl(m);
        while (is_kw("at")) parse_locdef(m);
        if (is_kw("prop")) {
            lex_.take();
            std::ostringstream text;
            m.property = parse_stl(m, &text);
            m.property_text = text.str();
        }
        if (lex_.peek().kind != Token::End)
            lex_.fail("unexpected trailing input '" + lex_.peek().text + "'");
        validate(m);
        return m;
    }

    Stl parse_property_only(const Model& m) {
        Stl s = parse_stl(m, nullptr);
        if (lex_.peek().kind != Token::End)
            lex_.fail("unexpected trailing input '" + lex_.peek().text + "'");
        return s;
    }

private:
    bool is_kw(const char* kw) const {
        return lex_.peek().kind == Token::Ident && lex_.peek().text == kw;
    }
    void expect_kw(const char* kw) {
        if (!is_kw(kw)) lex_.fail(std::string("expected '") + kw + "'");
        lex_.take();
    }
    bool is_punct(const char* p) const {
        return lex_.peek().kind == Token::Punct && lex_.peek().text == p;
    }
    void expect_punct(const char* p) {
        if (!is_punct(p)) lex_.fail(std::string("expected '") + p + "'");
        lex_.take();
    }
    std::string expect_ident(const char* what) {
        if (lex_.peek().kind != Token::Ident)
            lex_.fail(std::string("expected ") + what);
        return lex_.take().text;
    }
    double expect_number() {
        if (lex_.peek().kind != Token::Number) lex_.fail("expected a number");
        return lex_.take().num;
    }

    void parse_let(Model& m) {
        lex_.take(); // let
        int ln = lex_.peek().line;
        std::string name = expect_ident("constant name");
        if (m.constants.count(name))
            throw SemanticError(ln, "duplicate constant '" + name + "'");
        expect_punct("=");
        Interval value(0.0);
        if (is_kw("R")) {
            lex_.take();
            double k = expect_number();
            if (k < 0) lex_.fail("R bound must be nonnegative");
            std::uniform_real_distribution<double> dist(0.0, k);
            value = Interval(dist(rng_));
        } else {
            Expr e = parse_expr(m, /*vars_allowed=*/false);
            value = eval_box(e, Box(0));
        }
        m.constants.emplace(name, value);
    }

    void parse_vardecl(Model& m) {
        expect_kw("var");
        do {
            int ln = lex_.peek().line;
            std::string name = expect_ident("variable name");
            if (std::find(m.variables.begin(), m.variables.end(), name) != m.variables.end())
                throw SemanticError(ln, "duplicate variable '" + name + "'");
            if (m.constants.count(name))
                throw SemanticError(ln, "variable '" + name + "' shadows a constant");
            m.variables.push_back(name);
        } while (is_punct(",") && (lex_.take(), true));
    }

    void parse_initdecl(Model& m) {
        expect_kw("init");
        init_line_ = lex_.peek().line;
        m.initial_location = expect_ident("initial location name");
        for (std::size_t i = 0; i < m.dim(); ++i) {
            expect_punct(",");
            m.initial_state.push_back(parse_expr(m, /*vars_allowed=*/false));
        }
    }

    void parse_locdef(Model& m) {
        lex_.take(); // at
        Location loc;
        int loc_line = lex_.peek().line;
        loc.name = expect_ident("location name");
        if (m.find_location(loc.name))
            throw SemanticError(loc_line, "duplicate location '" + loc.name + "'");
        expect_kw("wait");
        loc.field.components.push_back(parse_expr(m, true));
        while (is_punct(",")) {
            lex_.take();
            loc.field.components.push_back(parse_expr(m, true));
        }
        if (loc.field.dim() != m.dim())
            throw SemanticError(loc_line, "location '" + loc.name + "': derivative list has " +
                                std::to_string(loc.field.dim()) + " entries, expected " +
                                std::to_string(m.dim()));
        while (is_kw("once")) {
            lex_.take();
            Transition tr;
            expect_punct("(");
            tr.guard_eq = parse_expr(m, true);
            while (is_punct(",")) {
                lex_.take();
                if (is_kw("true")) { lex_.take(); continue; } // literal true: no constraint
                tr.guard_ineqs.push_back(parse_expr(m, true));
            }
            expect_punct(")");
            expect_kw("goto");
            int goto_line = lex_.peek().line;
            tr.target = expect_ident("goto target");
            goto_lines_.push_back(goto_line);
            expect_kw("then");
            tr.reset.push_back(parse_expr(m, true));
            while (is_punct(",")) {
                lex_.take();
                tr.reset.push_back(parse_expr(m, true));
            }
            if (tr.reset.size() != m.dim())
                throw SemanticError(goto_line, "transition to '" + tr.target + "' in location '" +
                                    loc.name + "': reset has " +
                                    std::to_string(tr.reset.size()) + " entries, expected " +
                                    std::to_string(m.dim()));
            loc.transitions.push_back(std::move(tr));
        }
        expect_kw("end");
        m.locations.push_back(std::move(loc));
    }

    void validate(const Model& m) {
        if (m.locations.empty())
            throw SemanticError(init_line_, "model declares no locations");
        if (!m.find_location(m.initial_location))
            throw SemanticError(init_line_, "initial location '" + m.initial_location +
                                                "' is not declared");
        std::size_t k = 0;
        for (const auto& loc : m.locations)
            for (const auto& tr : loc.transitions) {
                int ln = k < goto_lines_.size() ? goto_lines_[k] : 1;
                ++k;
                if (!m.find_location(tr.target))
                    throw SemanticError(ln, "goto target '" + tr.target + "' in location '" +
                                                loc.name + "' is not declared");
            }
    }

    // --- expressions -----------------------------------------------------

    Expr parse_expr(const Model& m, bool vars_allowed) {
        return parse_sum(m, vars_allowed);
    }
    Expr parse_sum(const Model& m, bool va) {
        Expr e = parse_term(m, va);
        while (is_punct("+") || is_punct("-")) {
            bool plus = lex_.take().text == "+";
            Expr r = parse_term(m, va);
            e = plus ? add(e, r) : sub(e, r);
        }
        return e;
    }
    Expr parse_term(const Model& m, bool va) {
        Expr e = parse_unary(m, va);
        while (is_punct("*") || is_punct("/")) {
            bool times = lex_.take().text == "*";
            Expr r = parse_unary(m, va);
            e = times ? mul(e, r) : div(e, r);
        }
        return e;
    }
    Expr parse_unary(const Model& m, bool va) {
        if (is_punct("-")) {
            lex_.take();
            return neg(parse_unary(m, va));
        }
        return parse_power(m, va);
    }
    Expr parse_power(const Model& m, bool va) {
        Expr base = parse_atom(m, va);
        if (is_punct("^")) {
            lex_.take();
            if (lex_.peek().kind != Token::Number)
                lex_.fail("exponent must be a nonnegative integer literal");
            Token t = lex_.take();
            double v = t.num;
            if (v < 0 || v != std::floor(v))
                throw SyntaxError(t.line, t.col, "exponent must be a nonnegative integer");
            return pow_int(base, (long)v);
        }
        return base;
    }
    Expr parse_atom(const Model& m, bool va) {
        const Token& t = lex_.peek();
        if (t.kind == Token::Number) return constant(lex_.take().num);
        if (is_punct("(")) {
            lex_.take();
            Expr e = parse_expr(m, va);
            expect_punct(")");
            return e;
        }
        if (is_punct("[")) { // interval literal [lo,hi] (emitted by the printer)
            lex_.take();
            bool neg_lo = is_punct("-") && (lex_.take(), true);
            double lo = expect_number() * (neg_lo ? -1 : 1);
            expect_punct(",");
            bool neg_hi = is_punct("-") && (lex_.take(), true);
            double hi = expect_number() * (neg_hi ? -1 : 1);
            expect_punct("]");
            if (lo > hi) lex_.fail("interval literal with lo > hi");
            return constant(Interval(lo, hi));
        }
        if (t.kind == Token::Ident) {
            Token id = lex_.take();
            static const std::map<std::string, Expr (*)(Expr)> fns = {
                {"sin", [](Expr a) { return sin(std::move(a)); }},
                {"cos", [](Expr a) { return cos(std::move(a)); }},
                {"exp", [](Expr a) { return exp(std::move(a)); }},
                {"log", [](Expr a) { return log(std::move(a)); }},
                {"sqrt", [](Expr a) { return sqrt(std::move(a)); }},
                {"abs", [](Expr a) { return abs(std::move(a)); }},
            };
            auto fn = fns.find(id.text);
            if (fn != fns.end()) {
                expect_punct("(");
                Expr arg = parse_expr(m, va);
                expect_punct(")");
                return fn->second(std::move(arg));
            }
            auto c = m.constants.find(id.text);
            if (c != m.constants.end()) return constant(c->second);
            if (va) {
                auto it = std::find(m.variables.begin(), m.variables.end(), id.text);
                if (it != m.variables.end())
                    return var((std::size_t)(it - m.variables.begin()));
            }
            throw SemanticError(id.line, "unknown identifier '" + id.text + "'");
        }
        lex_.fail("expected an expression, found '" + t.text + "'");
    }

    // --- STL -------------------------------------------------------------

    Stl parse_stl(const Model& m, std::ostringstream* text) {
        std::ostringstream local;
        Stl s = parse_stl_until(m, local);
        if (text) *text << local.str();
        return s;
    }
    Stl parse_stl_until(const Model& m, std::ostringstream& text) {
        Stl lhs = parse_stl_or(m, text);
        if (is_kw("U")) {
            lex_.take();
            text << " U";
            auto [timed, lo, hi] = parse_bounds(text);
            std::ostringstream rhs_text;
            Stl rhs = parse_stl_until(m, rhs_text);
            text << " " << rhs_text.str();
            return stl_until(std::move(lhs), std::move(rhs), timed, lo, hi);
        }
        return lhs;
    }
    Stl parse_stl_or(const Model& m, std::ostringstream& text) {
        Stl e = parse_stl_and(m, text);
        while (is_punct("||")) {
            lex_.take();
            text << " || ";
            e = stl_or(e, parse_stl_and(m, text));
        }
        return e;
    }
    Stl parse_stl_and(const Model& m, std::ostringstream& text) {
        Stl e = parse_stl_unary(m, text);
        while (is_punct("&&")) {
            lex_.take();
            text << " && ";
            e = stl_and(e, parse_stl_unary(m, text));
        }
        return e;
    }
    std::tuple<bool, double, double> parse_bounds(std::ostringstream& text) {
        if (!is_punct("[")) return {false, 0, 0};
        lex_.take();
        Token lo_tok = lex_.peek();
        double lo = expect_number();
        expect_punct(",");
        double hi = expect_number();
        expect_punct("]");
        if (!(0 <= lo && lo <= hi))
            throw SyntaxError(lo_tok.line, lo_tok.col,
                              "temporal bounds must satisfy 0 <= a <= b");
        char buf[64];
        std::snprintf(buf, sizeof buf, "[%g,%g]", lo, hi);
        text << buf;
        return {true, lo, hi};
    }
    Stl parse_stl_unary(const Model& m, std::ostringstream& text) {
        if (is_kw("true")) { lex_.take(); text << "true"; return stl_true(); }
        if (is_punct("!")) {
            lex_.take();
            text << "!";
            return stl_not(parse_stl_unary(m, text));
        }
        if (is_kw("G") || is_kw("F")) {
            bool always = lex_.take().text == "G";
            text << (always ? "G" : "F");
            auto [timed, lo, hi] = parse_bounds(text);
            text << " ";
            Stl p = parse_stl_unary(m, text);
            return always ? stl_always(std::move(p), timed, lo, hi)
                          : stl_eventually(std::move(p), timed, lo, hi);
        }
        if (is_punct("(")) {
            // "(expr)" is an atom meaning expr > 0; "(stl)" is a group.
            // Disambiguate by attempting the STL parse and backtracking.
            Lexer saved = lex_;
            lex_.take();
            try {
                std::ostringstream sub;
                Stl s = parse_stl_until(m, sub);
                expect_punct(")");
                text << "(" << sub.str() << ")";
                return s;
            } catch (const SyntaxError&) {
                lex_ = saved;
            } catch (const SemanticError&) {
                lex_ = saved;
            }
            lex_.take();
            Expr e = parse_expr(m, /*vars_allowed=*/true);
            expect_punct(")");
            text << "(" << to_string(e, m.variables) << ")";
            return stl_atom(std::move(e));
        }
        lex_.fail("expected an STL formula, found '" + lex_.peek().text + "'");
    }

    Lexer lex_;
    std::mt19937_64 rng_;
    int init_line_ = 1;
    std::vector<int> goto_lines_; // one per parsed transition, textual order
};

} // namespace detail

inline Model parse_model(const std::string& text, std::uint64_t seed) {
    detail::Parser p(text, seed);
    return p.parse_model();
}

// Parses the `prop` sublanguage standalone against a model's variable list.
inline Stl parse_property(const std::string& text, const Model& m) {
    detail::Parser p(text, 0);
    return p.parse_property_only(m);
}

// ---------------------------------------------------------------------------
// Pretty-printing and reporting.

inline std::string print_stl(const Stl& s, const std::vector<std::string>& names) {
    // precedence: ! (3) > && (2) > || (1) > U (0)
    auto prec = [](const Stl& x) -> int {
        switch (x->op) {
            case StlOp::Until: return 0;
            case StlOp::Or: return 1;
            case StlOp::And: return 2;
            case StlOp::Not: return 3;
            default: return 4;
        }
    };
    std::function<std::string(const Stl&, int)> go = [&](const Stl& x, int outer) {
        std::string r;
        int p = prec(x);
        switch (x->op) {
            case StlOp::Atom: return "(" + to_string(x->atom, names) + ")";
            case StlOp::True: r = "true"; break;
            case StlOp::Not: r = "!" + go(x->a, p + 1); break;
            case StlOp::And: r = go(x->a, p) + " && " + go(x->b, p); break;
            case StlOp::Or: r = go(x->a, p) + " || " + go(x->b, p); break;
            case StlOp::Until: {
                std::string b;
                if (x->timed) {
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "[%g,%g]", x->t_lo, x->t_hi);
                    b = buf;
                }
                // U is right-associative
                r = go(x->a, p + 1) + " U" + b + " " + go(x->b, p);
                break;
            }
        }
        return outer > p ? "(" + r + ")" : r;
    };
    return go(s, 0);
}

// Emits resolved source (constants folded, R sampled); re-parsing it with any
// seed reproduces the same Model.
inline std::string print_model(const Model& m) {
    std::ostringstream out;
    out << "var ";
    for (std::size_t i = 0; i < m.dim(); ++i)
        out << (i ? ", " : "") << m.variables[i];
    out << "\n\ninit " << m.initial_location;
    for (const auto& e : m.initial_state) out << ", " << to_string(e, m.variables);
    out << "\n";
    for (const auto& loc : m.locations) {
        out << "\nat " << loc.name << " wait ";
        for (std::size_t i = 0; i < loc.field.dim(); ++i)
            out << (i ? ", " : "") << to_string(loc.field.components[i], m.variables);
        out << "\n";
        for (const auto& tr : loc.transitions) {
            out << "  once (" << to_string(tr.guard_eq, m.variables);
            for (const auto& g : tr.guard_ineqs) out << ", " << to_string(g, m.variables);
            out << ") goto " << tr.target << " then ";
            for (std::size_t i = 0; i < tr.reset.size(); ++i)
                out << (i ? ", " : "") << to_string(tr.reset[i], m.variables);
            out << "\n";
        }
        out << "end\n";
    }
    if (m.property) out << "\nprop " << print_stl(*m.property, m.variables) << "\n";
    return out.str();
}

inline std::string model_report(const Model& m) {
    std::ostringstream out;
    out << "variables (" << m.dim() << "): ";
    for (std::size_t i = 0; i < m.dim(); ++i) out << (i ? ", " : "") << m.variables[i];
    out << "\nconstants:";
    if (m.constants.empty()) out << " none";
    out << "\n";
    for (const auto& [name, v] : m.constants) {
        out << "  " << name << " = ";
        if (v.is_point()) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v.lo());
            out << buf;
        } else out << to_string(v);
        out << "\n";
    }
    out << "initial: " << m.initial_location << " at ";
    for (std::size_t i = 0; i < m.initial_state.size(); ++i)
        out << (i ? ", " : "") << to_string(m.initial_state[i], m.variables);
    out << "\nlocations (" << m.locations.size() << "):\n";
    for (const auto& loc : m.locations) {
        out << "  " << loc.name << " -> {";
        bool first = true;
        for (const auto& tr : loc.transitions) {
            out << (first ? "" : ", ") << tr.target;
            first = false;
        }
        out << "}  (" << loc.transitions.size() << " transitions)\n";
    }
    if (m.property)
        out << "property: " << print_stl(*m.property, m.variables) << "\n";
    else
        out << "no property\n";
    return out.str();
}

} // namespace hysim
