#pragma once

// Hybrid automaton model and STL formula representation.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hysim/expr.hpp"

namespace hysim {

struct Transition {
    Expr guard_eq;                 // the equation g = 0
    std::vector<Expr> guard_ineqs; // each meaning expr > 0; `true` is absent
    std::string target;
    std::vector<Expr> reset;       // arity = state dimension
};

struct Location {
    std::string name;
    VectorField field;
    std::vector<Transition> transitions; // textual order (tie-breaking)
};

// STL formulas normalized to {atom, true, not, and, or, until}.
// G/F are desugared at construction: F[a,b] p = true U[a,b] p and
// G[a,b] p = !(true U[a,b] !p).
struct StlNode;
using Stl = std::shared_ptr<const StlNode>;

enum class StlOp { Atom, True, Not, And, Or, Until };

struct StlNode {
    StlOp op;
    Expr atom;          // Atom: expression, meaning atom > 0
    Stl a, b;
    bool timed = false; // Until only
    double t_lo = 0, t_hi = 0;
};

inline Stl stl_atom(Expr e) {
    auto n = std::make_shared<StlNode>();
    n->op = StlOp::Atom;
    n->atom = std::move(e);
    return n;
}
inline Stl stl_true() {
    auto n = std::make_shared<StlNode>();
    n->op = StlOp::True;
    return n;
}
inline Stl stl_not(Stl a) {
    auto n = std::make_shared<StlNode>();
    n->op = StlOp::Not;
    n->a = std::move(a);
    return n;
}
inline Stl stl_and(Stl a, Stl b) {
    auto n = std::make_shared<StlNode>();
    n->op = StlOp::And;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}
inline Stl stl_or(Stl a, Stl b) {
    auto n = std::make_shared<StlNode>();
    n->op = StlOp::Or;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}
inline Stl stl_until(Stl a, Stl b, bool timed, double lo, double hi) {
    if (timed && !(0 <= lo && lo <= hi))
        throw DomainError("until: bounds must satisfy 0 <= a <= b");
    auto n = std::make_shared<StlNode>();
    n->op = StlOp::Until;
    n->a = std::move(a);
    n->b = std::move(b);
    n->timed = timed;
    n->t_lo = lo;
    n->t_hi = hi;
    return n;
}
inline Stl stl_eventually(Stl p, bool timed, double lo, double hi) {
    return stl_until(stl_true(), std::move(p), timed, lo, hi);
}
inline Stl stl_always(Stl p, bool timed, double lo, double hi) {
    return stl_not(stl_until(stl_true(), stl_not(std::move(p)), timed, lo, hi));
}

inline bool stl_has_timed(const Stl& s) {
    switch (s->op) {
        case StlOp::Atom: case StlOp::True: return false;
        case StlOp::Not: return stl_has_timed(s->a);
        case StlOp::And: case StlOp::Or:
            return stl_has_timed(s->a) || stl_has_timed(s->b);
        case StlOp::Until:
            return s->timed || stl_has_timed(s->a) || stl_has_timed(s->b);
    }
    return false;
}

// Trajectory horizon needed to decide the formula at time 0.
// Untimed operators look arbitrarily far; they report +inf.
inline double stl_required_horizon(const Stl& s) {
    switch (s->op) {
        case StlOp::Atom: case StlOp::True: return 0.0;
        case StlOp::Not: return stl_required_horizon(s->a);
        case StlOp::And: case StlOp::Or:
            return std::max(stl_required_horizon(s->a), stl_required_horizon(s->b));
        case StlOp::Until: {
            double sub = std::max(stl_required_horizon(s->a), stl_required_horizon(s->b));
            if (!s->timed) return std::numeric_limits<double>::infinity();
            return s->t_hi + sub;
        }
    }
    return 0.0;
}

struct Model {
    std::map<std::string, Interval> constants;
    std::vector<std::string> variables;
    std::string initial_location;
    std::vector<Expr> initial_state;   // constant-foldable, one per variable
    std::vector<Location> locations;   // declaration order
    std::optional<Stl> property;
    std::string property_text;         // source text of the prop clause, if any

    std::size_t dim() const { return variables.size(); }

    const Location* find_location(const std::string& name) const {
        for (const auto& l : locations)
            if (l.name == name) return &l;
        return nullptr;
    }

    Box initial_box() const {
        Box b(dim());
        for (std::size_t i = 0; i < dim(); ++i)
            b[i] = eval_box(initial_state[i], Box(0));
        return b;
    }
};

// Structural equality helpers (round-trip testing, dedup).
inline bool expr_equal(const Expr& a, const Expr& b) {
    if (a->op != b->op) return false;
    switch (a->op) {
        case ExprOp::Const: return a->value.same(b->value);
        case ExprOp::Var: return a->var == b->var;
        case ExprOp::Pow: return a->expn == b->expn && expr_equal(a->a, b->a);
        case ExprOp::Add: case ExprOp::Sub: case ExprOp::Mul: case ExprOp::Div:
            return expr_equal(a->a, b->a) && expr_equal(a->b, b->b);
        default: return expr_equal(a->a, b->a);
    }
}

inline bool stl_equal(const Stl& a, const Stl& b) {
    if (a->op != b->op) return false;
    switch (a->op) {
        case StlOp::Atom: return expr_equal(a->atom, b->atom);
        case StlOp::True: return true;
        case StlOp::Not: return stl_equal(a->a, b->a);
        case StlOp::And: case StlOp::Or:
            return stl_equal(a->a, b->a) && stl_equal(a->b, b->b);
        case StlOp::Until:
            return a->timed == b->timed && a->t_lo == b->t_lo && a->t_hi == b->t_hi &&
                   stl_equal(a->a, b->a) && stl_equal(a->b, b->b);
    }
    return false;
}

inline bool model_equal(const Model& a, const Model& b) {
    if (a.variables != b.variables || a.initial_location != b.initial_location) return false;
    if (a.initial_state.size() != b.initial_state.size()) return false;
    for (std::size_t i = 0; i < a.initial_state.size(); ++i)
        if (!expr_equal(a.initial_state[i], b.initial_state[i])) return false;
    if (a.locations.size() != b.locations.size()) return false;
    for (std::size_t li = 0; li < a.locations.size(); ++li) {
        const auto& la = a.locations[li];
        const auto& lb = b.locations[li];
        if (la.name != lb.name) return false;
        if (la.field.dim() != lb.field.dim()) return false;
        for (std::size_t i = 0; i < la.field.dim(); ++i)
            if (!expr_equal(la.field.components[i], lb.field.components[i])) return false;
        if (la.transitions.size() != lb.transitions.size()) return false;
        for (std::size_t ti = 0; ti < la.transitions.size(); ++ti) {
            const auto& ta = la.transitions[ti];
            const auto& tb = lb.transitions[ti];
            if (ta.target != tb.target) return false;
            if (!expr_equal(ta.guard_eq, tb.guard_eq)) return false;
            if (ta.guard_ineqs.size() != tb.guard_ineqs.size()) return false;
            for (std::size_t i = 0; i < ta.guard_ineqs.size(); ++i)
                if (!expr_equal(ta.guard_ineqs[i], tb.guard_ineqs[i])) return false;
            for (std::size_t i = 0; i < ta.reset.size(); ++i)
                if (!expr_equal(ta.reset[i], tb.reset[i])) return false;
        }
    }
    if (a.property.has_value() != b.property.has_value()) return false;
    if (a.property && !stl_equal(*a.property, *b.property)) return false;
    return true;
}

} // namespace hysim
