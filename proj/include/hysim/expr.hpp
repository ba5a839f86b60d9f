#pragma once

// Symbolic scalar expressions over state variables: interval evaluation
// (natural and centered forms), symbolic differentiation, Lie derivatives.
// Trees are immutable and shared; constant subtrees fold at construction.

#include <memory>
#include <string>
#include <vector>

#include "hysim/box.hpp"
#include "hysim/parallelotope.hpp"

namespace hysim {

enum class ExprOp {
    Const, Var,
    Neg, Sin, Cos, Exp, Log, Sqrt, Abs,
    Add, Sub, Mul, Div, Pow
};

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    ExprOp op;
    Interval value{0.0};  // Const
    std::size_t var = 0;  // Var
    long expn = 0;        // Pow (non-negative integer exponent)
    Expr a, b;
};

inline Expr constant(const Interval& v) {
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::Const;
    n->value = v;
    return n;
}
inline Expr constant(double v) { return constant(Interval(v)); }

inline Expr var(std::size_t index) {
    auto n = std::make_shared<ExprNode>();
    n->op = ExprOp::Var;
    n->var = index;
    return n;
}

inline bool is_const(const Expr& e) { return e->op == ExprOp::Const; }
inline bool is_const(const Expr& e, double v) {
    return e->op == ExprOp::Const && e->value.is_point() && e->value.lo() == v;
}

namespace detail {
inline Expr mk_unary(ExprOp op, Expr a) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->a = std::move(a);
    return n;
}
inline Expr mk_binary(ExprOp op, Expr a, Expr b) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}
inline Interval apply_unary(ExprOp op, const Interval& v) {
    switch (op) {
        case ExprOp::Neg: return -v;
        case ExprOp::Sin: return sin(v);
        case ExprOp::Cos: return cos(v);
        case ExprOp::Exp: return exp(v);
        case ExprOp::Log: return log(v);
        case ExprOp::Sqrt: return sqrt(v);
        case ExprOp::Abs: return abs(v);
        default: throw DomainError("not a unary op");
    }
}
} // namespace detail

inline Expr neg(Expr a) {
    if (is_const(a)) return constant(-a->value);
    if (a->op == ExprOp::Neg) return a->a;
    return detail::mk_unary(ExprOp::Neg, std::move(a));
}
inline Expr sin(Expr a) {
    if (is_const(a)) return constant(sin(a->value));
    return detail::mk_unary(ExprOp::Sin, std::move(a));
}
inline Expr cos(Expr a) {
    if (is_const(a)) return constant(cos(a->value));
    return detail::mk_unary(ExprOp::Cos, std::move(a));
}
inline Expr exp(Expr a) {
    if (is_const(a)) return constant(exp(a->value));
    return detail::mk_unary(ExprOp::Exp, std::move(a));
}
inline Expr log(Expr a) {
    if (is_const(a)) return constant(log(a->value));
    return detail::mk_unary(ExprOp::Log, std::move(a));
}
inline Expr sqrt(Expr a) {
    if (is_const(a)) return constant(sqrt(a->value));
    return detail::mk_unary(ExprOp::Sqrt, std::move(a));
}
inline Expr abs(Expr a) {
    if (is_const(a)) return constant(abs(a->value));
    return detail::mk_unary(ExprOp::Abs, std::move(a));
}

inline Expr add(Expr a, Expr b) {
    if (is_const(a) && is_const(b)) return constant(a->value + b->value);
    if (is_const(a, 0)) return b;
    if (is_const(b, 0)) return a;
    return detail::mk_binary(ExprOp::Add, std::move(a), std::move(b));
}
inline Expr sub(Expr a, Expr b) {
    if (is_const(a) && is_const(b)) return constant(a->value - b->value);
    if (is_const(b, 0)) return a;
    if (is_const(a, 0)) return neg(std::move(b));
    return detail::mk_binary(ExprOp::Sub, std::move(a), std::move(b));
}
inline Expr mul(Expr a, Expr b) {
    if (is_const(a) && is_const(b)) return constant(a->value * b->value);
    if (is_const(a, 0) || is_const(b, 0)) return constant(0.0);
    if (is_const(a, 1)) return b;
    if (is_const(b, 1)) return a;
    return detail::mk_binary(ExprOp::Mul, std::move(a), std::move(b));
}
inline Expr div(Expr a, Expr b) {
    if (is_const(a) && is_const(b)) return constant(a->value / b->value);
    if (is_const(a, 0)) return constant(0.0);
    if (is_const(b, 1)) return a;
    return detail::mk_binary(ExprOp::Div, std::move(a), std::move(b));
}
inline Expr pow_int(Expr a, long n) {
    if (n < 0) throw DomainError("pow: negative exponent");
    if (n == 0) return constant(1.0);
    if (n == 1) return a;
    if (is_const(a)) return constant(pow_int(a->value, n));
    auto node = std::make_shared<ExprNode>();
    node->op = ExprOp::Pow;
    node->a = std::move(a);
    node->expn = n;
    return node;
}

// Natural interval extension over a box environment.
inline Interval eval_box(const Expr& e, const Box& env) {
    switch (e->op) {
        case ExprOp::Const: return e->value;
        case ExprOp::Var:
            if (e->var >= env.dim()) throw DomainError("variable index out of range");
            return env[e->var];
        case ExprOp::Add: return eval_box(e->a, env) + eval_box(e->b, env);
        case ExprOp::Sub: return eval_box(e->a, env) - eval_box(e->b, env);
        case ExprOp::Mul: return eval_box(e->a, env) * eval_box(e->b, env);
        case ExprOp::Div: return eval_box(e->a, env) / eval_box(e->b, env);
        case ExprOp::Pow: return pow_int(eval_box(e->a, env), e->expn);
        default: return detail::apply_unary(e->op, eval_box(e->a, env));
    }
}

// Symbolic derivative with respect to one variable.
inline Expr differentiate(const Expr& e, std::size_t var_index) {
    switch (e->op) {
        case ExprOp::Const: return constant(0.0);
        case ExprOp::Var: return constant(e->var == var_index ? 1.0 : 0.0);
        case ExprOp::Neg: return neg(differentiate(e->a, var_index));
        case ExprOp::Sin: return mul(cos(e->a), differentiate(e->a, var_index));
        case ExprOp::Cos: return neg(mul(sin(e->a), differentiate(e->a, var_index)));
        case ExprOp::Exp: return mul(exp(e->a), differentiate(e->a, var_index));
        case ExprOp::Log: return div(differentiate(e->a, var_index), e->a);
        case ExprOp::Sqrt:
            return div(differentiate(e->a, var_index), mul(constant(2.0), sqrt(e->a)));
        case ExprOp::Abs:
            // d|u| = sign(u) du; representable as u/|u| * du
            return mul(div(e->a, abs(e->a)), differentiate(e->a, var_index));
        case ExprOp::Add:
            return add(differentiate(e->a, var_index), differentiate(e->b, var_index));
        case ExprOp::Sub:
            return sub(differentiate(e->a, var_index), differentiate(e->b, var_index));
        case ExprOp::Mul:
            return add(mul(differentiate(e->a, var_index), e->b),
                       mul(e->a, differentiate(e->b, var_index)));
        case ExprOp::Div:
            return div(sub(mul(differentiate(e->a, var_index), e->b),
                           mul(e->a, differentiate(e->b, var_index))),
                       pow_int(e->b, 2));
        case ExprOp::Pow:
            return mul(mul(constant((double)e->expn), pow_int(e->a, e->expn - 1)),
                       differentiate(e->a, var_index));
    }
    throw DomainError("unreachable");
}

struct VectorField {
    std::vector<Expr> components;  // one per state variable
    std::size_t dim() const { return components.size(); }

    Box eval(const Box& env) const {
        Box r(dim());
        for (std::size_t i = 0; i < dim(); ++i) r[i] = eval_box(components[i], env);
        return r;
    }
};

// Gradient of e over env, as a row box.
inline Box gradient(const Expr& e, std::size_t dim, const Box& env) {
    Box g(dim);
    for (std::size_t i = 0; i < dim; ++i) g[i] = eval_box(differentiate(e, i), env);
    return g;
}

// Time derivative of g along f: sum_i dg/dx_i * f_i.
inline Expr lie_derivative(const Expr& g, const VectorField& f) {
    Expr acc = constant(0.0);
    for (std::size_t i = 0; i < f.dim(); ++i)
        acc = add(acc, mul(differentiate(g, i), f.components[i]));
    return acc;
}

// Centered (mean-value) form over a parallelotope, intersected with the
// natural extension over its bounding box:
//   e(x) in e(x~) + (grad e(X) * A) . u
inline Interval eval_ptope(const Expr& e, const Parallelotope& p) {
    Box X = p.to_box();
    Interval natural = eval_box(e, X);
    Box center_box = Box::from_points(p.center());
    Interval at_center = eval_box(e, center_box);
    Box g = gradient(e, p.dim(), X);
    Box row = row_times_mat(g, IMat(p.matrix()));
    Interval centered = at_center + dot(row, p.u());
    return natural.intersect(centered);
}

// ---------------------------------------------------------------------------
// Printing (used by model reports and the parser round-trip).

inline std::string to_string(const Expr& e, const std::vector<std::string>& names) {
    auto paren = [](const std::string& s) { return "(" + s + ")"; };
    auto prec = [](const Expr& x) -> int {
        switch (x->op) {
            case ExprOp::Add: case ExprOp::Sub: return 1;
            case ExprOp::Mul: case ExprOp::Div: return 2;
            case ExprOp::Neg: return 3;
            case ExprOp::Pow: return 4;
            default: return 5;
        }
    };
    std::function<std::string(const Expr&, int)> go = [&](const Expr& x, int outer) {
        std::string s;
        int p = prec(x);
        switch (x->op) {
            case ExprOp::Const: {
                const Interval& v = x->value;
                if (v.is_point()) {
                    char buf[40];
                    std::snprintf(buf, sizeof buf, "%.17g", v.lo());
                    s = buf;
                    if (v.lo() < 0) s = "(" + s + ")";
                } else {
                    s = to_string(v);
                }
                break;
            }
            case ExprOp::Var:
                s = x->var < names.size() ? names[x->var] : ("x" + std::to_string(x->var));
                break;
            case ExprOp::Neg: s = "-" + go(x->a, p); break;
            case ExprOp::Sin: s = "sin(" + go(x->a, 0) + ")"; break;
            case ExprOp::Cos: s = "cos(" + go(x->a, 0) + ")"; break;
            case ExprOp::Exp: s = "exp(" + go(x->a, 0) + ")"; break;
            case ExprOp::Log: s = "log(" + go(x->a, 0) + ")"; break;
            case ExprOp::Sqrt: s = "sqrt(" + go(x->a, 0) + ")"; break;
            case ExprOp::Abs: s = "abs(" + go(x->a, 0) + ")"; break;
            case ExprOp::Add: s = go(x->a, p) + " + " + go(x->b, p + 1); break;
            case ExprOp::Sub: s = go(x->a, p) + " - " + go(x->b, p + 1); break;
            case ExprOp::Mul: s = go(x->a, p) + "*" + go(x->b, p + 1); break;
            case ExprOp::Div: s = go(x->a, p) + "/" + go(x->b, p + 1); break;
            case ExprOp::Pow: s = go(x->a, p + 1) + "^" + std::to_string(x->expn); break;
        }
        return outer > p ? paren(s) : s;
    };
    return go(e, 0);
}

} // namespace hysim
