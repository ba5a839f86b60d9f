#pragma once

// Interval Taylor coefficients of ODE solutions via recurrence on a
// flattened expression tape. The classic AD scheme: evaluate the vector
// field on truncated power series order by order, feeding each field
// coefficient back as the next solution coefficient. Shared subtrees are
// evaluated once (tape slots are memoized by node identity).

#include <unordered_map>
#include <vector>

#include "hysim/expr.hpp"

namespace hysim {

class TaylorTape {
public:
    static TaylorTape compile(const VectorField& f) {
        TaylorTape t;
        t.nvars_ = f.dim();
        t.nslots_ = (int)t.nvars_;
        std::unordered_map<const ExprNode*, int> memo;
        for (const auto& comp : f.components)
            t.outputs_.push_back(t.emit(comp, memo));
        return t;
    }

    std::size_t nvars() const { return nvars_; }

    // Solution Taylor coefficients c_0..c_k at x0 (c_0 = x0):
    // x(t) = sum c_i t^i with c_{i+1} = f(x)_i / (i+1).
    // Returned as coeffs[order][component].
    std::vector<Box> ode_coefficients(const Box& x0, int k) const {
        Workspace ws;
        run(x0, k, ws);
        std::vector<Box> out(k + 1, Box(nvars_));
        for (int n = 0; n <= k; ++n)
            for (std::size_t i = 0; i < nvars_; ++i) out[n][i] = ws.slots[i][n];
        return out;
    }

private:
    enum class TOp { Const, Neg, Add, Sub, Mul, Div, Exp, Log, Sqrt, Abs, SinCos };

    struct Instr {
        TOp op;
        int a = -1, b = -1;    // input slots
        Interval cval{0.0};    // Const
        int out = -1;          // output slot
        int out2 = -1;         // cos slot for SinCos
    };

    struct Workspace {
        // slots[slot][order]
        std::vector<std::vector<Interval>> slots;
    };

    int new_slot() { return nslots_++; }

    int emit(const Expr& e, std::unordered_map<const ExprNode*, int>& memo) {
        auto it = memo.find(e.get());
        if (it != memo.end()) return it->second;
        int slot;
        switch (e->op) {
            case ExprOp::Const: {
                Instr in;
                in.op = TOp::Const;
                in.cval = e->value;
                in.out = slot = new_slot();
                instrs_.push_back(in);
                break;
            }
            case ExprOp::Var:
                if (e->var >= nvars_) throw DomainError("variable index out of range");
                slot = (int)e->var;
                break;
            case ExprOp::Pow: {
                // expand to a multiplication chain (exponents are small)
                int base = emit(e->a, memo);
                long n = e->expn;
                int acc = base;
                for (long i = 1; i < n; ++i) {
                    Instr in;
                    in.op = TOp::Mul;
                    in.a = acc;
                    in.b = base;
                    in.out = acc = new_slot();
                    instrs_.push_back(in);
                }
                slot = acc;
                break;
            }
            case ExprOp::Sin:
            case ExprOp::Cos: {
                int u = emit(e->a, memo);
                auto key = sincos_.find(u);
                int s_slot, c_slot;
                if (key != sincos_.end()) {
                    s_slot = key->second.first;
                    c_slot = key->second.second;
                } else {
                    Instr in;
                    in.op = TOp::SinCos;
                    in.a = u;
                    in.out = s_slot = new_slot();
                    in.out2 = c_slot = new_slot();
                    instrs_.push_back(in);
                    sincos_[u] = {s_slot, c_slot};
                }
                slot = (e->op == ExprOp::Sin) ? s_slot : c_slot;
                break;
            }
            case ExprOp::Add:
            case ExprOp::Sub:
            case ExprOp::Mul:
            case ExprOp::Div: {
                Instr in;
                switch (e->op) {
                    case ExprOp::Add: in.op = TOp::Add; break;
                    case ExprOp::Sub: in.op = TOp::Sub; break;
                    case ExprOp::Mul: in.op = TOp::Mul; break;
                    default: in.op = TOp::Div; break;
                }
                in.a = emit(e->a, memo);
                in.b = emit(e->b, memo);
                in.out = slot = new_slot();
                instrs_.push_back(in);
                break;
            }
            default: { // remaining unary ops
                Instr in;
                switch (e->op) {
                    case ExprOp::Neg: in.op = TOp::Neg; break;
                    case ExprOp::Exp: in.op = TOp::Exp; break;
                    case ExprOp::Log: in.op = TOp::Log; break;
                    case ExprOp::Sqrt: in.op = TOp::Sqrt; break;
                    case ExprOp::Abs: in.op = TOp::Abs; break;
                    default: throw DomainError("unsupported op in taylor tape");
                }
                in.a = emit(e->a, memo);
                in.out = slot = new_slot();
                instrs_.push_back(in);
                break;
            }
        }
        memo[e.get()] = slot;
        return slot;
    }

    void step_order(int n, Workspace& ws) const {
        auto& S = ws.slots;
        for (const auto& in : instrs_) {
            switch (in.op) {
                case TOp::Const:
                    S[in.out][n] = (n == 0) ? in.cval : Interval(0.0);
                    break;
                case TOp::Neg:
                    S[in.out][n] = -S[in.a][n];
                    break;
                case TOp::Add:
                    S[in.out][n] = S[in.a][n] + S[in.b][n];
                    break;
                case TOp::Sub:
                    S[in.out][n] = S[in.a][n] - S[in.b][n];
                    break;
                case TOp::Mul: {
                    Interval acc(0.0);
                    for (int j = 0; j <= n; ++j) acc += S[in.a][j] * S[in.b][n - j];
                    S[in.out][n] = acc;
                    break;
                }
                case TOp::Div: {
                    Interval acc = S[in.a][n];
                    for (int j = 0; j < n; ++j) acc -= S[in.out][j] * S[in.b][n - j];
                    S[in.out][n] = acc / S[in.b][0];
                    break;
                }
                case TOp::Exp: {
                    if (n == 0) { S[in.out][0] = exp(S[in.a][0]); break; }
                    Interval acc(0.0);
                    for (int j = 1; j <= n; ++j)
                        acc += Interval((double)j) * S[in.a][j] * S[in.out][n - j];
                    S[in.out][n] = acc / Interval((double)n);
                    break;
                }
                case TOp::Log: {
                    if (n == 0) { S[in.out][0] = log(S[in.a][0]); break; }
                    Interval acc = S[in.a][n] * Interval((double)n);
                    for (int j = 1; j < n; ++j)
                        acc -= Interval((double)j) * S[in.out][j] * S[in.a][n - j];
                    S[in.out][n] = acc / (Interval((double)n) * S[in.a][0]);
                    break;
                }
                case TOp::Sqrt: {
                    if (n == 0) { S[in.out][0] = sqrt(S[in.a][0]); break; }
                    Interval acc = S[in.a][n];
                    for (int j = 1; j < n; ++j) acc -= S[in.out][j] * S[in.out][n - j];
                    S[in.out][n] = acc / (Interval(2.0) * S[in.out][0]);
                    break;
                }
                case TOp::Abs: {
                    const Interval& u0 = S[in.a][0];
                    if (u0.lo() > 0) S[in.out][n] = S[in.a][n];
                    else if (u0.hi() < 0) S[in.out][n] = -S[in.a][n];
                    else throw DomainError("abs not differentiable at 0 along the flow");
                    break;
                }
                case TOp::SinCos: {
                    if (n == 0) {
                        S[in.out][0] = sin(S[in.a][0]);
                        S[in.out2][0] = cos(S[in.a][0]);
                        break;
                    }
                    Interval s(0.0), c(0.0);
                    for (int j = 1; j <= n; ++j) {
                        Interval ju = Interval((double)j) * S[in.a][j];
                        s += ju * S[in.out2][n - j];
                        c += ju * S[in.out][n - j];
                    }
                    S[in.out][n] = s / Interval((double)n);
                    S[in.out2][n] = -c / Interval((double)n);
                    break;
                }
            }
        }
    }

    void run(const Box& x0, int k, Workspace& ws) const {
        if (x0.dim() != nvars_) throw DomainError("taylor: dimension mismatch");
        ws.slots.assign(nslots_, std::vector<Interval>(k + 1, Interval(0.0)));
        for (std::size_t i = 0; i < nvars_; ++i) ws.slots[i][0] = x0[i];
        for (int n = 0; n < k; ++n) {
            step_order(n, ws);
            for (std::size_t i = 0; i < nvars_; ++i)
                ws.slots[i][n + 1] = ws.slots[outputs_[i]][n] / Interval((double)(n + 1));
        }
    }

    std::size_t nvars_ = 0;
    int nslots_ = 0;
    std::vector<Instr> instrs_;
    std::vector<int> outputs_;
    std::unordered_map<int, std::pair<int, int>> sincos_;
};

// Convenience wrapper matching the operation contract: Taylor coefficients
// x^(i)/i! of the solution through x0, as one Box per order.
inline std::vector<Box> taylor_coefficients(const VectorField& f, const Box& x0, int k) {
    if (k < 1) throw DomainError("taylor_coefficients: order must be >= 1");
    auto tape = TaylorTape::compile(f);
    return tape.ode_coefficients(x0, k);
}

inline std::vector<Box> taylor_coefficients(const VectorField& f, const Parallelotope& p, int k) {
    return taylor_coefficients(f, p.to_box(), k);
}

// Variational augmentation: state (x, V) with V' = Df(x) V, V row-major at
// offset n. Initial V is the identity; the V block of the solution encloses
// the flow Jacobian with respect to the initial state.
inline VectorField augment_variational(const VectorField& f) {
    std::size_t n = f.dim();
    VectorField aug;
    aug.components = f.components;
    std::vector<std::vector<Expr>> df(n, std::vector<Expr>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < n; ++l)
            df[i][l] = differentiate(f.components[i], l);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Expr acc = constant(0.0);
            for (std::size_t l = 0; l < n; ++l)
                acc = add(acc, mul(df[i][l], var(n + l * n + j)));
            aug.components.push_back(acc);
        }
    return aug;
}

// Horner evaluation of one component's coefficients at interval time t.
inline Interval eval_series(const std::vector<Box>& coeffs, std::size_t comp, const Interval& t) {
    Interval acc = coeffs.back()[comp];
    for (int i = (int)coeffs.size() - 2; i >= 0; --i)
        acc = coeffs[i][comp] + t * acc;
    return acc;
}

} // namespace hysim
