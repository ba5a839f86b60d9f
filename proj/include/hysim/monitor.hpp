#pragma once

// STL monitoring over verified trajectory enclosures. Atomic propositions
// (expr > 0) are turned into three-valued piecewise signals by sign-scanning
// the flow enclosures: where the range of the atom straddles zero the truth
// is genuinely unknown, and those stretches become boundary enclosures. The
// formula is then evaluated bottom-up with Kleene semantics; timed until is
// computed pointwise on the piece breakpoint grid. Robustness enclosures are
// supported for the untimed fragment only.

#include <limits>

#include "hysim/simulate.hpp"

namespace hysim {

struct UnsupportedTimedRobustness : std::runtime_error {
    UnsupportedTimedRobustness()
        : std::runtime_error("robustness signals are only defined for untimed formulas") {}
};

enum class Truth { False, Unknown, True };

inline const char* to_string(Truth t) {
    switch (t) {
        case Truth::False: return "false";
        case Truth::Unknown: return "unknown";
        case Truth::True: return "true";
    }
    return "?";
}

// Kleene connectives (False < Unknown < True).
inline Truth truth_not(Truth t) {
    if (t == Truth::True) return Truth::False;
    if (t == Truth::False) return Truth::True;
    return Truth::Unknown;
}
inline Truth truth_and(Truth a, Truth b) { return a < b ? a : b; }
inline Truth truth_or(Truth a, Truth b) { return a < b ? b : a; }

// Three-valued piecewise-constant signal on [0, horizon]. Pieces are stored
// half-open [a, b), ordered and non-overlapping. Unknown pieces play the
// role of interval-valued truth boundaries: the true switching time of the
// underlying continuous signal lies inside them.
struct Signal {
    struct Piece {
        double a = 0, b = 0;
        Truth v = Truth::Unknown;
    };
    double horizon = 0;
    std::vector<Piece> pieces;

    Truth at(double t) const {
        for (const auto& p : pieces)
            if (t >= p.a && (t < p.b || (t == p.b && p.b == horizon))) return p.v;
        return Truth::Unknown;
    }

    void push(double a, double b, Truth v) {
        if (!(b > a)) return;
        if (!pieces.empty() && pieces.back().v == v && pieces.back().b >= a) {
            pieces.back().b = std::max(pieces.back().b, b);
            return;
        }
        pieces.push_back({a, b, v});
    }

    // Truth intervals in onset/offset form: each pair is (onset, offset)
    // boundary enclosure of one maximal true stretch; degenerate pairs
    // (onset == offset) mark unknown blips with an empty certain core.
    std::vector<std::pair<Interval, Interval>> truth_intervals() const {
        std::vector<std::pair<Interval, Interval>> out;
        std::size_t n = pieces.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (pieces[i].v == Truth::True) {
                Interval onset = (i > 0 && pieces[i - 1].v == Truth::Unknown)
                                     ? Interval(pieces[i - 1].a, pieces[i - 1].b)
                                     : Interval(pieces[i].a);
                Interval offset = (i + 1 < n && pieces[i + 1].v == Truth::Unknown)
                                      ? Interval(pieces[i + 1].a, pieces[i + 1].b)
                                      : Interval(pieces[i].b);
                out.emplace_back(onset, offset);
            } else if (pieces[i].v == Truth::Unknown) {
                bool next_true = i + 1 < n && pieces[i + 1].v == Truth::True;
                bool prev_true = i > 0 && pieces[i - 1].v == Truth::True;
                if (!next_true && !prev_true) {
                    Interval u(pieces[i].a, pieces[i].b);
                    out.emplace_back(u, u);
                }
            }
        }
        return out;
    }
};

namespace detail {

// Sign classification of one atom over the valid part of one flow segment.
// Windows whose range straddles zero are bisected down to `min_bw` and left
// as Unknown; this is always sound (the switching times are inside them).
inline void scan_segment_signal(const FlowSegment& seg, const GuardCtx& gc,
                                double t_from, double t_to, double min_bw,
                                Signal& sig) {
    double a = std::max(t_from, seg.t_start);
    double b = std::min(t_to, seg.t_end);
    if (!(b > a)) return;
    std::deque<Interval> work;
    int parts = 8;
    for (int i = 0; i < parts; ++i)
        work.emplace_back(a + (b - a) * i / parts, a + (b - a) * (i + 1) / parts);
    // A transversal crossing needs ~2 log2(w / min_bw) windows. Atoms that
    // hug zero over a whole stretch (x - c with x == c identically) would
    // bisect the entire segment down to min_bw, so stop refining once the
    // budget is spent; the leftovers are soundly Unknown.
    int budget = 4096;
    while (!work.empty()) {
        Interval W = work.front();
        work.pop_front();
        Interval local(W.lo() - seg.t_start, W.hi() - seg.t_start);
        Interval r = guard_range(seg, gc, local);
        if (!r.contains(0.0)) {
            sig.push(W.lo(), W.hi(), r.lo() > 0 ? Truth::True : Truth::False);
            continue;
        }
        if (W.width() <= min_bw || --budget < 0) {
            sig.push(W.lo(), W.hi(), Truth::Unknown);
            continue;
        }
        double m = W.midpoint();
        work.emplace_front(m, W.hi());
        work.emplace_front(W.lo(), m);
    }
}

} // namespace detail

// Three-valued signal of `atom > 0` along the trajectory. Jump windows
// become pieces classified from the crossing enclosure (usually Unknown
// unless the atom keeps a definite sign across the jump).
inline Signal atomic_signal(const Model& m, const Trajectory& traj, const Expr& atom) {
    Signal sig;
    sig.horizon = traj.t_end;
    for (std::size_t ri = 0; ri < traj.runs.size(); ++ri) {
        const ModeRun& run = traj.runs[ri];
        const Location* loc = m.find_location(run.location);
        if (!loc) throw DomainError("unknown location in trajectory");
        detail::GuardCtx gc(atom, loc->field);
        double from = run.segments.empty() ? run.t_valid_end
                                           : run.segments.front().t_start;
        // boundary enclosures at one part in 1e9 of the span, floored near
        // the time's representable resolution
        double min_bw = std::max(1e-12 * (1.0 + std::abs(run.t_valid_end)),
                                 1e-9 * (run.t_valid_end - from));
        for (const auto& seg : run.segments)
            detail::scan_segment_signal(seg, gc, from, run.t_valid_end, min_bw, sig);
        if (ri < traj.events.size()) {
            const EventRecord& ev = traj.events[ri];
            Interval v = eval_box(atom, ev.state_at_crossing).hull(
                eval_box(atom, ev.state_after));
            Truth t = v.lo() > 0 ? Truth::True
                                 : (v.hi() < 0 ? Truth::False : Truth::Unknown);
            sig.push(ev.tau.lo(), ev.tau.hi(), t);
        }
    }
    return sig;
}

inline Signal signal_const(double horizon, Truth v) {
    Signal s;
    s.horizon = horizon;
    s.push(0.0, horizon, v);
    if (horizon <= 0) s.pieces.push_back({0, 0, v});
    return s;
}

inline Signal combine_not(const Signal& s) {
    Signal r;
    r.horizon = s.horizon;
    for (const auto& p : s.pieces) r.pieces.push_back({p.a, p.b, truth_not(p.v)});
    return r;
}

namespace detail {

inline std::vector<double> breakpoints(const Signal& s) {
    std::vector<double> b;
    for (const auto& p : s.pieces) {
        b.push_back(p.a);
        b.push_back(p.b);
    }
    return b;
}

inline Signal sweep_binary(const Signal& x, const Signal& y, Truth (*op)(Truth, Truth)) {
    double H = std::min(x.horizon, y.horizon);
    std::vector<double> bp = breakpoints(x);
    for (double t : breakpoints(y)) bp.push_back(t);
    bp.push_back(0.0);
    bp.push_back(H);
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    Signal r;
    r.horizon = H;
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
        double a = bp[i], b = bp[i + 1];
        if (a >= H || b <= 0 || !(b > a)) continue;
        double mid = 0.5 * (a + b);
        r.push(std::max(a, 0.0), std::min(b, H), op(x.at(mid), y.at(mid)));
    }
    if (r.pieces.empty()) r.pieces.push_back({0, 0, op(x.at(0), y.at(0))});
    return r;
}

// Point evaluation of (L U_[a,b] R)(t) on piecewise three-valued signals.
// Conservative at truncated horizons: True needs a certain witness inside
// the horizon, False needs certainty that no witness can ever appear.
inline Truth until_at(const Signal& L, const Signal& R, double t, double ta,
                      double tb, double H) {
    double s_lo = t + ta;
    double s_hi = tb == std::numeric_limits<double>::infinity()
                      ? std::numeric_limits<double>::infinity()
                      : t + tb;

    // u_true: L is certainly true on [t, u_true)
    double u_true = t;
    for (const auto& p : L.pieces) {
        if (p.b <= t) continue;
        if (p.a > u_true) break;
        if (p.v == Truth::True) u_true = std::max(u_true, p.b);
        else if (p.b > t) break;
    }
    if (u_true >= H) u_true = H; // beyond the horizon nothing is certain

    // certain witness: R true on a positive-measure subset of
    // [s_lo, min(s_hi, H, u_true)]
    double w_hi = std::min(std::min(s_hi, H), u_true);
    for (const auto& p : R.pieces) {
        if (p.v != Truth::True) continue;
        double lo = std::max({p.a, s_lo, t});
        double hi = std::min(p.b, w_hi);
        if (hi > lo) return Truth::True;
    }

    // u_false: first time >= t at which L is certainly false
    double u_false = std::numeric_limits<double>::infinity();
    for (const auto& p : L.pieces) {
        if (p.b <= t) continue;
        if (p.v == Truth::False) {
            u_false = std::max(p.a, t);
            break;
        }
    }

    // certain failure: R certainly false whenever a witness could still
    // occur, and the L-hold certainly breaks before anything unresolved
    double e = std::min(std::min(u_false, s_hi), H);
    bool r_false = true;
    for (const auto& p : R.pieces) {
        if (p.v == Truth::False) continue;
        double lo = std::max(p.a, s_lo);
        double hi = std::min(p.b, e);
        if (hi > lo) {
            r_false = false;
            break;
        }
    }
    if (s_lo > e) r_false = true;
    if (r_false) {
        if (s_hi <= e) return Truth::False;
        if (u_false <= e) return Truth::False;
    }
    return Truth::Unknown;
}

} // namespace detail

inline Signal combine_and(const Signal& a, const Signal& b) {
    return detail::sweep_binary(a, b, truth_and);
}
inline Signal combine_or(const Signal& a, const Signal& b) {
    return detail::sweep_binary(a, b, truth_or);
}

// (L U_[a,b] R) as a signal; pass b = infinity for the untimed until.
inline Signal until_timed(const Signal& L, const Signal& R, double a, double b) {
    double H = std::min(L.horizon, R.horizon);
    std::vector<double> bp{0.0, H};
    auto add_shifted = [&](double p) {
        for (double s : {p - a, p - b, p}) {
            if (std::isfinite(s) && s > 0 && s < H) bp.push_back(s);
        }
    };
    for (const auto& p : L.pieces) {
        add_shifted(p.a);
        add_shifted(p.b);
    }
    for (const auto& p : R.pieces) {
        add_shifted(p.a);
        add_shifted(p.b);
    }
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    Signal r;
    r.horizon = H;
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
        double lo = bp[i], hi = bp[i + 1];
        if (!(hi > lo)) continue;
        double mid = 0.5 * (lo + hi);
        r.push(lo, hi, detail::until_at(L, R, mid, a, b, H));
    }
    if (r.pieces.empty())
        r.pieces.push_back({0, 0, detail::until_at(L, R, 0.0, a, b, H)});
    return r;
}

enum class UnknownReason { None, BoundaryAtZero, VerificationFailed, HorizonTooShort };

struct Verdict {
    Truth value = Truth::Unknown;
    UnknownReason reason = UnknownReason::None;

    bool valid() const { return value == Truth::True; }
    bool unsat() const { return value == Truth::False; }
};

inline std::string to_string(const Verdict& v) {
    if (v.value == Truth::True) return "valid";
    if (v.value == Truth::False) return "unsat";
    switch (v.reason) {
        case UnknownReason::BoundaryAtZero: return "unknown(boundary-at-zero)";
        case UnknownReason::VerificationFailed: return "unknown(verification-failed)";
        case UnknownReason::HorizonTooShort: return "unknown(horizon-too-short)";
        default: return "unknown";
    }
}

inline Signal build_signal(const Model& m, const Trajectory& traj, const Stl& f) {
    switch (f->op) {
        case StlOp::Atom: return atomic_signal(m, traj, f->atom);
        case StlOp::True: return signal_const(traj.t_end, Truth::True);
        case StlOp::Not: return combine_not(build_signal(m, traj, f->a));
        case StlOp::And:
            return combine_and(build_signal(m, traj, f->a), build_signal(m, traj, f->b));
        case StlOp::Or:
            return combine_or(build_signal(m, traj, f->a), build_signal(m, traj, f->b));
        case StlOp::Until: {
            double hi = f->timed ? f->t_hi : std::numeric_limits<double>::infinity();
            double lo = f->timed ? f->t_lo : 0.0;
            return until_timed(build_signal(m, traj, f->a), build_signal(m, traj, f->b),
                               lo, hi);
        }
    }
    throw DomainError("unreachable formula node");
}

inline Verdict evaluate(const Model& m, const Trajectory& traj, const Stl& f) {
    Verdict v;
    if (traj.runs.empty()) {
        v.value = Truth::Unknown;
        v.reason = traj.verified() ? UnknownReason::HorizonTooShort
                                   : UnknownReason::VerificationFailed;
        return v;
    }
    Signal root = build_signal(m, traj, f);
    v.value = root.pieces.empty() ? Truth::Unknown : root.pieces.front().v;
    if (v.value == Truth::Unknown) {
        if (traj.t_end < stl_required_horizon(f))
            v.reason = traj.verified() ? UnknownReason::HorizonTooShort
                                       : UnknownReason::VerificationFailed;
        else
            v.reason = UnknownReason::BoundaryAtZero;
    }
    return v;
}

inline Verdict evaluate(const Model& m, const Trajectory& traj) {
    if (!m.property) throw DomainError("model has no property to monitor");
    return evaluate(m, traj, *m.property);
}

// ---------------------------------------------------------------------------
// Robustness enclosures (untimed fragment)

enum class Mono { Inc, Dec, Unknown };

struct RobustnessSignal {
    struct Seg {
        Interval time;
        Interval value;
        Mono mono = Mono::Unknown;
    };
    double horizon = 0;
    std::vector<Seg> segs; // ordered, tiling [0, horizon]

    // Enclosure of the robustness value at a time point.
    Interval at(double t) const {
        Interval acc = Interval::empty();
        for (const auto& s : segs)
            if (s.time.contains(t)) acc = acc.hull(s.value);
        if (acc.is_empty()) throw DomainError("robustness: time outside horizon");
        return acc;
    }
};

namespace detail {

inline void scan_segment_rob(const FlowSegment& seg, const GuardCtx& gc, double t_from,
                             double t_to, RobustnessSignal& out) {
    double a = std::max(t_from, seg.t_start);
    double b = std::min(t_to, seg.t_end);
    if (!(b > a)) return;
    int parts = 8, depth_limit = 6;
    struct Item {
        Interval w;
        int depth;
    };
    std::deque<Item> work;
    for (int i = 0; i < parts; ++i)
        work.push_back({Interval(a + (b - a) * i / parts, a + (b - a) * (i + 1) / parts), 0});
    while (!work.empty()) {
        Item it = work.front();
        work.pop_front();
        Interval local(it.w.lo() - seg.t_start, it.w.hi() - seg.t_start);
        Interval dr = eval_box(gc.lie, seg.eval_local(local));
        Mono mono = Mono::Unknown;
        if (dr.lo() > 0) mono = Mono::Inc;
        else if (dr.hi() < 0) mono = Mono::Dec;
        if (mono == Mono::Unknown && it.depth < depth_limit) {
            double m = it.w.midpoint();
            work.push_front({Interval(m, it.w.hi()), it.depth + 1});
            work.push_front({Interval(it.w.lo(), m), it.depth + 1});
            continue;
        }
        Interval v = guard_range(seg, gc, local);
        out.segs.push_back({it.w, v, mono});
    }
}

inline Interval imin(const Interval& a, const Interval& b) {
    return Interval(std::min(a.lo(), b.lo()), std::min(a.hi(), b.hi()));
}
inline Interval imax(const Interval& a, const Interval& b) {
    return Interval(std::max(a.lo(), b.lo()), std::max(a.hi(), b.hi()));
}

inline RobustnessSignal rob_sweep(const RobustnessSignal& x, const RobustnessSignal& y,
                                  bool take_min) {
    RobustnessSignal r;
    r.horizon = std::min(x.horizon, y.horizon);
    std::vector<double> bp{0.0, r.horizon};
    for (const auto& s : x.segs) {
        bp.push_back(s.time.lo());
        bp.push_back(s.time.hi());
    }
    for (const auto& s : y.segs) {
        bp.push_back(s.time.lo());
        bp.push_back(s.time.hi());
    }
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
        double lo = bp[i], hi = bp[i + 1];
        if (!(hi > lo) || lo >= r.horizon || hi <= 0) continue;
        double mid = 0.5 * (lo + hi);
        Interval va = x.at(mid), vb = y.at(mid);
        Mono ma = Mono::Unknown, mb = Mono::Unknown;
        for (const auto& s : x.segs)
            if (s.time.contains(mid)) ma = s.mono;
        for (const auto& s : y.segs)
            if (s.time.contains(mid)) mb = s.mono;
        RobustnessSignal::Seg seg;
        seg.time = Interval(std::max(lo, 0.0), std::min(hi, r.horizon));
        seg.value = take_min ? imin(va, vb) : imax(va, vb);
        seg.mono = (ma == mb) ? ma : Mono::Unknown;
        r.segs.push_back(seg);
    }
    return r;
}

} // namespace detail

inline RobustnessSignal robustness(const Model& m, const Trajectory& traj, const Stl& f) {
    if (stl_has_timed(f)) throw UnsupportedTimedRobustness();
    switch (f->op) {
        case StlOp::Atom: {
            RobustnessSignal out;
            out.horizon = traj.t_end;
            for (std::size_t ri = 0; ri < traj.runs.size(); ++ri) {
                const ModeRun& run = traj.runs[ri];
                const Location* loc = m.find_location(run.location);
                if (!loc) throw DomainError("unknown location in trajectory");
                detail::GuardCtx gc(f->atom, loc->field);
                double from = run.segments.empty() ? run.t_valid_end
                                                   : run.segments.front().t_start;
                for (const auto& seg : run.segments)
                    detail::scan_segment_rob(seg, gc, from, run.t_valid_end, out);
                if (ri < traj.events.size()) {
                    const EventRecord& ev = traj.events[ri];
                    if (ev.tau.width() > 0) {
                        Interval v = eval_box(f->atom, ev.state_at_crossing)
                                         .hull(eval_box(f->atom, ev.state_after));
                        out.segs.push_back({ev.tau, v, Mono::Unknown});
                    }
                }
            }
            return out;
        }
        case StlOp::True: {
            RobustnessSignal out;
            out.horizon = traj.t_end;
            out.segs.push_back({Interval(0.0, traj.t_end),
                                Interval(std::numeric_limits<double>::max()), Mono::Unknown});
            return out;
        }
        case StlOp::Not: {
            RobustnessSignal out = robustness(m, traj, f->a);
            for (auto& s : out.segs) {
                s.value = -s.value;
                s.mono = s.mono == Mono::Inc ? Mono::Dec
                                             : (s.mono == Mono::Dec ? Mono::Inc : Mono::Unknown);
            }
            return out;
        }
        case StlOp::And:
            return detail::rob_sweep(robustness(m, traj, f->a), robustness(m, traj, f->b),
                                     true);
        case StlOp::Or:
            return detail::rob_sweep(robustness(m, traj, f->a), robustness(m, traj, f->b),
                                     false);
        case StlOp::Until: {
            // untimed until: rho(t) = sup_{s>=t} min(rho_b(s), inf_{u in [t,s]} rho_a(u)),
            // computed right-to-left over the breakpoint grid; the horizon
            // truncates the sup (matching a reference computed on the same
            // window)
            RobustnessSignal A = robustness(m, traj, f->a);
            RobustnessSignal B = detail::rob_sweep(A, robustness(m, traj, f->b), true);
            // B holds min(rho_a, rho_b) on a grid refining A's breakpoints,
            // so each B piece lies inside a single A piece
            RobustnessSignal r;
            r.horizon = B.horizon;
            r.segs.resize(B.segs.size());
            Interval run_best(-std::numeric_limits<double>::max());
            for (std::size_t i = B.segs.size(); i-- > 0;) {
                const Interval& pair_min = B.segs[i].value; // min(a, b) on this piece
                Interval va = A.at(B.segs[i].time.midpoint());
                run_best = detail::imax(pair_min, detail::imin(va, run_best));
                r.segs[i] = {B.segs[i].time, run_best, Mono::Unknown};
            }
            return r;
        }
    }
    throw DomainError("unreachable formula node");
}

inline RobustnessSignal robustness(const Model& m, const Trajectory& traj) {
    if (!m.property) throw DomainError("model has no property to monitor");
    return robustness(m, traj, *m.property);
}

} // namespace hysim
