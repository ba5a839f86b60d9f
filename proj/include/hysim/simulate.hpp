#pragma once

// Hybrid simulation: guaranteed flow interleaved with verified discrete
// events. Event times are isolated per segment by sign scanning over
// sub-windows and then contracted with an interval Newton step; the Newton
// contraction certifies that every trajectory in the set crosses the guard
// exactly once inside the returned time interval. Jumps are applied as one
// composite flow-jump-flow map so the whole step costs a single enclosure
// hull (one wrapping per jump).

#include <cstdio>
#include <deque>

#include "hysim/model.hpp"
#include "hysim/ode.hpp"

namespace hysim {

struct SimOptions {
    OdeOptions ode;
    double tol_event = 1e-10;  // target width of crossing time enclosures
    int event_subdivisions = 8;
    long detect_budget = 20000; // max windows examined per guard per segment
    int max_jumps = 100000;
    double max_time = 1e6;
};

enum class SimStatus { Completed, VerificationFailed, StepFailure };

inline const char* to_string(SimStatus s) {
    switch (s) {
        case SimStatus::Completed: return "completed";
        case SimStatus::VerificationFailed: return "verification-failed";
        case SimStatus::StepFailure: return "step-failure";
    }
    return "?";
}

struct EventRecord {
    std::string source, target;
    std::size_t transition_index = 0; // within the source location
    Interval tau;                     // global crossing time enclosure
    Box state_at_crossing;            // pre-reset enclosure on the guard
    Box state_after;                  // post set at t = hi(tau)
};

// One continuous mode episode. Segments cover [t_start of first,
// t_end of last]; when the run ends in a jump the enclosure is only valid
// as a pure-mode signal up to t_valid_end = lo(tau) of that jump.
struct ModeRun {
    std::string location;
    std::vector<FlowSegment> segments;
    double t_valid_end = 0;

    Box eval(const Interval& t_global) const {
        Box acc;
        bool first = true;
        for (const auto& seg : segments) {
            if (t_global.hi() < seg.t_start || t_global.lo() > seg.t_end) continue;
            Box b = seg.eval_global(t_global);
            acc = first ? b : acc.hull(b);
            first = false;
        }
        if (first) throw DomainError("mode run: time outside covered range");
        return acc;
    }
};

struct Trajectory {
    std::vector<ModeRun> runs;
    std::vector<EventRecord> events;
    SimStatus status = SimStatus::Completed;
    std::string failure_reason;
    double t_end = 0;     // last globally certified time
    bool ptope_mode = true;

    bool verified() const { return status == SimStatus::Completed; }
};

namespace detail {

// Guard with its symbolic derivatives, precomputed once per mode run.
struct GuardCtx {
    Expr g;
    std::vector<Expr> grad; // dg/dx_i
    Expr lie;               // dg/dt along the mode's field

    GuardCtx(const Expr& guard, const VectorField& f) : g(guard) {
        for (std::size_t i = 0; i < f.dim(); ++i) grad.push_back(differentiate(guard, i));
        lie = lie_derivative(guard, f);
    }
};

// Range of g over the set at local times W, tightened by the mean-value
// form through the segment's variational data.
inline Interval guard_range(const FlowSegment& seg, const GuardCtx& gc, const Interval& w) {
    Box X = seg.eval_local(w);
    Interval natural = eval_box(gc.g, X);
    if (!seg.ptope_mode) return natural;
    Box zc = seg.center_local(w);
    Interval gz = eval_box(gc.g, zc.intersect(X));
    Box grad(seg.dim());
    for (std::size_t i = 0; i < seg.dim(); ++i) grad[i] = eval_box(gc.grad[i], X);
    IMat ja = seg.jac_local(w) * IMat(seg.x_start.matrix());
    Box row = row_times_mat(grad, ja);
    Interval centered = gz + dot(row, seg.x_start.u());
    return natural.intersect(centered);
}

struct EventCandidate {
    std::size_t transition_index = 0;
    Interval tau_local;   // certified crossing window, local to the segment
    bool at_segment_end = false; // zero region touches the far segment edge
};

struct EventFailure : std::runtime_error {
    explicit EventFailure(const std::string& w) : std::runtime_error(w) {}
};

// Interval Newton contraction of the crossing time of g inside the local
// window T. Returns the contracted window; certifies that each trajectory
// has exactly one crossing inside it. Throws EventFailure when the
// derivative loses sign or the contraction never certifies uniqueness.
inline Interval newton_crossing(const FlowSegment& seg, const GuardCtx& gc,
                                Interval T, double tol, bool& exists) {
    bool unique = false;
    exists = true;
    for (int it = 0; it < 60; ++it) {
        Interval gp = eval_box(gc.lie, seg.eval_local(T));
        if (gp.contains(0.0))
            throw EventFailure("tangential crossing: guard derivative loses sign");
        double m = T.midpoint();
        Interval gm = guard_range(seg, gc, Interval(m));
        Interval N = Interval(m) - gm / gp;
        Interval Tn = N.intersect(T);
        if (Tn.is_empty()) { exists = false; return T; }
        if (N.lo() > T.lo() && N.hi() < T.hi()) unique = true;
        // contract as far as the enclosure allows; `tol` is only the width
        // at which uniqueness must already be certified
        bool progress = Tn.width() < 0.9 * T.width();
        T = Tn;
        if (!progress) {
            if (T.width() > tol && !unique)
                throw EventFailure("ambiguous event: crossing window stalled at width " +
                                   std::to_string(T.width()));
            break;
        }
    }
    if (!unique)
        throw EventFailure("ambiguous event: crossing time could not be isolated");
    return T;
}

} // namespace detail

// Full event scan of one segment for one location. `armed` carries the
// per-transition sign state across segments of the same run: 0 = not yet
// sign-definite (entered on or near the guard), +1/-1 = armed with that
// guard sign. Only armed transitions can fire; unarmed ones must be
// provably moving off the guard while their range straddles zero.
inline std::optional<detail::EventCandidate> detect_event(
    const FlowSegment& seg, const Location& loc,
    const std::vector<detail::GuardCtx>& guards, std::vector<int>& armed,
    const SimOptions& opts) {
    double h = seg.h();
    int parts = opts.event_subdivisions;
    double min_w = h * 1e-9; // bisection floor before giving up
    std::optional<detail::EventCandidate> best;
    for (std::size_t ti = 0; ti < loc.transitions.size(); ++ti) {
        const detail::GuardCtx& gc = guards[ti];
        // worklist of disjoint windows in increasing time order; windows
        // whose guard range straddles zero are bisected until the range or
        // the guard derivative becomes sign-definite
        std::deque<Interval> work;
        for (int w = 0; w < parts; ++w)
            work.emplace_back(h * w / parts, h * (w + 1) / parts);
        long processed = 0;
        while (!work.empty()) {
            Interval W = work.front();
            work.pop_front();
            if (++processed > opts.detect_budget)
                throw detail::EventFailure(
                    "tangential crossing suspected in '" + loc.name +
                    "': guard sign could not be resolved within the work budget");
            Interval r = detail::guard_range(seg, gc, W);
#ifdef HYSIM_DETECT_DEBUG
            if (processed % 100000 == 0)
                std::fprintf(stderr,
                             "[detect] ti=%zu seg=[%.6g,%.6g] W=[%.9g,%.9g] w=%.3g r=[%.3g,%.3g] "
                             "armed=%d queue=%zu\n",
                             ti, seg.t_start, seg.t_end, W.lo(), W.hi(), W.width(), r.lo(),
                             r.hi(), armed[ti], work.size());
#endif
            if (!r.contains(0.0)) {
                armed[ti] = r.lo() > 0 ? 1 : -1;
                continue;
            }
            Interval dr = eval_box(gc.lie, seg.eval_local(W));
            if (dr.contains(0.0)) {
                // zero guard range and indefinite derivative: too coarse to
                // classify; bisect until it resolves or report tangency
                if (W.width() <= min_w) {
                    char d[160];
                    std::snprintf(d, sizeof d,
                                  " (t=%.9g g=[%.3g,%.3g] dg=[%.3g,%.3g])",
                                  seg.t_start + W.lo(), r.lo(), r.hi(), dr.lo(), dr.hi());
                    throw detail::EventFailure(
                        (armed[ti] == 0
                             ? "cannot arm guard in '" + loc.name +
                                   "': derivative sign undetermined on the guard"
                             : "tangential crossing suspected in '" + loc.name +
                                   "': guard and derivative both straddle zero") +
                        std::string(d));
                }
                double m = W.midpoint();
                work.emplace_front(m, W.hi());
                work.emplace_front(W.lo(), m);
                continue;
            }
            if (armed[ti] == 0) {
                // monotone guard value while still on the guard surface:
                // departing; stay unarmed until the range is sign-definite
                continue;
            }
            // armed, range straddles zero, derivative sign-definite: a
            // transversal crossing zone. Extend it over adjacent zero
            // windows, but only as far as the extended zone keeps a
            // sign-definite derivative; a too-coarse neighbor is split
            // rather than merged wholesale, so the zone never has to be
            // re-processed.
            Interval zone = W;
            bool tangential = false;
            while (!work.empty()) {
                if (++processed > opts.detect_budget)
                    throw detail::EventFailure(
                        "tangential crossing suspected in '" + loc.name +
                        "': guard sign could not be resolved within the work budget");
                Interval Wn = work.front();
                if (!detail::guard_range(seg, gc, Wn).contains(0.0)) break;
                Interval ext = zone.hull(Wn);
                if (!eval_box(gc.lie, seg.eval_local(ext)).contains(0.0)) {
                    zone = ext;
                    work.pop_front();
                    continue;
                }
                if (Wn.width() <= min_w) { tangential = true; break; }
                work.pop_front();
                double m = Wn.midpoint();
                work.emplace_front(m, Wn.hi());
                work.emplace_front(Wn.lo(), m);
            }
            if (tangential)
                throw detail::EventFailure(
                    "tangential crossing suspected in '" + loc.name +
                    "': guard and derivative both straddle zero");
            if (zone.hi() >= h * (1.0 - 1e-12)) {
                // zero region touches the far edge; caller retakes the step
                detail::EventCandidate c;
                c.transition_index = ti;
                c.tau_local = zone;
                c.at_segment_end = true;
                if (!best || c.tau_local.lo() < best->tau_local.lo()) best = c;
                break;
            }
            bool exists = true;
            Interval tau = detail::newton_crossing(seg, gc, zone, opts.tol_event, exists);
            if (!exists) { // verified there is no crossing inside the zone
                armed[ti] = 0;
                continue;
            }
            // side conditions decide whether this crossing fires
            Box X_tau = seg.eval_local(tau);
            bool fires = true;
            for (const Expr& q : loc.transitions[ti].guard_ineqs) {
                Interval v = eval_box(q, X_tau);
                if (v.hi() <= 0) { fires = false; break; }
                if (v.lo() <= 0)
                    throw detail::EventFailure(
                        "guard inequality undetermined at crossing");
            }
            if (!fires) {
                // guard surface crossed with the transition disabled; keep
                // scanning past the crossing (sign re-arms from the ranges)
                armed[ti] = 0;
                continue;
            }
            detail::EventCandidate c;
            c.transition_index = ti;
            c.tau_local = tau;
            c.at_segment_end = false;
            if (!best || c.tau_local.lo() < best->tau_local.lo()) best = c;
            break; // earliest firing for this transition found
        }
    }
    return best;
}

namespace detail {

inline Box eval_exprs(const std::vector<Expr>& es, const Box& env) {
    Box r(es.size());
    for (std::size_t i = 0; i < es.size(); ++i) r[i] = eval_box(es[i], env);
    return r;
}

inline IMat expr_jacobian(const std::vector<Expr>& es, const Box& env) {
    std::size_t n = es.size();
    IMat j(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            j(i, k) = eval_box(differentiate(es[i], k), env);
    return j;
}

// Thin crossing time of the start-center trajectory inside tau_local.
inline Interval center_crossing(const FlowSegment& seg, const GuardCtx& gc,
                                Interval T, double tol) {
    for (int it = 0; it < 60; ++it) {
        Interval gp = eval_box(gc.lie, seg.center_local(T));
        if (gp.contains(0.0)) break;
        double m = T.midpoint();
        Interval gm = eval_box(gc.g, seg.center_local(Interval(m)));
        Interval Tn = (Interval(m) - gm / gp).intersect(T);
        if (Tn.is_empty() || Tn.width() >= 0.98 * T.width()) break;
        T = Tn; // contract to the bitter end; tightness here sets the
                // post-jump set width
        (void)tol;
    }
    return T;
}

} // namespace detail

// Composite flow-jump-flow step. Consumes the pre segment that covers the
// certified crossing window and produces the post set synchronized at
// t = hi(tau), wrapped into a parallelotope exactly once.
inline std::pair<Parallelotope, EventRecord> composite_jump_step(
    const FlowSegment& seg, const Location& from, std::size_t ti,
    const detail::GuardCtx& gc, const Interval& tau_local,
    const VectorField& post_field, const SimOptions& opts) {
    const Transition& tr = from.transitions[ti];
    std::size_t n = seg.dim();
    Interval tau_global = tau_local + Interval(seg.t_start);
    double tbar = tau_global.hi();
    double w = tau_local.width();

    Box X_tau = seg.eval_local(tau_local);
    Box Y_tau = detail::eval_exprs(tr.reset, X_tau);

    EventRecord ev;
    ev.source = from.name;
    ev.target = tr.target;
    ev.transition_index = ti;
    ev.tau = tau_global;
    ev.state_at_crossing = X_tau;

    // post mini-flow covering durations [0, w]
    OdeOptions post_opts = opts.ode;
    post_opts.box_mode = false;
    post_opts.h0 = std::max(w, post_opts.h_min);
    FlowStepper post_stepper(post_field, post_opts);
    FlowSegment post_seg = post_stepper.step(Parallelotope::from_box(Y_tau), 0.0,
                                             std::max(w, post_opts.h_min));
    if (post_seg.h() < w)
        throw detail::EventFailure("post-jump enclosure failed over the crossing window");
    Interval dwin(0.0, w);
    Box X_tbar = post_seg.eval_local(dwin);

    if (!seg.ptope_mode) {
        ev.state_after = X_tbar;
        return {Parallelotope::from_box(X_tbar), ev};
    }

    // composite Jacobian wrt the segment's start state:
    //   C = J2 * Jd * (J1 + f1 * dtau) - f2 * dtau,
    //   dtau = -(grad g * J1) / (grad g . f1)
    IMat J1 = seg.jac_local(tau_local);
    Box f1 = from.field.eval(X_tau);
    Box gg(n);
    for (std::size_t i = 0; i < n; ++i) gg[i] = eval_box(gc.grad[i], X_tau);
    Interval denom = dot(gg, f1);
    if (denom.contains(0.0))
        throw detail::EventFailure("guard derivative loses sign at composite step");
    Box dtau = row_times_mat(gg, J1);
    for (std::size_t j = 0; j < n; ++j) dtau[j] = -(dtau[j] / denom);

    IMat Jd = detail::expr_jacobian(tr.reset, X_tau);
    IMat J2 = post_seg.jac_local(dwin);
    Box f2 = post_field.eval(post_seg.apriori);

    IMat inner(n); // J1 + f1 * dtau
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) inner(i, j) = J1(i, j) + f1[i] * dtau[j];
    IMat C = J2 * (Jd * inner);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) C(i, j) -= f2[i] * dtau[j];

    // image of the start center through the composite map (nearly thin)
    Interval tau_c = detail::center_crossing(seg, gc, tau_local, opts.tol_event);
    Box zc = seg.center_local(tau_c);
    Box yc = detail::eval_exprs(tr.reset, zc);
    Interval dc = Interval(tbar) - (tau_c + Interval(seg.t_start));
    Box wc(n);
    {
        FlowSegment cseg = post_stepper.step(Parallelotope::from_box(yc), 0.0,
                                             std::max(w, post_opts.h_min));
        if (cseg.h() < dc.hi())
            throw detail::EventFailure("post-jump center enclosure failed");
        wc = cseg.eval_local(dc.intersect(Interval(0.0, cseg.h())));
    }

    IMat B = C * IMat(seg.x_start.matrix());
    std::vector<double> c_new = X_tbar.midpoint();
    Mat q = qr_q(B.mid());
    auto qinv = verified_inverse(q);
    if (!qinv) {
        ev.state_after = X_tbar;
        return {Parallelotope::from_box(X_tbar), ev};
    }
    Box u_new = (*qinv * B) * seg.x_start.u();
    Box resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = wc[i] - Interval(c_new[i]);
    Box corr = *qinv * resid;
    for (std::size_t i = 0; i < n; ++i) u_new[i] += corr[i];
#ifdef HYSIM_JUMP_DEBUG
    {
        IMat R = *qinv * B;
        std::fprintf(stderr, "[jump] w(tau)=%.3g w(u_in)=%.3g w(Bu)=%.3g w(wc)=%.3g ",
                     tau_local.width(), seg.x_start.u().max_width(),
                     ((*qinv * B) * seg.x_start.u()).max_width(), wc.max_width());
        double rn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0;
            for (std::size_t j = 0; j < n; ++j) row += R(i, j).mag();
            rn = std::max(rn, row);
        }
        std::fprintf(stderr, "normR=%.3g w(C)max=%.3g\n", rn, [&] {
            double wmax = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) wmax = std::max(wmax, C(i, j).width());
            return wmax;
        }());
    }
#endif
    // the mean-value image and the box image describe the same set; keep both
    Box u_box(n);
    for (std::size_t i = 0; i < n; ++i) u_box[i] = X_tbar[i] - Interval(c_new[i]);
    u_new = u_new.intersect(*qinv * u_box);
    Parallelotope post(q, u_new, c_new);
    ev.state_after = post.to_box().intersect(X_tbar);
    return {post, ev};
}

inline Trajectory simulate(const Model& m, const SimOptions& opts = {}) {
    Trajectory traj;
    traj.ptope_mode = !opts.ode.box_mode;
    const Location* loc = m.find_location(m.initial_location);
    if (!loc) throw DomainError("unknown initial location");
    Parallelotope p = Parallelotope::from_box(m.initial_box());
    double t = 0;
    int jumps = 0;

    try {
        while (t < opts.max_time && jumps < opts.max_jumps) {
            // one continuous run in `loc`
            ModeRun run;
            run.location = loc->name;
            std::vector<detail::GuardCtx> guards;
            for (const auto& tr : loc->transitions)
                guards.emplace_back(tr.guard_eq, loc->field);
            std::vector<int> armed(loc->transitions.size(), 0);
            FlowStepper stepper(loc->field, opts.ode);
            bool jumped = false;

            while (t < opts.max_time) {
                double h_req = std::min(stepper.suggested_h(), opts.max_time - t);
                std::vector<int> armed_in = armed;
                // verification failures often come from a step that is too
                // coarse for the local event geometry (several near-misses
                // inside one window); retake the step with half the size
                // before giving up
                for (;;) {
                    armed = armed_in;
                    try {
                        FlowSegment seg = stepper.step(p, t, h_req);
                        auto cand = detect_event(seg, *loc, guards, armed, opts);
                        int grow = 0;
                        while (cand && cand->at_segment_end && grow < 10) {
                            // crossing region touches the segment edge: retake
                            // the step a bit longer so the zero region is
                            // interior
                            double h2 = std::min(seg.h() * 1.5, opts.max_time - t);
                            if (h2 <= seg.h()) break;
                            seg = stepper.step(p, t, h2);
                            armed = armed_in;
                            cand = detect_event(seg, *loc, guards, armed, opts);
                            ++grow;
                        }
                        if (cand && cand->at_segment_end)
                            throw detail::EventFailure(
                                "crossing region could not be separated from the "
                                "segment edge");

                        if (cand) {
                            const Location* next = m.find_location(
                                loc->transitions[cand->transition_index].target);
                            if (!next) throw DomainError("unknown transition target");
                            auto [pnew, ev] = composite_jump_step(
                                seg, *loc, cand->transition_index,
                                guards[cand->transition_index], cand->tau_local,
                                next->field, opts);
                            run.segments.push_back(seg);
                            run.t_valid_end = ev.tau.lo();
                            traj.events.push_back(ev);
                            p = pnew;
                            t = ev.tau.hi();
                            loc = next;
                            ++jumps;
                            jumped = true;
#ifdef HYSIM_TRACE
                            std::fprintf(stderr, "[ev %d] %s tau=%.10g w(tau)=%.3g w(p)=%.3g\n",
                                         jumps, ev.source.c_str(), ev.tau.lo(),
                                         ev.tau.width(), p.to_box().max_width());
#endif
                        } else {
                            p = seg.x_end;
                            t = seg.t_end;
#ifdef HYSIM_TRACE
                            std::fprintf(stderr, "[seg] t=%.10g h=%.3g w=%.3g\n", t,
                                         seg.h(), p.to_box().max_width());
#endif
                            run.segments.push_back(seg);
                            run.t_valid_end = t;
                        }
                        break;
                    } catch (const detail::EventFailure&) {
                        h_req *= 0.5;
                        if (h_req < opts.ode.h_min * 16) throw;
                    }
                }
                if (jumped) break;
            }
            traj.runs.push_back(std::move(run));
            if (!jumped) break;
        }
        traj.status = SimStatus::Completed;
    } catch (const detail::EventFailure& e) {
        traj.status = SimStatus::VerificationFailed;
        traj.failure_reason = e.what();
    } catch (const StepTooSmall& e) {
        traj.status = SimStatus::StepFailure;
        traj.failure_reason = e.what();
    }
    traj.t_end = t;
    return traj;
}

// Human-readable summary of what the simulation certifies.
inline std::string verification_certificate(const Trajectory& tr) {
    std::string s;
    char buf[160];
    std::snprintf(buf, sizeof buf, "status: %s\n", to_string(tr.status));
    s += buf;
    if (!tr.failure_reason.empty()) s += "reason: " + tr.failure_reason + "\n";
    std::snprintf(buf, sizeof buf, "certified up to t = %.17g\n", tr.t_end);
    s += buf;
    std::snprintf(buf, sizeof buf, "events: %zu (each with a unique verified crossing)\n",
                  tr.events.size());
    s += buf;
    for (std::size_t i = 0; i < tr.events.size(); ++i) {
        const auto& e = tr.events[i];
        std::snprintf(buf, sizeof buf, "  #%zu %s -> %s, tau in [%.17g, %.17g]\n", i,
                      e.source.c_str(), e.target.c_str(), e.tau.lo(), e.tau.hi());
        s += buf;
    }
    return s;
}

} // namespace hysim
