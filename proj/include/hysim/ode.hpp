#pragma once

// Guaranteed ODE integration.
//
// Each step runs the classic two-phase scheme: a Picard a-priori enclosure
// certifies the flow stays in a box over the step, then an interval Taylor
// series (Lagrange remainder evaluated on the a-priori box) advances the
// state. Sets are propagated as parallelotopes via the variational flow
// Jacobian with QR re-conditioning every step (Lohner), which keeps the
// wrapping effect in check. Box mode drops the Jacobian machinery and hulls
// each step; it exists as the naive baseline.

#include <vector>

#include "hysim/linalg.hpp"
#include "hysim/parallelotope.hpp"
#include "hysim/taylor.hpp"

namespace hysim {

struct StepTooSmall : std::runtime_error {
    explicit StepTooSmall(const std::string& what) : std::runtime_error(what) {}
};

struct OdeOptions {
    int order = 10;        // Taylor order k
    double h0 = 0.05;      // initial step size
    double h_max = 0.5;
    double h_min = 1e-12;
    double tol_step = 1e-13; // target local truncation width per step (absolute)
    int max_inflate = 20;
    bool box_mode = false;
};

// Picard operator iteration with epsilon-inflation. Returns (Y, h) with
// x0 + [0,h]*f(Y) contained in Y; h may be reduced by halving.
inline std::pair<Box, double> apriori_enclosure(const VectorField& f, const Box& x0,
                                                double h, double h_min = 1e-12,
                                                int max_inflate = 20) {
    if (h <= 0) throw DomainError("apriori_enclosure: step must be positive");
    std::size_t n = x0.dim();
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(x0[i].lo()) || !std::isfinite(x0[i].hi()))
            throw StepTooSmall("state enclosure is no longer finite");
    while (h >= h_min) {
        Interval span(0.0, h);
        Box y = x0;
        {
            Box f0 = f.eval(x0);
            for (std::size_t i = 0; i < n; ++i)
                y[i] = x0[i] + span * f0[i];
        }
        bool ok = false;
        for (int it = 0; it < max_inflate; ++it) {
            Box z(n);
            Box fy = f.eval(y);
            for (std::size_t i = 0; i < n; ++i) z[i] = x0[i] + span * fy[i];
            if (y.contains(z)) { y = z; ok = true; break; }
            // retry from the inflated candidate image; when the Picard
            // operator contracts this settles in a few rounds
            for (std::size_t i = 0; i < n; ++i) {
                double pad = 0.1 * z[i].width() + 1e-14 * (1.0 + z[i].mag());
                z[i] = Interval(rnd::sub_down(z[i].lo(), pad),
                                rnd::add_up(z[i].hi(), pad));
            }
            y = z;
        }
        if (ok) return {y, h};
        h *= 0.5;
    }
    throw StepTooSmall("a-priori enclosure failed down to minimal step size");
}

// One verified continuous segment. Series coefficients are kept so the
// segment supports dense output (guard monitoring, STL signal extraction).
struct FlowSegment {
    double t_start = 0, t_end = 0;   // global times
    Parallelotope x_start;
    Parallelotope x_end;
    Box apriori;                     // n-dim, valid on the whole step
    bool ptope_mode = true;

    // thin series at the start center (ptope mode); n-dim boxes, orders 0..k
    std::vector<Box> center_coeffs;
    // ptope mode: augmented (n+n^2)-dim series from [hull(x_start); I];
    // box mode: plain n-dim series from hull(x_start)
    std::vector<Box> set_coeffs;

    std::size_t dim() const { return x_start.dim(); }
    double h() const { return t_end - t_start; }

    Interval clip_local(const Interval& t_global) const {
        Interval local = t_global - Interval(t_start);
        return local.intersect(Interval(0.0, rnd::add_up(h(), 1e-300)));
    }

    // Thin enclosure of the flow of the start center at local time t.
    Box center_local(const Interval& t) const {
        std::size_t n = dim();
        Box r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = eval_series(center_coeffs, i, t);
        return r;
    }

    // Interval flow Jacobian at local time t (ptope mode only).
    IMat jac_local(const Interval& t) const {
        std::size_t n = dim();
        IMat j(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                j(i, k) = eval_series(set_coeffs, n + i * n + k, t);
        return j;
    }

    // Box-propagated series value at local time t.
    Box series_local(const Interval& t) const {
        std::size_t n = dim();
        Box r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = eval_series(set_coeffs, i, t);
        return r;
    }

    // Enclosure of the whole set at local time t in [0, h].
    Box eval_local(const Interval& t_local) const {
        std::size_t n = dim();
        Box r = series_local(t_local);
        if (ptope_mode) {
            Box z = center_local(t_local);
            IMat j = jac_local(t_local);
            IMat ja = j * IMat(x_start.matrix());
            Box dev = ja * x_start.u();
            Box mean(n);
            for (std::size_t i = 0; i < n; ++i) mean[i] = z[i] + dev[i];
            r = r.intersect(mean);
        }
        return r.intersect(apriori);
    }

    Box eval_global(const Interval& t_global) const { return eval_local(clip_local(t_global)); }
};

// Stepper bound to one vector field. Single-use per flow; reusable tapes.
class FlowStepper {
public:
    FlowStepper(const VectorField& f, const OdeOptions& opts)
        : f_(f), opts_(opts), tape_(TaylorTape::compile(f)) {
        if (!opts_.box_mode) {
            aug_field_ = augment_variational(f);
            aug_tape_ = TaylorTape::compile(aug_field_);
        }
        h_next_ = opts_.h0;
    }

    const VectorField& field() const { return f_; }
    double suggested_h() const { return h_next_; }

    // Advance the set by (at most) h_request from global time t_global.
    FlowSegment step(const Parallelotope& p, double t_global, double h_request) {
        return opts_.box_mode ? step_box(p, t_global, h_request)
                              : step_ptope(p, t_global, h_request);
    }

private:
    static Box augment_box(const Box& x, std::size_t n) {
        Box a(n + n * n);
        for (std::size_t i = 0; i < n; ++i) a[i] = x[i];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                a[n + i * n + j] = Interval(i == j ? 1.0 : 0.0);
        return a;
    }

    // Series with a Lagrange remainder: orders 0..k-1 at x0, order k at the
    // a-priori enclosure.
    static std::vector<Box> remainder_series(const TaylorTape& tape, const Box& x0,
                                             const Box& apriori, int k) {
        auto tight = tape.ode_coefficients(x0, k);
        auto rough = tape.ode_coefficients(apriori, k);
        tight[k] = rough[k];
        return tight;
    }

    void adapt_h(const std::vector<Box>& coeffs, double h, std::size_t n) {
        int k = opts_.order;
        double rem = 0;
        for (std::size_t i = 0; i < n; ++i) rem = std::max(rem, coeffs[k][i].mag());
        double hk = std::pow(h, k);
        double err = rem * hk;
        double target = opts_.tol_step;
        double factor = (err > 0) ? std::pow(target / err, 1.0 / k) : 2.0;
        factor = std::clamp(factor, 0.5, 2.0);
        h_next_ = std::clamp(h * factor * 0.9, opts_.h_min, opts_.h_max);
    }

    FlowSegment step_ptope(const Parallelotope& p, double t_global, double h_request) {
        std::size_t n = f_.dim();
        int k = opts_.order;
        Box x0 = p.to_box();
        Box aug0 = augment_box(x0, n);
        auto [aug_apriori, h] =
            apriori_enclosure(aug_field_, aug0, h_request, opts_.h_min, opts_.max_inflate);

        FlowSegment seg;
        seg.t_start = t_global;
        seg.t_end = t_global + h;
        seg.x_start = p;
        seg.ptope_mode = true;
        seg.apriori = Box(n);
        for (std::size_t i = 0; i < n; ++i) seg.apriori[i] = aug_apriori[i];

        seg.set_coeffs = remainder_series(aug_tape_, aug0, aug_apriori, k);
        seg.center_coeffs =
            remainder_series(tape_, Box::from_points(p.center()), seg.apriori, k);

        Interval th(h, h);
        Box z(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = eval_series(seg.center_coeffs, i, th);
        IMat j = seg.jac_local(th);
        IMat b = j * IMat(p.matrix());

        std::vector<double> c_new(n);
        for (std::size_t i = 0; i < n; ++i) c_new[i] = z[i].midpoint();
        Mat q = qr_q(b.mid());
        auto qinv = verified_inverse(q);
        if (!qinv) {
            // orthogonalization failed; fall back to a hulled box
            seg.x_end = Parallelotope::from_box(seg.eval_local(th));
        } else {
            IMat qinv_b = *qinv * b;
            Box u_new = qinv_b * p.u();
            Box resid(n);
            for (std::size_t i = 0; i < n; ++i) resid[i] = z[i] - Interval(c_new[i]);
            Box corr = *qinv * resid;
            for (std::size_t i = 0; i < n; ++i) u_new[i] += corr[i];
            seg.x_end = Parallelotope(q, u_new, c_new);
        }
        adapt_h(seg.center_coeffs, h, n);
        return seg;
    }

    FlowSegment step_box(const Parallelotope& p, double t_global, double h_request) {
        std::size_t n = f_.dim();
        int k = opts_.order;
        Box x0 = p.to_box();
        auto [yx, h] = apriori_enclosure(f_, x0, h_request, opts_.h_min, opts_.max_inflate);

        FlowSegment seg;
        seg.t_start = t_global;
        seg.t_end = t_global + h;
        seg.x_start = p;
        seg.ptope_mode = false;
        seg.apriori = yx;
        seg.set_coeffs = remainder_series(tape_, x0, yx, k);

        Interval th(h, h);
        seg.x_end = Parallelotope::from_box(seg.eval_local(th));
        adapt_h(seg.set_coeffs, h, n);
        return seg;
    }

    VectorField f_;
    OdeOptions opts_;
    TaylorTape tape_;
    VectorField aug_field_;
    TaylorTape aug_tape_;
    double h_next_ = 0.05;
};

// Flow for a fixed duration with no event handling: contiguous segments
// covering [0, T] in the global time frame starting at 0.
inline std::vector<FlowSegment> flow(const VectorField& f, const Parallelotope& p0,
                                     double T, const OdeOptions& opts = {}) {
    if (T <= 0) throw DomainError("flow: duration must be positive");
    FlowStepper stepper(f, opts);
    std::vector<FlowSegment> segs;
    Parallelotope p = p0;
    double t = 0;
    while (t < T) {
        double h = std::min(stepper.suggested_h(), T - t);
        FlowSegment seg = stepper.step(p, t, h);
        p = seg.x_end;
        t = seg.t_end;
        segs.push_back(std::move(seg));
    }
    return segs;
}

// Dense output on a single segment (global time).
inline Box eval_flow_at(const FlowSegment& seg, const Interval& t_global) {
    return seg.eval_global(t_global);
}

} // namespace hysim
