#pragma once

// Non-validated reference implementations used as oracles: a plain RK4
// integrator for the bb-sin dynamics with bounce location by bisection, and
// a dense-grid boolean monitor for G[0,10] F[0,5] (x-2). These are only
// trustworthy up to floating-point noise, so tests compare directions and
// containment, never exact equality.

#include <cmath>
#include <vector>

namespace refsim {

// Simulate the Fig-style bouncing ball on a sinusoid (g=1, c, f=0.05) from
// x(0) = 2 + x0v, vx(0) = 0, sampling the predicate x > 2 on a `grid`-spaced
// time grid up to T.
struct BbSinRef {
    std::vector<unsigned char> above; // x(t_k) > 2 at t_k = k*grid
    double grid = 1e-6;
    bool ok = true;
};

inline BbSinRef bb_sin_reference(double x0v, double T, double c = 0.9,
                                 double grid = 1e-6) {
    BbSinRef ref;
    ref.grid = grid;
    double t = 0, x = 2 + x0v, vx = 0;
    bool fall = true;
    const double hs = 1e-4;
    double next_sample = 0;
    auto deriv = [&](double v) { return fall ? -1 + 0.05 * v * v : -1 - 0.05 * v * v; };
    auto stepto = [&](double& tt, double& xx, double& vv, double h) {
        double k1v = deriv(vv), k1x = vv;
        double k2v = deriv(vv + h / 2 * k1v), k2x = vv + h / 2 * k1v;
        double k3v = deriv(vv + h / 2 * k2v), k3x = vv + h / 2 * k2v;
        double k4v = deriv(vv + h * k3v), k4x = vv + h * k3v;
        xx += h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x);
        vv += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
        tt += h;
    };
    int bounces = 0;
    while (t < T) {
        double tp = t, xp = x, vp = vx;
        stepto(t, x, vx, hs);
        while (next_sample <= t && next_sample <= T) {
            double f1 = (next_sample - tp) / (t - tp);
            ref.above.push_back(xp + (x - xp) * f1 > 2.0 ? 1 : 0);
            next_sample += grid;
        }
        double gp = std::sin(tp) - xp, gn = std::sin(t) - x;
        if (gp < 0 && gn >= 0) {
            double lo = 0, hi = hs;
            for (int i = 0; i < 60; ++i) {
                double mid = 0.5 * (lo + hi);
                double tm = tp, xm = xp, vm = vp;
                stepto(tm, xm, vm, mid);
                ((std::sin(tm) - xm) < 0 ? lo : hi) = mid;
            }
            double tm = tp, xm = xp, vm = vp;
            stepto(tm, xm, vm, 0.5 * (lo + hi));
            t = tm;
            x = xm;
            vx = -c * vm + (c + 1) * std::cos(t);
            fall = !(vx > 0);
            if (++bounces > 100000) {
                ref.ok = false;
                break;
            }
        }
        if (!fall && vx < 0) fall = true;
    }
    return ref;
}

// Evaluate G[0,10] F[0,5] (x-2) on the sample grid. Returns 1 (holds),
// 0 (violated) or -2 (grid too short to decide).
inline int bb_sin_reference_verdict(const BbSinRef& ref) {
    long n = (long)ref.above.size();
    long per = (long)std::llround(1.0 / ref.grid);
    long lim_g = 10 * per, lim_f = 5 * per;
    if (n < lim_g + lim_f + 1) return -2;
    std::vector<long> next_true(n + 1);
    next_true[n] = n + lim_f + 1;
    for (long i = n - 1; i >= 0; --i) next_true[i] = ref.above[i] ? i : next_true[i + 1];
    for (long i = 0; i <= lim_g; ++i)
        if (next_true[i] > i + lim_f) return 0;
    return 1;
}

// Closed-form bounce times of the flat bouncing ball x'' = -g from rest at
// height x0 with restitution c: t_1 = sqrt(2 x0 / g), impact speed
// v_1 = g t_1, and t_{k+1} = t_k + 2 c^k v_1 / g.
inline std::vector<double> flat_ball_bounce_times(double x0, double g, double c,
                                                  int count) {
    std::vector<double> ts;
    double t1 = std::sqrt(2 * x0 / g);
    double t = t1, v = g * t1;
    for (int k = 0; k < count; ++k) {
        ts.push_back(t);
        v *= c;
        t += 2 * v / g;
    }
    return ts;
}

} // namespace refsim
