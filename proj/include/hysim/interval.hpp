#pragma once

// Outward-rounded interval arithmetic on IEEE doubles.
//
// Directed rounding is centralized here: basic operations recover the exact
// floating-point error term (two-sum / fma residuals) and nudge a bound by
// one ulp only when the computed result is not already on the correct side.
// Elementary functions rely on libm's documented <= 1 ulp accuracy and nudge
// one ulp on both sides.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <algorithm>

namespace hysim {

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct DivisionByZeroInterval : DomainError {
    DivisionByZeroInterval() : DomainError("interval division: divisor contains zero") {}
};

namespace rnd {

constexpr double inf = std::numeric_limits<double>::infinity();

inline double next_down(double x) { return std::nextafter(x, -inf); }
inline double next_up(double x)   { return std::nextafter(x, inf); }

// Exact error of a+b (two-sum).
inline double add_err(double a, double b, double s) {
    double bb = s - a;
    return (a - (s - bb)) + (b - bb);
}

inline double add_down(double a, double b) {
    double s = a + b;
    if (!std::isfinite(s)) return s > 0 ? std::numeric_limits<double>::max() : s;
    double e = add_err(a, b, s);
    return e < 0 ? next_down(s) : s;
}
inline double add_up(double a, double b) {
    double s = a + b;
    if (!std::isfinite(s)) return s < 0 ? -std::numeric_limits<double>::max() : s;
    double e = add_err(a, b, s);
    return e > 0 ? next_up(s) : s;
}
inline double sub_down(double a, double b) { return add_down(a, -b); }
inline double sub_up(double a, double b)   { return add_up(a, -b); }

inline double mul_down(double a, double b) {
    double p = a * b;
    if (!std::isfinite(p)) return p > 0 ? std::numeric_limits<double>::max() : p;
    double e = std::fma(a, b, -p);
    return e < 0 ? next_down(p) : p;
}
inline double mul_up(double a, double b) {
    double p = a * b;
    if (!std::isfinite(p)) return p < 0 ? -std::numeric_limits<double>::max() : p;
    double e = std::fma(a, b, -p);
    return e > 0 ? next_up(p) : p;
}

// q approximates a/b; residual r = q*b - a tells which side q is on.
inline double div_down(double a, double b) {
    double q = a / b;
    if (!std::isfinite(q)) return q > 0 ? std::numeric_limits<double>::max() : q;
    double r = std::fma(q, b, -a);          // q*b - a, exact
    bool q_high = (b > 0) ? (r > 0) : (r < 0);
    return q_high ? next_down(q) : q;
}
inline double div_up(double a, double b) {
    double q = a / b;
    if (!std::isfinite(q)) return q < 0 ? -std::numeric_limits<double>::max() : q;
    double r = std::fma(q, b, -a);
    bool q_low = (b > 0) ? (r < 0) : (r > 0);
    return q_low ? next_up(q) : q;
}

inline double sqrt_down(double a) {
    double r = std::sqrt(a);
    double e = std::fma(r, r, -a);          // r*r - a, exact
    return e > 0 ? next_down(r) : r;
}
inline double sqrt_up(double a) {
    double r = std::sqrt(a);
    double e = std::fma(r, r, -a);
    return e < 0 ? next_up(r) : r;
}

// libm sin/cos/exp/log are within 1 ulp on glibc; one nudge covers it.
inline double libm_down(double v) { return next_down(v); }
inline double libm_up(double v)   { return next_up(v); }

} // namespace rnd

class Interval {
public:
    Interval() : lo_(0), hi_(0), empty_(false) {}
    Interval(double point) : lo_(point), hi_(point), empty_(false) {
        if (std::isnan(point)) throw DomainError("NaN interval endpoint");
    }
    Interval(double lo, double hi) : lo_(lo), hi_(hi), empty_(false) {
        if (std::isnan(lo) || std::isnan(hi) || lo > hi)
            throw DomainError("invalid interval bounds");
    }

    static Interval empty() { Interval r; r.empty_ = true; r.lo_ = 1; r.hi_ = -1; return r; }
    static Interval entire() { return Interval(-rnd::inf, rnd::inf); }
    // Tight enclosure of pi.
    static Interval pi() { return Interval(M_PI, rnd::next_up(M_PI)); }
    static Interval two_pi() { return Interval(2 * M_PI, rnd::next_up(rnd::next_up(2 * M_PI))); }

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    bool is_empty() const { return empty_; }
    bool is_point() const { return !empty_ && lo_ == hi_; }

    double width() const { return empty_ ? 0.0 : rnd::sub_up(hi_, lo_); }
    double midpoint() const {
        if (empty_) throw DomainError("midpoint of empty interval");
        double m = 0.5 * (lo_ + hi_);
        if (!std::isfinite(m)) {
            // infinite or overflowing endpoints: clamp before averaging
            double l = std::max(lo_, -std::numeric_limits<double>::max());
            double h = std::min(hi_, std::numeric_limits<double>::max());
            m = 0.5 * l + 0.5 * h;
        }
        if (m < lo_) m = lo_;
        if (m > hi_) m = hi_;
        return m;
    }
    double mag() const { return empty_ ? 0.0 : std::max(std::fabs(lo_), std::fabs(hi_)); }
    double mig() const {
        if (empty_ || contains(0.0)) return 0.0;
        return std::min(std::fabs(lo_), std::fabs(hi_));
    }

    bool contains(double r) const { return !empty_ && lo_ <= r && r <= hi_; }
    bool contains(const Interval& o) const {
        if (o.empty_) return true;
        return !empty_ && lo_ <= o.lo_ && o.hi_ <= hi_;
    }
    bool strictly_contains(const Interval& o) const {
        if (o.empty_) return true;
        return !empty_ && lo_ < o.lo_ && o.hi_ < hi_;
    }
    bool intersects(const Interval& o) const {
        return !empty_ && !o.empty_ && lo_ <= o.hi_ && o.lo_ <= hi_;
    }
    bool same(const Interval& o) const {
        if (empty_ || o.empty_) return empty_ == o.empty_;
        return lo_ == o.lo_ && hi_ == o.hi_;
    }

    Interval hull(const Interval& o) const {
        if (empty_) return o;
        if (o.empty_) return *this;
        return Interval(std::min(lo_, o.lo_), std::max(hi_, o.hi_));
    }
    Interval intersect(const Interval& o) const {
        if (empty_ || o.empty_) return empty();
        double l = std::max(lo_, o.lo_), h = std::min(hi_, o.hi_);
        if (l > h) return empty();
        return Interval(l, h);
    }

    Interval operator-() const {
        if (empty_) return empty();
        return Interval(-hi_, -lo_);
    }
    Interval operator+(const Interval& o) const {
        if (empty_ || o.empty_) return empty();
        return Interval(rnd::add_down(lo_, o.lo_), rnd::add_up(hi_, o.hi_));
    }
    Interval operator-(const Interval& o) const {
        if (empty_ || o.empty_) return empty();
        return Interval(rnd::sub_down(lo_, o.hi_), rnd::sub_up(hi_, o.lo_));
    }
    Interval operator*(const Interval& o) const {
        if (empty_ || o.empty_) return empty();
        // 0 * inf products are NaN in floating point but contribute 0 to the
        // enclosure (the zero factor is exact)
        auto z = [](double v) { return std::isnan(v) ? 0.0 : v; };
        double l = std::min(std::min(z(rnd::mul_down(lo_, o.lo_)), z(rnd::mul_down(lo_, o.hi_))),
                            std::min(z(rnd::mul_down(hi_, o.lo_)), z(rnd::mul_down(hi_, o.hi_))));
        double h = std::max(std::max(z(rnd::mul_up(lo_, o.lo_)), z(rnd::mul_up(lo_, o.hi_))),
                            std::max(z(rnd::mul_up(hi_, o.lo_)), z(rnd::mul_up(hi_, o.hi_))));
        return Interval(l, h);
    }
    Interval operator/(const Interval& o) const {
        if (empty_ || o.empty_) return empty();
        if (o.contains(0.0)) throw DivisionByZeroInterval();
        double l = std::min(std::min(rnd::div_down(lo_, o.lo_), rnd::div_down(lo_, o.hi_)),
                            std::min(rnd::div_down(hi_, o.lo_), rnd::div_down(hi_, o.hi_)));
        double h = std::max(std::max(rnd::div_up(lo_, o.lo_), rnd::div_up(lo_, o.hi_)),
                            std::max(rnd::div_up(hi_, o.lo_), rnd::div_up(hi_, o.hi_)));
        return Interval(l, h);
    }
    Interval& operator+=(const Interval& o) { *this = *this + o; return *this; }
    Interval& operator-=(const Interval& o) { *this = *this - o; return *this; }
    Interval& operator*=(const Interval& o) { *this = *this * o; return *this; }
    Interval& operator/=(const Interval& o) { *this = *this / o; return *this; }

private:
    double lo_, hi_;
    bool empty_;
};

inline Interval operator+(double a, const Interval& b) { return Interval(a) + b; }
inline Interval operator-(double a, const Interval& b) { return Interval(a) - b; }
inline Interval operator*(double a, const Interval& b) { return Interval(a) * b; }
inline Interval operator/(double a, const Interval& b) { return Interval(a) / b; }
inline Interval operator+(const Interval& a, double b) { return a + Interval(b); }
inline Interval operator-(const Interval& a, double b) { return a - Interval(b); }
inline Interval operator*(const Interval& a, double b) { return a * Interval(b); }
inline Interval operator/(const Interval& a, double b) { return a / Interval(b); }

inline Interval hull(const Interval& a, const Interval& b) { return a.hull(b); }
inline Interval intersect(const Interval& a, const Interval& b) { return a.intersect(b); }

inline Interval abs(const Interval& a) {
    if (a.is_empty()) return Interval::empty();
    if (a.lo() >= 0) return a;
    if (a.hi() <= 0) return -a;
    return Interval(0.0, a.mag());
}

inline Interval sqrt(const Interval& a) {
    if (a.is_empty()) return Interval::empty();
    if (a.lo() < 0) throw DomainError("sqrt of interval with negative part");
    return Interval(rnd::sqrt_down(a.lo()), rnd::sqrt_up(a.hi()));
}

inline Interval exp(const Interval& a) {
    if (a.is_empty()) return Interval::empty();
    double l = rnd::libm_down(std::exp(a.lo()));
    double h = rnd::libm_up(std::exp(a.hi()));
    if (l < 0) l = 0;
    return Interval(l, h);
}

inline Interval log(const Interval& a) {
    if (a.is_empty()) return Interval::empty();
    if (a.lo() <= 0) throw DomainError("log of interval touching nonpositive reals");
    return Interval(rnd::libm_down(std::log(a.lo())), rnd::libm_up(std::log(a.hi())));
}

// Integer power; even exponents use |a| so the result is range-exact at 0.
inline Interval pow_int(const Interval& a, long n) {
    if (a.is_empty()) return Interval::empty();
    if (n < 0) throw DomainError("pow: negative exponent");
    if (n == 0) return Interval(1.0);
    if (n == 1) return a;
    auto pos_pow = [](double x, long k, bool up) {
        // x >= 0
        double r = 1.0;
        for (long i = 0; i < k; ++i)
            r = up ? rnd::mul_up(r, x) : rnd::mul_down(r, x);
        return r;
    };
    if (n % 2 == 0) {
        Interval m = abs(a);
        return Interval(pos_pow(m.lo(), n, false), pos_pow(m.hi(), n, true));
    }
    // odd: monotone
    auto signed_pow = [&](double x, bool up) {
        if (x >= 0) return pos_pow(x, n, up);
        return -pos_pow(-x, n, !up);
    };
    return Interval(signed_pow(a.lo(), false), signed_pow(a.hi(), true));
}

namespace detail {

// Does [a] contain a point c + 2*pi*k for integer k? Conservative ("maybe" => yes).
inline bool contains_mod_2pi(const Interval& a, double c) {
    Interval t = (a - Interval(c)) / Interval::two_pi();
    double k_lo = std::ceil(t.lo() - 1e-12);
    double k_hi = std::floor(t.hi() + 1e-12);
    return k_lo <= k_hi;
}

} // namespace detail

inline Interval sin(const Interval& a) {
    if (a.is_empty()) return Interval::empty();
    if (a.width() >= 2 * M_PI) return Interval(-1.0, 1.0);
    double slo = std::sin(a.lo()), shi = std::sin(a.hi());
    double l = rnd::libm_down(std::min(slo, shi));
    double h = rnd::libm_up(std::max(slo, shi));
    if (detail::contains_mod_2pi(a, M_PI / 2)) h = 1.0;   // max of sin
    if (detail::contains_mod_2pi(a, -M_PI / 2)) l = -1.0; // min of sin
    return Interval(std::max(l, -1.0), std::min(h, 1.0));
}

inline Interval cos(const Interval& a) {
    if (a.is_empty()) return Interval::empty();
    if (a.width() >= 2 * M_PI) return Interval(-1.0, 1.0);
    double clo = std::cos(a.lo()), chi = std::cos(a.hi());
    double l = rnd::libm_down(std::min(clo, chi));
    double h = rnd::libm_up(std::max(clo, chi));
    if (detail::contains_mod_2pi(a, 0.0)) h = 1.0;        // max of cos
    if (detail::contains_mod_2pi(a, M_PI)) l = -1.0;      // min of cos
    return Interval(std::max(l, -1.0), std::min(h, 1.0));
}

} // namespace hysim
