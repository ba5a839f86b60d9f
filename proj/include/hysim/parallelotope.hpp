#pragma once

// Parallelotope <A, u, x~>: the set { x~ + A*u | u in u }.
// Tracks the correlations an axis-aligned box loses; degrades to its
// bounding box (with a flag) when A becomes too ill-conditioned to invert
// within verified tolerance.

#include <optional>
#include <vector>

#include "hysim/box.hpp"
#include "hysim/linalg.hpp"

namespace hysim {

class Parallelotope {
public:
    // Condition threshold beyond which membership solves are considered
    // unreliable and the parallelotope degrades to a box.
    static constexpr double kConditionLimit = 1e8;

    Parallelotope() = default;
    Parallelotope(Mat a, Box u, std::vector<double> center)
        : a_(std::move(a)), u_(std::move(u)), center_(std::move(center)), degraded_(false) {
        if (a_.dim() != u_.dim() || a_.dim() != center_.size())
            throw DomainError("parallelotope dimension mismatch");
        if (condition_estimate(a_) > kConditionLimit) degrade();
    }

    static Parallelotope from_box(const Box& b) {
        std::size_t n = b.dim();
        auto c = b.midpoint();
        Box u(n);
        for (std::size_t i = 0; i < n; ++i) u[i] = b[i] - Interval(c[i]);
        return Parallelotope(Mat::identity(n), u, c);
    }

    static Parallelotope from_point(const std::vector<double>& x) {
        return from_box(Box::from_points(x));
    }

    std::size_t dim() const { return center_.size(); }
    const Mat& matrix() const { return a_; }
    const Box& u() const { return u_; }
    const std::vector<double>& center() const { return center_; }
    bool degraded() const { return degraded_; }

    // Outward-rounded bounding box: x~ + A*u.
    Box to_box() const {
        Box r = a_ * u_;
        for (std::size_t i = 0; i < dim(); ++i) r[i] += Interval(center_[i]);
        return r;
    }

    double max_width() const { return to_box().max_width(); }

    // Membership test via the verified solve A*v = x - x~, v in u.
    // Returns false only when exclusion is certain; enclosure semantics
    // never drop a member.
    bool contains(const std::vector<double>& x) const {
        if (x.size() != dim()) return false;
        if (degraded_) return to_box().contains(x);
        auto inv = verified_inverse(a_);
        if (!inv) return to_box().contains(x);
        Box rhs(dim());
        for (std::size_t i = 0; i < dim(); ++i) rhs[i] = Interval(x[i]) - Interval(center_[i]);
        Box v = *inv * rhs;
        for (std::size_t i = 0; i < dim(); ++i)
            if (!u_[i].intersects(v[i])) return false;
        return true;
    }

private:
    void degrade() {
        Box b = to_box();
        auto c = b.midpoint();
        Box u(dim());
        for (std::size_t i = 0; i < dim(); ++i) u[i] = b[i] - Interval(c[i]);
        a_ = Mat::identity(dim());
        u_ = u;
        center_ = c;
        degraded_ = true;
    }

    Mat a_;
    Box u_;
    std::vector<double> center_;
    bool degraded_ = false;
};

} // namespace hysim
