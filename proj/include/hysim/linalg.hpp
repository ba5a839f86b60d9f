#pragma once

// Small dense matrix helpers: plain double matrices for conditioning work
// (QR, approximate inverses) and interval matrices for verified propagation.
// Dimensions here are the state dimension (<= ~10), so O(n^3) loops are fine.

#include <optional>
#include <vector>

#include "hysim/box.hpp"
#include "hysim/interval.hpp"

namespace hysim {

class Mat {
public:
    Mat() : n_(0) {}
    explicit Mat(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}
    static Mat identity(std::size_t n) {
        Mat m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
    std::size_t dim() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    Mat transpose() const {
        Mat t(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

private:
    std::size_t n_;
    std::vector<double> a_;
};

class IMat {
public:
    IMat() : n_(0) {}
    explicit IMat(std::size_t n) : n_(n), a_(n * n, Interval(0.0)) {}
    explicit IMat(const Mat& m) : n_(m.dim()), a_(n_ * n_, Interval(0.0)) {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) (*this)(i, j) = Interval(m(i, j));
    }
    static IMat identity(std::size_t n) {
        IMat m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = Interval(1.0);
        return m;
    }
    std::size_t dim() const { return n_; }
    Interval& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    const Interval& operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    Mat mid() const {
        Mat m(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) m(i, j) = (*this)(i, j).midpoint();
        return m;
    }

    IMat operator*(const IMat& o) const {
        IMat r(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) {
                Interval s(0.0);
                for (std::size_t k = 0; k < n_; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }
    IMat operator+(const IMat& o) const {
        IMat r(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) r(i, j) = (*this)(i, j) + o(i, j);
        return r;
    }
    IMat operator-(const IMat& o) const {
        IMat r(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) r(i, j) = (*this)(i, j) - o(i, j);
        return r;
    }

    Box operator*(const Box& v) const {
        Box r(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            Interval s(0.0);
            for (std::size_t k = 0; k < n_; ++k) s += (*this)(i, k) * v[k];
            r[i] = s;
        }
        return r;
    }

    // Upper bound of the infinity norm.
    double norm_inf_up() const {
        double best = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            double row = 0;
            for (std::size_t j = 0; j < n_; ++j) row = rnd::add_up(row, (*this)(i, j).mag());
            best = std::max(best, row);
        }
        return best;
    }

private:
    std::size_t n_;
    std::vector<Interval> a_;
};

inline IMat operator*(const Mat& a, const IMat& b) { return IMat(a) * b; }
inline IMat operator*(const IMat& a, const Mat& b) { return a * IMat(b); }
inline Box operator*(const Mat& a, const Box& v) { return IMat(a) * v; }

// Row vector times matrix, in intervals.
inline Box row_times_mat(const Box& row, const IMat& m) {
    Box r(m.dim());
    for (std::size_t j = 0; j < m.dim(); ++j) {
        Interval s(0.0);
        for (std::size_t k = 0; k < m.dim(); ++k) s += row[k] * m(k, j);
        r[j] = s;
    }
    return r;
}

inline Interval dot(const Box& a, const Box& b) {
    Interval s(0.0);
    for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
    return s;
}

// Modified Gram-Schmidt QR; returns Q (orthonormal columns up to rounding).
// Rank-deficient columns are replaced by unit vectors so Q stays invertible.
inline Mat qr_q(const Mat& m) {
    std::size_t n = m.dim();
    std::vector<std::vector<double>> q(n, std::vector<double>(n));
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) q[j][i] = m(i, j);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double d = 0;
            for (std::size_t i = 0; i < n; ++i) d += q[k][i] * q[j][i];
            for (std::size_t i = 0; i < n; ++i) q[j][i] -= d * q[k][i];
        }
        double nrm = 0;
        for (std::size_t i = 0; i < n; ++i) nrm += q[j][i] * q[j][i];
        nrm = std::sqrt(nrm);
        if (nrm < 1e-150) {
            // degenerate direction: substitute a basis vector orthogonalized
            for (std::size_t i = 0; i < n; ++i) q[j][i] = (i == j) ? 1.0 : 0.0;
            for (std::size_t k = 0; k < j; ++k) {
                double d = 0;
                for (std::size_t i = 0; i < n; ++i) d += q[k][i] * q[j][i];
                for (std::size_t i = 0; i < n; ++i) q[j][i] -= d * q[k][i];
            }
            nrm = 0;
            for (std::size_t i = 0; i < n; ++i) nrm += q[j][i] * q[j][i];
            nrm = std::sqrt(nrm);
            if (nrm < 1e-150) nrm = 1.0;
        }
        for (std::size_t i = 0; i < n; ++i) q[j][i] /= nrm;
    }
    Mat out(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) out(i, j) = q[j][i];
    return out;
}

// Gaussian elimination with partial pivoting (approximate inverse).
inline std::optional<Mat> approx_inverse(const Mat& m) {
    std::size_t n = m.dim();
    std::vector<std::vector<double>> a(n, std::vector<double>(2 * n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a[i][j] = m(i, j);
        a[i][n + i] = 1.0;
    }
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        if (std::fabs(a[piv][c]) < 1e-300) return std::nullopt;
        std::swap(a[c], a[piv]);
        double d = a[c][c];
        for (std::size_t j = 0; j < 2 * n; ++j) a[c][j] /= d;
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            double f = a[r][c];
            if (f == 0) continue;
            for (std::size_t j = 0; j < 2 * n; ++j) a[r][j] -= f * a[c][j];
        }
    }
    Mat inv(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) inv(i, j) = a[i][n + j];
    return inv;
}

// Verified interval enclosure of M^-1 via a Neumann-series bound:
// with R ~ M^-1 and E = I - R*M, if ||E||_inf < 1 then
// M^-1 = (I-E)^-1 R and (I-E)^-1 is within I + [-beta,beta] entrywise,
// beta = ||E|| / (1 - ||E||).
inline std::optional<IMat> verified_inverse(const Mat& m) {
    auto r = approx_inverse(m);
    if (!r) return std::nullopt;
    std::size_t n = m.dim();
    IMat E = IMat::identity(n) - IMat(*r) * IMat(m);
    double s = E.norm_inf_up();
    if (s >= 1.0) return std::nullopt;
    double beta = rnd::div_up(s, rnd::sub_down(1.0, s));
    IMat corr = IMat::identity(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) corr(i, j) += Interval(-beta, beta);
    return corr * IMat(*r);
}

// Rough condition estimate: ||M||_inf * ||M^-1||_inf with the approximate inverse.
inline double condition_estimate(const Mat& m) {
    auto inv = approx_inverse(m);
    if (!inv) return std::numeric_limits<double>::infinity();
    auto norm = [](const Mat& a) {
        double best = 0;
        for (std::size_t i = 0; i < a.dim(); ++i) {
            double row = 0;
            for (std::size_t j = 0; j < a.dim(); ++j) row += std::fabs(a(i, j));
            best = std::max(best, row);
        }
        return best;
    };
    return norm(m) * norm(*inv);
}

} // namespace hysim
