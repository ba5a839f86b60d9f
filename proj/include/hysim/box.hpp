#pragma once

// Interval vectors (boxes) and decimal serialization of interval bounds.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "hysim/interval.hpp"

namespace hysim {

class Box {
public:
    Box() = default;
    explicit Box(std::size_t dim) : comps_(dim, Interval(0.0)) {}
    Box(std::initializer_list<Interval> comps) : comps_(comps) {}
    explicit Box(std::vector<Interval> comps) : comps_(std::move(comps)) {}

    std::size_t dim() const { return comps_.size(); }
    Interval& operator[](std::size_t i) { return comps_[i]; }
    const Interval& operator[](std::size_t i) const { return comps_[i]; }
    auto begin() const { return comps_.begin(); }
    auto end() const { return comps_.end(); }

    bool is_empty() const {
        for (const auto& c : comps_) if (c.is_empty()) return true;
        return false;
    }

    std::vector<double> midpoint() const {
        std::vector<double> m(dim());
        for (std::size_t i = 0; i < dim(); ++i) m[i] = comps_[i].midpoint();
        return m;
    }

    double max_width() const {
        double w = 0;
        for (const auto& c : comps_) w = std::max(w, c.width());
        return w;
    }

    bool contains(const std::vector<double>& x) const {
        if (x.size() != dim()) return false;
        for (std::size_t i = 0; i < dim(); ++i)
            if (!comps_[i].contains(x[i])) return false;
        return true;
    }
    bool contains(const Box& o) const {
        if (o.dim() != dim()) return false;
        for (std::size_t i = 0; i < dim(); ++i)
            if (!comps_[i].contains(o[i])) return false;
        return true;
    }

    Box hull(const Box& o) const {
        Box r(dim());
        for (std::size_t i = 0; i < dim(); ++i) r[i] = comps_[i].hull(o[i]);
        return r;
    }
    Box intersect(const Box& o) const {
        Box r(dim());
        for (std::size_t i = 0; i < dim(); ++i) r[i] = comps_[i].intersect(o[i]);
        return r;
    }

    Box operator+(const Box& o) const {
        Box r(dim());
        for (std::size_t i = 0; i < dim(); ++i) r[i] = comps_[i] + o[i];
        return r;
    }
    Box operator-(const Box& o) const {
        Box r(dim());
        for (std::size_t i = 0; i < dim(); ++i) r[i] = comps_[i] - o[i];
        return r;
    }

    static Box from_points(const std::vector<double>& x) {
        std::vector<Interval> c;
        c.reserve(x.size());
        for (double v : x) c.emplace_back(v);
        return Box(std::move(c));
    }

private:
    std::vector<Interval> comps_;
};

// ---------------------------------------------------------------------------
// Decimal serialization with outward decimal rounding: the printed lower
// bound is <= the binary bound, the printed upper bound is >=.

namespace detail {

// Shift a "%.*e"-formatted number by one unit in its last printed digit,
// away from zero (dir=+1) or toward zero (dir=-1). Pure string surgery so
// the adjustment is exact in decimal.
inline std::string shift_decimal_ulp(const std::string& s, int dir) {
    std::string out = s;
    std::size_t epos = out.find('e');
    std::string mant = out.substr(0, epos);
    int expo = std::atoi(out.c_str() + epos + 1);
    bool neg = !mant.empty() && mant[0] == '-';
    if (neg) mant.erase(0, 1);
    std::string digits;
    for (char ch : mant) if (ch != '.') digits.push_back(ch);

    if (dir > 0) { // away from zero: increment digit string
        int i = (int)digits.size() - 1;
        while (i >= 0) {
            if (digits[i] == '9') { digits[i] = '0'; --i; }
            else { ++digits[i]; break; }
        }
        if (i < 0) { digits.insert(digits.begin(), '1'); digits.pop_back(); ++expo; }
    } else {       // toward zero: decrement digit string
        int i = (int)digits.size() - 1;
        while (i >= 0) {
            if (digits[i] == '0') { digits[i] = '9'; --i; }
            else { --digits[i]; break; }
        }
        if (digits[0] == '0') { // renormalize e.g. 0999 -> 9990e-1
            digits.erase(digits.begin());
            digits.push_back('0');
            --expo;
        }
    }
    std::string r;
    if (neg) r.push_back('-');
    r.push_back(digits[0]);
    if (digits.size() > 1) { r.push_back('.'); r.append(digits.substr(1)); }
    char buf[16];
    std::snprintf(buf, sizeof buf, "e%+03d", expo);
    r += buf;
    return r;
}

inline std::string format_directed(double x, int digits, bool round_down) {
    if (x == 0.0) return "0";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*e", digits - 1, x);
    std::string s(buf);
    double back = std::strtod(s.c_str(), nullptr);
    if (round_down ? (back <= x) : (back >= x)) return s;
    // printed value landed on the wrong side; move one decimal ulp outward
    bool away = round_down ? (x < 0) : (x > 0);
    return shift_decimal_ulp(s, away ? +1 : -1);
}

} // namespace detail

inline std::string format_lo(double lo, int digits = 17) {
    return detail::format_directed(lo, digits, /*round_down=*/true);
}
inline std::string format_hi(double hi, int digits = 17) {
    return detail::format_directed(hi, digits, /*round_down=*/false);
}

inline std::string to_string(const Interval& a, int digits = 17) {
    if (a.is_empty()) return "[empty]";
    return "[" + format_lo(a.lo(), digits) + "," + format_hi(a.hi(), digits) + "]";
}

inline std::string to_string(const Box& b, int digits = 17) {
    std::string s = "(";
    for (std::size_t i = 0; i < b.dim(); ++i) {
        if (i) s += ", ";
        s += to_string(b[i], digits);
    }
    return s + ")";
}

} // namespace hysim
