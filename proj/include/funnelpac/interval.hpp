#pragma once

// Closed real intervals with outward rounding.
//
// Every arithmetic result is widened by one ulp on each side, and every
// libm-based elementary function by two, so an Interval returned from any
// operation here encloses the exact real result of that operation applied to
// any points of its arguments.

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <limits>
#include <stdexcept>

namespace funnelpac {

class Interval {
public:
    constexpr Interval() = default;
    constexpr Interval(double point) : lo_(point), hi_(point) {}  // NOLINT(implicit)
    Interval(double lo, double hi) : lo_(lo), hi_(hi) {
        if (!(lo <= hi)) {
            throw std::invalid_argument("Interval: lower bound exceeds upper bound");
        }
    }

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double mid() const { return 0.5 * lo_ + 0.5 * hi_; }
    double width() const { return hi_ - lo_; }
    double radius() const { return 0.5 * (hi_ - lo_); }
    /// Largest absolute value in the interval.
    double mag() const { return std::max(std::fabs(lo_), std::fabs(hi_)); }

    bool contains(double x) const { return lo_ <= x && x <= hi_; }
    bool contains_zero() const { return lo_ <= 0.0 && 0.0 <= hi_; }
    bool subset_of(const Interval& other) const { return other.lo_ <= lo_ && hi_ <= other.hi_; }
    bool interior_of(const Interval& other) const { return other.lo_ < lo_ && hi_ < other.hi_; }
    bool is_finite() const { return std::isfinite(lo_) && std::isfinite(hi_); }

    Interval& operator+=(const Interval& o);
    Interval& operator-=(const Interval& o);
    Interval& operator*=(const Interval& o);
    Interval& operator/=(const Interval& o);

    friend Interval operator-(const Interval& a) { return raw(-a.hi_, -a.lo_); }

    /// Constructs without validation or rounding; callers guarantee lo <= hi.
    static Interval raw(double lo, double hi) {
        Interval r;
        r.lo_ = lo;
        r.hi_ = hi;
        return r;
    }

    static Interval entire() {
        return raw(-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
    }

private:
    double lo_ = 0.0;
    double hi_ = 0.0;
};

namespace detail {

inline double down(double x, int ulps = 1) {
    for (int i = 0; i < ulps; ++i) {
        x = std::nextafter(x, -std::numeric_limits<double>::infinity());
    }
    return x;
}

inline double up(double x, int ulps = 1) {
    for (int i = 0; i < ulps; ++i) {
        x = std::nextafter(x, std::numeric_limits<double>::infinity());
    }
    return x;
}

inline Interval widen(double lo, double hi, int ulps) { return Interval::raw(down(lo, ulps), up(hi, ulps)); }

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kHalfPi = 0.5 * kPi;

}  // namespace detail

inline Interval operator+(const Interval& a, const Interval& b) {
    return detail::widen(a.lo() + b.lo(), a.hi() + b.hi(), 1);
}

inline Interval operator-(const Interval& a, const Interval& b) {
    return detail::widen(a.lo() - b.hi(), a.hi() - b.lo(), 1);
}

inline Interval operator*(const Interval& a, const Interval& b) {
    const double p1 = a.lo() * b.lo();
    const double p2 = a.lo() * b.hi();
    const double p3 = a.hi() * b.lo();
    const double p4 = a.hi() * b.hi();
    // 0 * inf never arises for finite operands; non-finite operands propagate as NaN and are caught by callers.
    return detail::widen(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}), 1);
}

inline Interval operator/(const Interval& a, const Interval& b) {
    if (b.contains_zero()) {
        throw std::domain_error("Interval division by an interval containing zero");
    }
    const double q1 = a.lo() / b.lo();
    const double q2 = a.lo() / b.hi();
    const double q3 = a.hi() / b.lo();
    const double q4 = a.hi() / b.hi();
    return detail::widen(std::min({q1, q2, q3, q4}), std::max({q1, q2, q3, q4}), 1);
}

inline Interval& Interval::operator+=(const Interval& o) { return *this = *this + o; }
inline Interval& Interval::operator-=(const Interval& o) { return *this = *this - o; }
inline Interval& Interval::operator*=(const Interval& o) { return *this = *this * o; }
inline Interval& Interval::operator/=(const Interval& o) { return *this = *this / o; }

inline Interval operator+(const Interval& a, double b) { return a + Interval(b); }
inline Interval operator+(double a, const Interval& b) { return Interval(a) + b; }
inline Interval operator-(const Interval& a, double b) { return a - Interval(b); }
inline Interval operator-(double a, const Interval& b) { return Interval(a) - b; }
inline Interval operator*(const Interval& a, double b) { return a * Interval(b); }
inline Interval operator*(double a, const Interval& b) { return Interval(a) * b; }
inline Interval operator/(const Interval& a, double b) { return a / Interval(b); }
inline Interval operator/(double a, const Interval& b) { return Interval(a) / b; }

inline Interval hull(const Interval& a, const Interval& b) {
    return Interval::raw(std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi()));
}

/// Intersection; throws if empty.
inline Interval intersect(const Interval& a, const Interval& b) {
    const double lo = std::max(a.lo(), b.lo());
    const double hi = std::min(a.hi(), b.hi());
    if (lo > hi) {
        throw std::domain_error("Interval intersection is empty");
    }
    return Interval::raw(lo, hi);
}

inline Interval sqr(const Interval& a) {
    if (a.contains_zero()) {
        return Interval::raw(0.0, detail::up(a.mag() * a.mag()));
    }
    const double l = std::min(std::fabs(a.lo()), std::fabs(a.hi()));
    const double h = a.mag();
    return Interval::raw(detail::down(l * l), detail::up(h * h));
}

inline Interval abs(const Interval& a) {
    if (a.contains_zero()) {
        return Interval::raw(0.0, a.mag());
    }
    return Interval::raw(std::min(std::fabs(a.lo()), std::fabs(a.hi())), a.mag());
}

inline Interval sqrt(const Interval& a) {
    if (a.lo() < 0.0) {
        throw std::domain_error("Interval sqrt of negative values");
    }
    return Interval::raw(std::max(0.0, detail::down(std::sqrt(a.lo()))), detail::up(std::sqrt(a.hi())));
}

inline Interval exp(const Interval& a) {
    return Interval::raw(std::max(0.0, detail::down(std::exp(a.lo()), 2)), detail::up(std::exp(a.hi()), 2));
}

inline Interval atan(const Interval& a) {
    return detail::widen(std::atan(a.lo()), std::atan(a.hi()), 2);
}

inline Interval tan(const Interval& a) {
    // tan is monotone on (-pi/2, pi/2); anything reaching a pole is rejected.
    if (!(a.lo() > -detail::kHalfPi + 1e-9 && a.hi() < detail::kHalfPi - 1e-9)) {
        throw std::domain_error("Interval tan argument reaches a pole");
    }
    return detail::widen(std::tan(a.lo()), std::tan(a.hi()), 2);
}

namespace detail {

// True if lo <= offset + k*period <= hi for some integer k, with a small
// tolerance that only ever enlarges the result.
inline bool contains_critical(double lo, double hi, double offset, double period) {
    const double k = std::ceil((lo - offset) / period - 1e-12);
    return offset + k * period <= hi + 1e-12;
}

}  // namespace detail

inline Interval sin(const Interval& a) {
    if (a.width() >= 2.0 * detail::kPi || !a.is_finite()) {
        return Interval::raw(-1.0, 1.0);
    }
    double lo = std::min(std::sin(a.lo()), std::sin(a.hi()));
    double hi = std::max(std::sin(a.lo()), std::sin(a.hi()));
    if (detail::contains_critical(a.lo(), a.hi(), detail::kHalfPi, 2.0 * detail::kPi)) {
        hi = 1.0;
    }
    if (detail::contains_critical(a.lo(), a.hi(), -detail::kHalfPi, 2.0 * detail::kPi)) {
        lo = -1.0;
    }
    return Interval::raw(std::max(-1.0, detail::down(lo, 2)), std::min(1.0, detail::up(hi, 2)));
}

inline Interval cos(const Interval& a) {
    if (a.width() >= 2.0 * detail::kPi || !a.is_finite()) {
        return Interval::raw(-1.0, 1.0);
    }
    double lo = std::min(std::cos(a.lo()), std::cos(a.hi()));
    double hi = std::max(std::cos(a.lo()), std::cos(a.hi()));
    if (detail::contains_critical(a.lo(), a.hi(), 0.0, 2.0 * detail::kPi)) {
        hi = 1.0;
    }
    if (detail::contains_critical(a.lo(), a.hi(), detail::kPi, 2.0 * detail::kPi)) {
        lo = -1.0;
    }
    return Interval::raw(std::max(-1.0, detail::down(lo, 2)), std::min(1.0, detail::up(hi, 2)));
}

/// Saturation max(lo, min(hi, x)) applied pointwise.
inline Interval clamp_value(const Interval& x, double lo, double hi) {
    return Interval::raw(std::clamp(x.lo(), lo, hi), std::clamp(x.hi(), lo, hi));
}

inline double clamp_value(double x, double lo, double hi) { return std::clamp(x, lo, hi); }

std::ostream& operator<<(std::ostream& os, const Interval& x);

}  // namespace funnelpac
