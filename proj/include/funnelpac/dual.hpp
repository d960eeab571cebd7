#pragma once

// Forward-mode dual numbers over an arbitrary scalar (double or Interval).
//
// Dual<Interval, N> evaluates a function and an enclosure of its Jacobian
// over a box in one pass; the reachability engine uses it for mean-value
// forms and for the time derivative of a vector field along trajectories.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <type_traits>

#include "funnelpac/interval.hpp"

namespace funnelpac {

template <class S, std::size_t N>
struct Dual {
    S v{};
    std::array<S, N> d{};

    Dual() = default;
    Dual(const S& value) : v(value) {  // NOLINT(implicit)
        d.fill(S(0.0));
    }
    Dual(double value) requires(!std::is_same_v<S, double>) : v(S(value)) {  // NOLINT(implicit)
        d.fill(S(0.0));
    }

    static Dual variable(const S& value, std::size_t index) {
        Dual r(value);
        r.d[index] = S(1.0);
        return r;
    }

    friend Dual operator+(const Dual& a, const Dual& b) {
        Dual r;
        r.v = a.v + b.v;
        for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
        return r;
    }
    friend Dual operator-(const Dual& a, const Dual& b) {
        Dual r;
        r.v = a.v - b.v;
        for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
        return r;
    }
    friend Dual operator-(const Dual& a) {
        Dual r;
        r.v = -a.v;
        for (std::size_t i = 0; i < N; ++i) r.d[i] = -a.d[i];
        return r;
    }
    friend Dual operator*(const Dual& a, const Dual& b) {
        Dual r;
        r.v = a.v * b.v;
        for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
        return r;
    }
    friend Dual operator/(const Dual& a, const Dual& b) {
        Dual r;
        r.v = a.v / b.v;
        const S inv_b2 = S(1.0) / (b.v * b.v);
        for (std::size_t i = 0; i < N; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) * inv_b2;
        return r;
    }

    friend Dual operator+(const Dual& a, double b) { return a + Dual(S(b)); }
    friend Dual operator+(double a, const Dual& b) { return Dual(S(a)) + b; }
    friend Dual operator-(const Dual& a, double b) { return a - Dual(S(b)); }
    friend Dual operator-(double a, const Dual& b) { return Dual(S(a)) - b; }
    friend Dual operator*(const Dual& a, double b) {
        Dual r;
        r.v = a.v * b;
        for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * b;
        return r;
    }
    friend Dual operator*(double a, const Dual& b) { return b * a; }
    friend Dual operator/(const Dual& a, double b) { return a / Dual(S(b)); }
    friend Dual operator/(double a, const Dual& b) { return Dual(S(a)) / b; }
};

namespace detail {

template <class S, std::size_t N, class F, class DF>
Dual<S, N> chain(const Dual<S, N>& a, F&& f, DF&& df) {
    Dual<S, N> r;
    r.v = f(a.v);
    const S g = df(a.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = g * a.d[i];
    return r;
}

}  // namespace detail

template <class S, std::size_t N>
Dual<S, N> sin(const Dual<S, N>& a) {
    using std::cos;
    using std::sin;
    return detail::chain(a, [](const S& x) { return sin(x); }, [](const S& x) { return cos(x); });
}

template <class S, std::size_t N>
Dual<S, N> cos(const Dual<S, N>& a) {
    using std::cos;
    using std::sin;
    return detail::chain(a, [](const S& x) { return cos(x); }, [](const S& x) { return -sin(x); });
}

template <class S, std::size_t N>
Dual<S, N> tan(const Dual<S, N>& a) {
    using std::tan;
    return detail::chain(
        a, [](const S& x) { return tan(x); },
        [](const S& x) {
            const S t = tan(x);
            return S(1.0) + t * t;
        });
}

template <class S, std::size_t N>
Dual<S, N> atan(const Dual<S, N>& a) {
    using std::atan;
    return detail::chain(a, [](const S& x) { return atan(x); }, [](const S& x) { return S(1.0) / (S(1.0) + x * x); });
}

template <class S, std::size_t N>
Dual<S, N> exp(const Dual<S, N>& a) {
    using std::exp;
    const S e = exp(a.v);
    return detail::chain(a, [&](const S&) { return e; }, [&](const S&) { return e; });
}

template <class S, std::size_t N>
Dual<S, N> sqrt(const Dual<S, N>& a) {
    using std::sqrt;
    const S s = sqrt(a.v);
    return detail::chain(a, [&](const S&) { return s; }, [&](const S&) { return S(0.5) / s; });
}

template <std::size_t N>
Dual<double, N> clamp_value(const Dual<double, N>& x, double lo, double hi) {
    if (x.v < lo) return Dual<double, N>(lo);
    if (x.v > hi) return Dual<double, N>(hi);
    return x;
}

/// Interval saturation; the derivative is the hull of the one-sided slopes
/// wherever the argument straddles a limit.
template <std::size_t N>
Dual<Interval, N> clamp_value(const Dual<Interval, N>& x, double lo, double hi) {
    Dual<Interval, N> r;
    r.v = clamp_value(x.v, lo, hi);
    Interval slope;
    if (x.v.hi() < lo || x.v.lo() > hi) {
        slope = Interval(0.0);
    } else if (x.v.lo() >= lo && x.v.hi() <= hi) {
        slope = Interval(1.0);
    } else {
        slope = Interval(0.0, 1.0);
    }
    for (std::size_t i = 0; i < N; ++i) r.d[i] = slope * x.d[i];
    return r;
}

/// Saturation for second-order (nested) duals. The second derivative does not
/// exist across a limit, so an argument straddling one is a domain error.
template <std::size_t N, std::size_t M>
Dual<Dual<Interval, N>, M> clamp_value(const Dual<Dual<Interval, N>, M>& x, double lo, double hi) {
    const Interval& v = x.v.v;
    if (v.lo() >= lo && v.hi() <= hi) return x;
    if (v.hi() < lo) return Dual<Dual<Interval, N>, M>(Dual<Interval, N>(Interval(lo)));
    if (v.lo() > hi) return Dual<Dual<Interval, N>, M>(Dual<Interval, N>(Interval(hi)));
    throw std::domain_error("clamp_value: second derivative undefined across a saturation limit");
}

}  // namespace funnelpac
