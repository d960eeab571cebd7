#include <doctest.h>

#include <cmath>
#include <functional>

#include "funnelpac/dual.hpp"
#include "funnelpac/interval.hpp"
#include "funnelpac/rng.hpp"

using namespace funnelpac;

TEST_SUITE("interval") {

TEST_CASE("construction rejects reversed bounds") {
    CHECK_THROWS(Interval(1.0, 0.0));
    const Interval a(-1.0, 2.0);
    CHECK(a.width() == 3.0);
    CHECK(a.mag() == 2.0);
    CHECK(a.contains_zero());
}

// Any point evaluation of an operation on points of the arguments lies in the
// interval evaluation.
TEST_CASE("elementary operations enclose point evaluations") {
    Rng rng(7);
    auto random_interval = [&](double lo, double hi) {
        const double a = uniform(rng, lo, hi);
        const double b = uniform(rng, lo, hi);
        return Interval(std::min(a, b), std::max(a, b));
    };
    auto point_in = [&](const Interval& x) { return uniform(rng, x.lo(), x.hi()); };

    for (int trial = 0; trial < 2000; ++trial) {
        const Interval x = random_interval(-3.0, 3.0);
        const Interval y = random_interval(-3.0, 3.0);
        const Interval pos = random_interval(0.1, 4.0);
        const double px = point_in(x);
        const double py = point_in(y);
        const double pp = point_in(pos);
        CHECK((x + y).contains(px + py));
        CHECK((x - y).contains(px - py));
        CHECK((x * y).contains(px * py));
        CHECK((x / pos).contains(px / pp));
        CHECK(sqr(x).contains(px * px));
        CHECK(abs(x).contains(std::fabs(px)));
        CHECK(sqrt(pos).contains(std::sqrt(pp)));
        CHECK(exp(x).contains(std::exp(px)));
        CHECK(atan(x).contains(std::atan(px)));
        CHECK(sin(x).contains(std::sin(px)));
        CHECK(cos(x).contains(std::cos(px)));
        const Interval small = random_interval(-1.4, 1.4);
        const double ps = point_in(small);
        CHECK(tan(small).contains(std::tan(ps)));
        CHECK(clamp_value(x, -1.0, 1.0).contains(std::clamp(px, -1.0, 1.0)));
    }
}

TEST_CASE("sin and cos reach their extrema inside wide intervals") {
    const Interval s = sin(Interval(0.0, 2.0));
    CHECK(s.hi() >= 1.0);
    const Interval c = cos(Interval(3.0, 3.3));
    CHECK(c.lo() <= -1.0);
}

TEST_CASE("outward rounding keeps exact sums enclosed") {
    const Interval tenth(0.1);
    Interval acc(0.0);
    for (int i = 0; i < 10; ++i) acc += tenth;
    CHECK(acc.contains(1.0));
    CHECK(acc.width() < 1e-14);
}

TEST_CASE("hull and intersect") {
    const Interval a(0.0, 1.0);
    const Interval b(0.5, 2.0);
    CHECK(hull(a, b).lo() == 0.0);
    CHECK(hull(a, b).hi() == 2.0);
    CHECK(intersect(a, b).lo() == 0.5);
    CHECK(intersect(a, b).hi() == 1.0);
    CHECK(a.subset_of(hull(a, b)));
}

}

TEST_SUITE("interval") {

TEST_CASE("dual numbers give exact derivatives") {
    using D = Dual<double, 2>;
    const D x = D::variable(0.7, 0);
    const D y = D::variable(-0.3, 1);
    const D f = sin(x) * y + exp(y);
    CHECK(f.v == doctest::Approx(std::sin(0.7) * -0.3 + std::exp(-0.3)));
    CHECK(f.d[0] == doctest::Approx(std::cos(0.7) * -0.3));
    CHECK(f.d[1] == doctest::Approx(std::sin(0.7) + std::exp(-0.3)));
}

TEST_CASE("interval duals enclose point derivatives") {
    using D = Dual<Interval, 1>;
    const Interval box(0.2, 0.5);
    const D x = D::variable(box, 0);
    const D f = atan(x) * x;
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const double p = uniform(rng, 0.2, 0.5);
        CHECK(f.d[0].contains(p / (1.0 + p * p) + std::atan(p)));
    }
}

}
