#include <doctest.h>

#include <cmath>

#include "funnelpac/dynamics.hpp"
#include "funnelpac/errors.hpp"
#include "funnelpac/rng.hpp"

using namespace funnelpac;

namespace {

SystemState bicycle_state(double x, double y, double theta) { return {SystemKind::kBicycle, {x, y, theta}}; }

RolloutSystem decay_system() {
    return {SystemKind::kGeneric,
            [](const std::vector<double>& x, const std::vector<double>&, const std::vector<double>&) {
                return std::vector<double>{-x[0]};
            }};
}

double decay_error(double dt) {
    const auto tr = integrate_rollout(decay_system(), [](double, const std::vector<double>&) { return std::vector<double>{}; },
                                      {SystemKind::kGeneric, {1.0}}, DisturbanceSignal::zero(1), 1.0, dt);
    return std::fabs(tr.states.back().values[0] - std::exp(-1.0));
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("bicycle derivative examples") {
    const std::array<double, 3> w0{0.0, 0.0, 0.0};
    auto d = bicycle_derivative(bicycle_state(0, 0, 0), 10.0, 0.0, 5.0, w0);
    CHECK(d[0] == doctest::Approx(10.0));
    CHECK(d[1] == doctest::Approx(0.0));
    CHECK(d[2] == doctest::Approx(0.0));

    d = bicycle_derivative(bicycle_state(0, 0, M_PI / 2), 10.0, 0.0, 5.0, w0);
    CHECK(std::fabs(d[0]) < 1e-12);
    CHECK(d[1] == doctest::Approx(10.0));
    CHECK(d[2] == doctest::Approx(0.0));

    // 10 * tan(atan 0.5) / 5 = 1
    d = bicycle_derivative(bicycle_state(0, 0, 0), 10.0, std::atan(0.5), 5.0, w0);
    CHECK(d[0] == doctest::Approx(10.0));
    CHECK(d[2] == doctest::Approx(1.0).epsilon(1e-12));

    d = bicycle_derivative(bicycle_state(0, 0, 0), 10.0, 0.0, 5.0, {0.5, -1.0, 0.25});
    CHECK(d[0] == doctest::Approx(10.5));
    CHECK(d[1] == doctest::Approx(-1.0));
    CHECK(d[2] == doctest::Approx(0.25));
}

TEST_CASE("bicycle derivative rejects bad input") {
    const std::array<double, 3> w0{0.0, 0.0, 0.0};
    CHECK_THROWS_AS(bicycle_derivative(bicycle_state(NAN, 0, 0), 10.0, 0.0, 5.0, w0), InvalidStateError);
    CHECK_THROWS_AS(bicycle_derivative(bicycle_state(0, 0, 0), 10.0, 0.0, 5.0, {0.0, INFINITY, 0.0}),
                    InvalidStateError);
    CHECK_THROWS(bicycle_derivative(bicycle_state(0, 0, 0), 10.0, 0.0, 0.0, w0));
    CHECK_THROWS(bicycle_derivative(bicycle_state(0, 0, 0), 10.0, 1.6, 5.0, w0));
}

TEST_CASE("surrogate derivative examples") {
    const SystemState coast{SystemKind::kPlanarSurrogate, {0, 0, 1, 0}};
    auto d = surrogate_derivative(coast, {0, 0}, {0, 0});
    CHECK(d == std::array<double, 4>{1, 0, 0, 0});
    const SystemState rest{SystemKind::kPlanarSurrogate, {0, 0, 0, 0}};
    CHECK(surrogate_derivative(rest, {2, -1}, {0, 0}) == std::array<double, 4>{0, 0, 2, -1});
    CHECK(surrogate_derivative(rest, {0, 0}, {0.1, -0.1}) == std::array<double, 4>{0, 0, 0.1, -0.1});
    CHECK_THROWS_AS(surrogate_derivative(rest, {NAN, 0}, {0, 0}), InvalidStateError);
}

TEST_CASE("disturbance set gamma and containment") {
    const DisturbanceSet ws({-0.5, -1.0, -0.25}, {0.5, 1.0, 0.25});
    CHECK(ws.gamma() == 1.0);
    CHECK(ws.contains({0.5, -1.0, 0.0}));
    CHECK_FALSE(ws.contains({0.6, 0.0, 0.0}));
    CHECK_THROWS(DisturbanceSet({1.0}, {0.0}));
}

TEST_CASE("sample_disturbance") {
    SUBCASE("degenerate box gives the zero signal") {
        const DisturbanceSet zero({0.0, 0.0}, {0.0, 0.0});
        const auto w = sample_disturbance(zero, 3.0, 0.1, 5);
        for (const auto& seg : w.segment_values) {
            CHECK(seg == std::vector<double>{0.0, 0.0});
        }
    }
    SUBCASE("same seed, same signal") {
        const DisturbanceSet ws({-0.5}, {0.5});
        const auto a = sample_disturbance(ws, 2.0, 0.1, 42);
        const auto b = sample_disturbance(ws, 2.0, 0.1, 42);
        CHECK(a.segment_values == b.segment_values);
        const auto c = sample_disturbance(ws, 2.0, 0.1, 43);
        CHECK(a.segment_values != c.segment_values);
    }
    SUBCASE("uniform statistics over 10^4 segments") {
        const DisturbanceSet ws({-0.5}, {0.5});
        const auto w = sample_disturbance(ws, 1000.0, 0.1, 11);
        REQUIRE(w.segment_values.size() == 10000);
        double sum = 0.0;
        for (const auto& seg : w.segment_values) {
            CHECK(seg[0] >= -0.5);
            CHECK(seg[0] <= 0.5);
            sum += seg[0];
        }
        const double mean = sum / 1e4;
        const double se = (1.0 / std::sqrt(12.0)) / std::sqrt(1e4);
        CHECK(std::fabs(mean) < 3.0 * se);
    }
    SUBCASE("errors") {
        const DisturbanceSet ws({-0.5}, {0.5});
        CHECK_THROWS(sample_disturbance(ws, 0.0, 0.1, 1));
        CHECK_THROWS(sample_disturbance(ws, 1.0, 0.0, 1));
    }
}

TEST_CASE("disturbance signals respect gamma") {
    // Property: every segment of a sampled signal lies in the box, for random boxes.
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 1 + trial % 4;
        std::vector<double> lo(d), hi(d);
        for (std::size_t i = 0; i < d; ++i) {
            const double a = uniform(rng, -2.0, 2.0);
            const double b = uniform(rng, -2.0, 2.0);
            lo[i] = std::min(a, b);
            hi[i] = std::max(a, b);
        }
        const DisturbanceSet ws(lo, hi);
        const auto w = sample_disturbance(ws, uniform(rng, 0.1, 5.0), 0.1, rng());
        for (const auto& seg : w.segment_values) {
            CHECK(ws.contains(seg));
            for (double v : seg) CHECK(std::fabs(v) <= ws.gamma());
        }
    }
}

TEST_CASE("disturbance signal lookup holds segments") {
    DisturbanceSignal w;
    w.kind = DisturbanceKind::kPiecewiseConstant;
    w.dim = 1;
    w.segment_duration = 0.5;
    w.segment_values = {{1.0}, {2.0}};
    CHECK(w.at(0.0)[0] == 1.0);
    CHECK(w.at(0.49)[0] == 1.0);
    CHECK(w.at(0.5)[0] == 2.0);
    CHECK(w.at(10.0)[0] == 2.0);
    CHECK(DisturbanceSignal::zero(3).at(7.0) == std::vector<double>{0, 0, 0});
}

TEST_CASE("integrate_rollout examples") {
    SUBCASE("zero dynamics stay at x0") {
        const RolloutSystem still{SystemKind::kGeneric,
                                  [](const std::vector<double>& x, const std::vector<double>&, const std::vector<double>&) {
                                      return std::vector<double>(x.size(), 0.0);
                                  }};
        const auto tr = integrate_rollout(still, [](double, const std::vector<double>&) { return std::vector<double>{}; },
                                          {SystemKind::kGeneric, {1.5, -2.0}}, DisturbanceSignal::zero(1), 1.0, 0.1);
        REQUIRE(tr.states.size() == 11);
        for (const auto& s : tr.states) CHECK(s.values == std::vector<double>{1.5, -2.0});
    }
    SUBCASE("exponential decay") {
        CHECK(decay_error(1e-3) < 1e-6);
        const auto tr = integrate_rollout(decay_system(), [](double, const std::vector<double>&) { return std::vector<double>{}; },
                                          {SystemKind::kGeneric, {1.0}}, DisturbanceSignal::zero(1), 1.0, 1e-3);
        CHECK(tr.times.size() == 1001);
        CHECK(tr.states.size() == 1001);
        CHECK(tr.controls.size() == 1000);
        CHECK(tr.times.front() == 0.0);
    }
    SUBCASE("bicycle at constant speed travels 10 m in 1 s") {
        const RolloutSystem bike{SystemKind::kBicycle,
                                 [](const std::vector<double>& x, const std::vector<double>& u, const std::vector<double>& w) {
                                     const auto d = bicycle_derivative({SystemKind::kBicycle, x}, u[0], u[1], 5.0,
                                                                       {w[0], w[1], w[2]});
                                     return std::vector<double>(d.begin(), d.end());
                                 }};
        const auto tr = integrate_rollout(bike, [](double, const std::vector<double>&) { return std::vector<double>{10.0, 0.0}; },
                                          bicycle_state(0, 0, 0), DisturbanceSignal::zero(3), 1.0, 0.01);
        CHECK(std::fabs(tr.states.back().values[0] - 10.0) < 1e-6);
        CHECK(std::fabs(tr.states.back().values[1]) < 1e-12);
    }
    SUBCASE("horizon must be a multiple of dt") {
        CHECK_THROWS(integrate_rollout(decay_system(), [](double, const std::vector<double>&) { return std::vector<double>{}; },
                                       {SystemKind::kGeneric, {1.0}}, DisturbanceSignal::zero(1), 1.0, 0.3));
    }
    SUBCASE("non-finite control aborts with the time in the message") {
        try {
            integrate_rollout(decay_system(),
                              [](double t, const std::vector<double>&) {
                                  return std::vector<double>{t > 0.25 ? NAN : 0.0};
                              },
                              {SystemKind::kGeneric, {1.0}}, DisturbanceSignal::zero(1), 1.0, 0.1);
            FAIL("expected InvalidStateError");
        } catch (const InvalidStateError& e) {
            CHECK(std::string(e.what()).find("t=") != std::string::npos);
        }
    }
}

TEST_CASE("RK4 order: halving dt divides the error by 12 to 20") {
    for (double dt : {0.1, 0.05, 0.02}) {
        const double ratio = decay_error(dt) / decay_error(dt / 2.0);
        CHECK(ratio >= 12.0);
        CHECK(ratio <= 20.0);
    }
}

TEST_CASE("integrate_rollout is bitwise deterministic") {
    const DisturbanceSet ws({-0.5, -1.0, -0.25}, {0.5, 1.0, 0.25});
    const auto w = sample_disturbance(ws, 2.0, 0.1, 17);
    const RolloutSystem bike{SystemKind::kBicycle,
                             [](const std::vector<double>& x, const std::vector<double>& u, const std::vector<double>& w) {
                                 const auto d = bicycle_derivative({SystemKind::kBicycle, x}, u[0], u[1], 5.0,
                                                                   {w[0], w[1], w[2]});
                                 return std::vector<double>(d.begin(), d.end());
                             }};
    auto ctrl = [](double t, const std::vector<double>& x) { return std::vector<double>{10.0, 0.2 * std::sin(t) - 0.1 * x[1]}; };
    const auto a = integrate_rollout(bike, ctrl, bicycle_state(0, 1, 0), w, 2.0, 0.01);
    const auto b = integrate_rollout(bike, ctrl, bicycle_state(0, 1, 0), w, 2.0, 0.01);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t i = 0; i < a.states.size(); ++i) CHECK(a.states[i].values == b.states[i].values);
}

}
