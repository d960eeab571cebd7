#include <doctest.h>

#include <cmath>

#include "funnelpac/errors.hpp"
#include "funnelpac/primitives.hpp"
#include "funnelpac/rng.hpp"

using namespace funnelpac;

namespace {

// Undisturbed RK4 run of a closed loop from its nominal start; returns the
// states at every dt grid point.
template <class CL>
std::vector<std::array<double, CL::kStateDim>> closed_loop_run(const CL& cl, double dt, int substeps,
                                                               const std::vector<std::vector<double>>& w_segments = {},
                                                               double segment = 0.1) {
    constexpr std::size_t N = CL::kStateDim;
    std::array<double, N> x = cl.nominal_state(0.0);
    const std::size_t steps = static_cast<std::size_t>(std::llround(cl.duration() / dt));
    const double h = dt / substeps;
    std::vector<double> zero(CL::kDisturbanceDim, 0.0);
    std::vector<std::array<double, N>> out{x};
    for (std::size_t k = 0; k < steps; ++k) {
        for (int s = 0; s < substeps; ++s) {
            const double t = static_cast<double>(k) * dt + s * h;
            const std::vector<double>* w = &zero;
            if (!w_segments.empty()) {
                const std::size_t idx = std::min(w_segments.size() - 1, static_cast<std::size_t>((t + 0.5 * h) / segment));
                w = &w_segments[idx];
            }
            x = rk4_step<N>([&](const std::array<double, N>& y, double tt) { return closed_loop_field(cl, y, tt, *w); },
                            x, t, h);
        }
        out.push_back(x);
    }
    return out;
}

BicycleClosedLoop bicycle_loop(const PrimitiveLibrary& lib, std::size_t j) {
    const auto& p = lib.primitives[j];
    return BicycleClosedLoop(p.geometry, lib.system.wheelbase, p.gains, lib.system.limits);
}

SurrogateClosedLoop surrogate_loop(const PrimitiveLibrary& lib, std::size_t j) {
    const auto& p = lib.primitives[j];
    return SurrogateClosedLoop(p.geometry, p.gains, lib.system.limits);
}

}  // namespace

TEST_SUITE("primitives") {

TEST_CASE("sigmoid trajectory") {
    SUBCASE("zero lateral move is a straight line") {
        const auto path = generate_sigmoid_trajectory(10.0, 0.0, 1.0, 0.01);
        REQUIRE(path.samples.size() == 101);
        for (const auto& s : path.samples) {
            CHECK(s.y == 0.0);
            CHECK(s.yd == 0.0);
            CHECK(s.ydd == 0.0);
            CHECK(s.xd == doctest::Approx(10.0));
        }
    }
    SUBCASE("symmetric midpoint and exact endpoints") {
        const auto path = generate_sigmoid_trajectory(10.0, 4.0, 1.0, 0.01);
        CHECK(std::fabs(path.samples[50].y - 2.0) < 1e-6);
        CHECK(std::fabs(path.samples.front().y) < 1e-12);
        CHECK(std::fabs(path.samples.back().y - 4.0) < 1e-12);
        CHECK(path.samples.back().x == doctest::Approx(10.0));
    }
    SUBCASE("endpoint slopes are flat") {
        const double dy = 4.0;
        const auto path = generate_sigmoid_trajectory(10.0, dy, 1.0, 0.01);
        // ds/d(t/T) at the ends, with y = dy * s
        CHECK(std::fabs(path.samples.front().yd / dy) < 1e-3);
        CHECK(std::fabs(path.samples.back().yd / dy) < 1e-3);
        const double heading = std::atan2(path.samples.back().yd, path.samples.back().xd);
        CHECK(std::fabs(heading) < 1e-3);
    }
    SUBCASE("analytic derivatives match finite differences") {
        const SigmoidGeometry g{10.0, 4.0, 1.0, 20.0};
        const double h = 1e-6;
        for (double t : {0.1, 0.37, 0.5, 0.81}) {
            const auto a = sigmoid_flat(g, t - h);
            const auto b = sigmoid_flat(g, t + h);
            const auto c = sigmoid_flat(g, t);
            CHECK(c.yd == doctest::Approx((b.y - a.y) / (2 * h)).epsilon(1e-6));
            CHECK(c.ydd == doctest::Approx((b.yd - a.yd) / (2 * h)).epsilon(1e-6));
            CHECK(c.xd == doctest::Approx((b.x - a.x) / (2 * h)).epsilon(1e-9));
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS(generate_sigmoid_trajectory(10.0, 0.0, 0.0, 0.01));
        CHECK_THROWS(generate_sigmoid_trajectory(10.0, 0.0, -1.0, 0.01));
        CHECK_THROWS(generate_sigmoid_trajectory(0.0, 1.0, 1.0, 0.01));
    }
}

TEST_CASE("flat_to_state") {
    SUBCASE("straight segment") {
        const FlatSample<double> f{0, 0, 10, 0, 0, 0};
        const auto d = flat_to_state(f, 5.0);
        CHECK(d.state.values[2] == 0.0);
        CHECK(d.feedforward.values[0] == doctest::Approx(10.0));
        CHECK(d.feedforward.values[1] == 0.0);
    }
    SUBCASE("unit circle has curvature 1") {
        const double t = 0.3;
        const FlatSample<double> f{std::sin(t), -std::cos(t), std::cos(t), std::sin(t), -std::sin(t), std::cos(t)};
        const auto d = flat_to_state(f, 1.0);
        CHECK(d.feedforward.values[1] == doctest::Approx(M_PI / 4).epsilon(1e-12));
        CHECK(d.feedforward.values[0] == doctest::Approx(1.0));
        CHECK(d.state.values[2] == doctest::Approx(t));
    }
    SUBCASE("mirrored path negates heading and steering") {
        const SigmoidGeometry g{10.0, 4.0, 1.0, 20.0};
        const SigmoidGeometry m{10.0, -4.0, 1.0, 20.0};
        for (double t : {0.2, 0.45, 0.6}) {
            const auto a = flat_to_state(sigmoid_flat(g, t), 5.0);
            const auto b = flat_to_state(sigmoid_flat(m, t), 5.0);
            CHECK(a.state.values[2] == doctest::Approx(-b.state.values[2]));
            CHECK(a.feedforward.values[1] == doctest::Approx(-b.feedforward.values[1]));
            CHECK(a.state.values[1] == doctest::Approx(-b.state.values[1]));
        }
    }
    SUBCASE("degenerate speed") {
        const FlatSample<double> f{0, 0, 1e-9, 0, 0, 0};
        CHECK_THROWS_AS(flat_to_state(f, 5.0), InvalidStateError);
    }
}

TEST_CASE("tracking_control") {
    const TrackingGains g{10.0, 0.0, 20.0, 6.0};
    const ActuatorLimits lim{1.0, 40.0, 1.5, 50.0};
    const auto desired = flat_to_state(sigmoid_flat(SigmoidGeometry{10.0, 4.0, 1.0, 20.0}, 0.4), 5.0);

    SUBCASE("zero error gives the feedforward") {
        const auto u = tracking_control(desired.state, desired, g, lim, 5.0);
        CHECK(u.values[0] == doctest::Approx(desired.feedforward.values[0]));
        CHECK(u.values[1] == doctest::Approx(desired.feedforward.values[1]));
    }
    SUBCASE("lateral offset steers back toward the path") {
        DesiredState straight = flat_to_state(FlatSample<double>{0, 0, 10, 0, 0, 0}, 5.0);
        const auto left = tracking_control({SystemKind::kBicycle, {0, 0.5, 0}}, straight, g, lim, 5.0);
        CHECK(left.values[1] < 0.0);
        const auto right = tracking_control({SystemKind::kBicycle, {0, -0.5, 0}}, straight, g, lim, 5.0);
        CHECK(right.values[1] > 0.0);
    }
    SUBCASE("huge error saturates at the actuator box") {
        DesiredState straight = flat_to_state(FlatSample<double>{0, 0, 10, 0, 0, 0}, 5.0);
        const auto u = tracking_control({SystemKind::kBicycle, {0, 1000.0, 0}}, straight, g, lim, 5.0);
        CHECK(u.values[1] == doctest::Approx(-lim.steer_max));

        const TrackingGains pd{16.0, 10.0, 0.0, 0.0};
        DesiredState d{{SystemKind::kPlanarSurrogate, {0, 0, 1, 0}}, {{0, 0}}};
        const auto a = tracking_control({SystemKind::kPlanarSurrogate, {-1e4, 1e4, 0, 0}}, d, pd, lim);
        CHECK(a.values[0] == lim.accel_max);
        CHECK(a.values[1] == -lim.accel_max);
    }
    SUBCASE("surrogate zero error is pure feedforward") {
        const TrackingGains pd{16.0, 10.0, 0.0, 0.0};
        DesiredState d{{SystemKind::kPlanarSurrogate, {1, 2, 1, 0.5}}, {{0.3, -0.2}}};
        const auto a = tracking_control(d.state, d, pd, lim);
        CHECK(a.values[0] == doctest::Approx(0.3));
        CHECK(a.values[1] == doctest::Approx(-0.2));
    }
    SUBCASE("non-finite state rejected") {
        CHECK_THROWS_AS(tracking_control({SystemKind::kBicycle, {NAN, 0, 0}}, desired, g, lim, 5.0), InvalidStateError);
    }
}

TEST_CASE("highway library") {
    const auto lib = build_highway_library(0.01);
    REQUIRE(lib.size() == 3);
    CHECK(lib.system.kind == SystemKind::kBicycle);
    CHECK(lib.primitives[0].delta_y() == 4.0);
    CHECK(lib.primitives[1].delta_y() == 0.0);
    CHECK(lib.primitives[2].delta_y() == -4.0);
    for (std::size_t j = 0; j < 3; ++j) {
        const auto& p = lib.primitives[j];
        CHECK(p.id == j);
        CHECK(p.delta_x() == doctest::Approx(10.0));
        CHECK(p.nominal.states.size() == 101);
        CHECK(p.nominal.controls.size() == 100);
        CHECK(std::fabs(p.nominal.states.front().values[2]) < 1e-3);
        CHECK(std::fabs(p.nominal.states.back().values[2]) < 1e-3);
    }
    CHECK(std::fabs(lib.primitives[1].nominal.states.back().values[1]) == 0.0);
    for (std::size_t k = 0; k < lib.primitives[0].nominal.states.size(); ++k) {
        CHECK(lib.primitives[0].nominal.states[k].values[1] == doctest::Approx(-lib.primitives[2].nominal.states[k].values[1]));
    }
}

TEST_CASE("surrogate library") {
    const auto lib = build_surrogate_library(0.01);
    REQUIRE(lib.size() == 7);
    CHECK(lib.system.kind == SystemKind::kPlanarSurrogate);
    CHECK(lib.primitives[3].delta_y() == 0.0);
    for (std::size_t j = 1; j < 7; ++j) CHECK(lib.primitives[j].delta_y() > lib.primitives[j - 1].delta_y());
    for (const auto& p : lib.primitives) {
        CHECK(p.delta_x() == lib.primitives[0].delta_x());
        CHECK(std::fabs(p.nominal.states.back().values[3]) < 1e-3 * std::max(1.0, std::fabs(p.delta_y())));
    }
}

TEST_CASE("tracking convergence and terminal alignment") {
    const auto hw = build_highway_library(0.01);
    for (std::size_t j = 0; j < hw.size(); ++j) {
        const auto cl = bicycle_loop(hw, j);
        const auto run = closed_loop_run(cl, 0.01, 10);
        double worst = 0.0;
        for (std::size_t k = 0; k < run.size(); ++k) {
            const auto n = cl.nominal_state(k * 0.01);
            worst = std::max(worst, std::hypot(run[k][0] - n[0], run[k][1] - n[1]));
        }
        CHECK(worst < 1e-3);
        CHECK(std::fabs(run.back()[2]) < 1e-3);
    }
    const auto sg = build_surrogate_library(0.01);
    for (std::size_t j = 0; j < sg.size(); ++j) {
        const auto cl = surrogate_loop(sg, j);
        const auto run = closed_loop_run(cl, 0.01, 10);
        double worst = 0.0;
        for (std::size_t k = 0; k < run.size(); ++k) {
            const auto n = cl.nominal_state(k * 0.01);
            worst = std::max(worst, std::hypot(run[k][0] - n[0], run[k][1] - n[1]));
        }
        CHECK(worst < 1e-3);
        CHECK(std::fabs(std::atan2(run.back()[3], run.back()[2])) < 1e-3);
    }
}

TEST_CASE("mirror symmetry under mirrored disturbances") {
    const auto hw = build_highway_library(0.01);
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::vector<double>> w, wm;
        for (int s = 0; s < 10; ++s) {
            const double a = uniform(rng, -0.5, 0.5), b = uniform(rng, -1, 1), c = uniform(rng, -0.25, 0.25);
            w.push_back({a, b, c});
            wm.push_back({a, -b, -c});
        }
        const auto left = closed_loop_run(bicycle_loop(hw, 0), 0.01, 10, w);
        const auto right = closed_loop_run(bicycle_loop(hw, 2), 0.01, 10, wm);
        for (std::size_t k = 0; k < left.size(); ++k) {
            CHECK(left[k][0] == doctest::Approx(right[k][0]).epsilon(1e-9));
            CHECK(left[k][1] == doctest::Approx(-right[k][1]).epsilon(1e-9));
            CHECK(left[k][2] == doctest::Approx(-right[k][2]).epsilon(1e-9));
        }
    }
    const auto sg = build_surrogate_library(0.01);
    std::vector<std::vector<double>> w{{0.05, 0.08}, {-0.02, -0.1}}, wm{{0.05, -0.08}, {-0.02, 0.1}};
    for (std::size_t j = 0; j < 3; ++j) {
        const auto a = closed_loop_run(surrogate_loop(sg, j), 0.01, 10, w, 0.5);
        const auto b = closed_loop_run(surrogate_loop(sg, 6 - j), 0.01, 10, wm, 0.5);
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(a[k][1] == doctest::Approx(-b[k][1]).epsilon(1e-9));
            CHECK(a[k][3] == doctest::Approx(-b[k][3]).epsilon(1e-9));
        }
    }
}

}
