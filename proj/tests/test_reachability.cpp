#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "funnelpac/errors.hpp"
#include "funnelpac/reachability.hpp"

using namespace funnelpac;

namespace {

// x' = -a x + w
struct ScalarDecay {
    static constexpr std::size_t kStateDim = 1;
    static constexpr std::size_t kDisturbanceDim = 1;
    double rate = 1.0;

    template <class S>
    std::array<S, 1> drift(const std::array<S, 1>& x, const S&) const {
        return {x[0] * (-rate)};
    }
    static constexpr std::array<std::array<double, 1>, 1> disturbance_gain() { return {{{1.0}}}; }
    std::array<double, 1> nominal_state(double) const { return {0.0}; }
    double duration() const { return 1.0; }
};

// x' = 0
struct Static2 {
    static constexpr std::size_t kStateDim = 2;
    static constexpr std::size_t kDisturbanceDim = 1;

    template <class S>
    std::array<S, 2> drift(const std::array<S, 2>& x, const S&) const {
        return {x[0] * 0.0, x[1] * 0.0};
    }
    static constexpr std::array<std::array<double, 1>, 2> disturbance_gain() { return {{{0.0}, {0.0}}}; }
    std::array<double, 2> nominal_state(double) const { return {0.0, 0.0}; }
    double duration() const { return 1.0; }
};

// Closed-form |x(t)| bound for x' = -x + w, |x0| <= a, |w| <= g.
double envelope(double a, double g, double t) { return a * std::exp(-t) + g * (1.0 - std::exp(-t)); }

Funnel scalar_funnel(double a, double g, double dt_f) {
    FunnelOptions opt;
    opt.dt_f = dt_f;
    return compute_funnel(ScalarDecay{}, Box{{-a}, {a}}, DisturbanceSet({-g}, {g}), 1.0, opt);
}

Funnel box_funnel(std::vector<Box> boxes, std::vector<double> offset) {
    Funnel f;
    f.times.resize(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) f.times[i] = 0.01 * i;
    f.boxes = std::move(boxes);
    f.offset = std::move(offset);
    return f;
}

}  // namespace

TEST_SUITE("reachability") {

TEST_CASE("static system keeps the inlet") {
    FunnelOptions opt;
    const Box inlet{{-0.3, -0.1}, {0.3, 0.1}};
    const Funnel f = compute_funnel(Static2{}, inlet, DisturbanceSet({-1.0}, {1.0}), 1.0, opt);
    REQUIRE(f.boxes.size() == 101);
    for (const auto& b : f.boxes) {
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(b.lower[i] == doctest::Approx(inlet.lower[i]).epsilon(1e-12));
            CHECK(b.upper[i] == doctest::Approx(inlet.upper[i]).epsilon(1e-12));
            CHECK(b.lower[i] <= inlet.lower[i]);
            CHECK(b.upper[i] >= inlet.upper[i]);
        }
    }
}

TEST_CASE("scalar linear system: closed-form containment and tightness") {
    const double a = 0.05, g = 0.1;
    const Funnel f = scalar_funnel(a, g, 0.01);
    REQUIRE(f.boxes.size() == 101);
    CHECK(f.inlet().lower[0] == -a);
    CHECK(f.inlet().upper[0] == a);
    for (std::size_t k = 0; k < f.boxes.size(); ++k) {
        const double e = envelope(a, g, f.times[k]);
        CHECK(f.boxes[k].lower[0] <= -e);
        CHECK(f.boxes[k].upper[0] >= e);
    }
    const double exact_width = 2.0 * envelope(a, g, 1.0);
    CHECK(f.outlet().widths()[0] <= 2.0 * exact_width);
    CHECK(f.times.back() == doctest::Approx(1.0));
}

TEST_CASE("funnel invariants on random scalar instances") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = uniform(rng, 0.0, 0.5);
        const double g = uniform(rng, 0.01, 0.5);
        const Funnel f = scalar_funnel(a, g, 0.01);
        for (std::size_t k = 0; k < f.boxes.size(); ++k) {
            CHECK(f.boxes[k].lower[0] <= f.boxes[k].upper[0]);
            const double e = envelope(a, g, f.times[k]);
            CHECK(f.boxes[k].lower[0] <= -e);
            CHECK(f.boxes[k].upper[0] >= e);
        }
    }
}

TEST_CASE("refinement: halving dt_f does not widen boxes") {
    const Funnel coarse = scalar_funnel(0.05, 0.1, 0.01);
    const Funnel fine = scalar_funnel(0.05, 0.1, 0.005);
    REQUIRE(fine.boxes.size() == 2 * coarse.boxes.size() - 1);
    for (std::size_t k = 0; k < coarse.boxes.size(); ++k) {
        CHECK(fine.boxes[2 * k].widths()[0] <= coarse.boxes[k].widths()[0] + 1e-9);
    }

    const auto& hw = fixtures::highway();
    FunnelOptions opt = hw.config.funnel_library.funnel;
    const Box inlet = hw.certified.funnels[0].inlet();
    const Funnel hc = compute_primitive_funnel(hw.primitives, 0, inlet, hw.ws, opt);
    opt.dt_f *= 0.5;
    const Funnel hf = compute_primitive_funnel(hw.primitives, 0, inlet, hw.ws, opt);
    for (std::size_t k = 0; k < hc.boxes.size(); ++k) {
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(hf.boxes[2 * k].widths()[i] <= hc.boxes[k].widths()[i] + 1e-9);
        }
    }
}

TEST_CASE("compute_funnel errors") {
    FunnelOptions opt;
    CHECK_THROWS_AS(compute_funnel(ScalarDecay{}, Box{{-1.0, 0.0}, {1.0, 0.0}}, DisturbanceSet({-0.1}, {0.1}), 1.0, opt),
                    ContractViolation);
    CHECK_THROWS_AS(compute_funnel(ScalarDecay{}, Box{{1.0}, {-1.0}}, DisturbanceSet({-0.1}, {0.1}), 1.0, opt),
                    ContractViolation);
    // Fast divergence leaves a small working box.
    opt.working_margin = 0.5;
    CHECK_THROWS_AS(compute_funnel(ScalarDecay{-5.0}, Box{{0.9}, {1.1}}, DisturbanceSet({-0.1}, {0.1}), 1.0, opt),
                    DivergenceError);
}

TEST_CASE("check_composable examples") {
    const Box inlet2{{-0.2, -0.2}, {0.2, 0.2}};
    const Funnel fj = box_funnel({Box{{0.0, 0.0}, {0.1, 0.1}}, Box{{0.9, 0.9}, {1.1, 1.1}}}, {1.0, 1.0});
    const Funnel fk = box_funnel({inlet2, inlet2}, {0.0, 0.0});
    CHECK(check_composable(fj, fk));

    const Funnel wide = box_funnel({Box{{-0.3}, {0.3}}, Box{{-0.3}, {0.3}}}, {0.0});
    const Funnel narrow = box_funnel({Box{{-0.2}, {0.2}}, Box{{-0.2}, {0.2}}}, {0.0});
    CHECK_FALSE(check_composable(wide, narrow));
    CHECK(check_composable(narrow, wide));
    CHECK_THROWS_AS(check_composable(fj, narrow), ContractViolation);

    for (const auto* s : {&fixtures::highway(), &fixtures::surrogate()}) {
        CHECK(s->certified.all_pairs_composable());
        for (std::size_t j = 0; j < s->certified.size(); ++j) CHECK(check_composable(s->certified.funnels[j], s->certified.funnels[j]));
    }
    CHECK(fixtures::highway().certified.size() == 3);
    CHECK(fixtures::surrogate().certified.size() == 7);
}

TEST_CASE("composability survives enlarging the successor") {
    const auto& lib = fixtures::surrogate().certified;
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t i = rng() % lib.size();
        const std::size_t j = rng() % lib.size();
        REQUIRE(lib.composability[i][j]);
        Funnel grown = lib.funnels[j];
        for (auto& b : grown.boxes) {
            for (std::size_t d = 0; d < b.dim(); ++d) {
                b.lower[d] -= uniform(rng, 0.0, 0.5);
                b.upper[d] += uniform(rng, 0.0, 0.5);
            }
        }
        CHECK(check_composable(lib.funnels[i], grown));
    }
}

TEST_CASE("Monte-Carlo falsification") {
    const double a = 0.05, g = 0.1;
    const DisturbanceSet ws({-g}, {g});
    SUBCASE("sound scalar funnel") {
        const Funnel f = scalar_funnel(a, g, 0.01);
        const auto rep = verify_funnel_monte_carlo(f, ScalarDecay{}, ws, 10000, 3);
        CHECK(rep.samples == 10000);
        CHECK(rep.violating_samples == 0);
        CHECK(rep.worst_margin >= 0.0);
    }
    SUBCASE("planted fault: boxes shrunk by half") {
        Funnel f = scalar_funnel(a, g, 0.01);
        for (auto& b : f.boxes) {
            const double c = 0.5 * (b.lower[0] + b.upper[0]);
            const double r = 0.25 * (b.upper[0] - b.lower[0]);
            b.lower[0] = c - r;
            b.upper[0] = c + r;
        }
        const auto rep = verify_funnel_monte_carlo(f, ScalarDecay{}, ws, 1000, 3);
        CHECK(rep.violating_samples > 0);
        CHECK(rep.worst_margin < 0.0);
    }
    SUBCASE("point inlet without disturbance follows the nominal") {
        FunnelOptions opt;
        const DisturbanceSet none({0.0}, {0.0});
        const Funnel f = compute_funnel(ScalarDecay{}, Box{{0.3}, {0.3}}, none, 1.0, opt);
        const auto rep = verify_funnel_monte_carlo(f, ScalarDecay{}, none, 10, 1);
        CHECK(rep.violating_samples == 0);
        CHECK(f.outlet().contains({0.3 * std::exp(-1.0)}));
        CHECK(f.outlet().widths()[0] < 1e-6);
    }
    SUBCASE("shipped library funnels") {
        for (const auto* s : {&fixtures::highway(), &fixtures::surrogate()}) {
            for (const auto& f : s->certified.funnels) {
                const auto rep = verify_library_funnel(s->primitives, f, s->ws, 300, 12);
                CHECK(rep.violating_samples == 0);
            }
        }
    }
    CHECK_THROWS_AS(verify_funnel_monte_carlo(scalar_funnel(a, g, 0.01), ScalarDecay{}, ws, 0, 1), ContractViolation);
}

TEST_CASE("translate_funnel") {
    const Funnel f = fixtures::highway().certified.funnels[0];
    const Funnel same = translate_funnel(f, {0.0, 0.0, 0.0});
    for (std::size_t k = 0; k < f.boxes.size(); ++k) {
        CHECK(same.boxes[k].lower == f.boxes[k].lower);
        CHECK(same.boxes[k].upper == f.boxes[k].upper);
    }
    const Funnel there = translate_funnel(f, {12.5, -3.25, 0.0});
    const Funnel back = translate_funnel(there, {-12.5, 3.25, 0.0});
    for (std::size_t k = 0; k < f.boxes.size(); ++k) {
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(back.boxes[k].lower[i] == doctest::Approx(f.boxes[k].lower[i]).epsilon(1e-12));
            CHECK(there.boxes[k].widths()[i] == doctest::Approx(f.boxes[k].widths()[i]).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(translate_funnel(f, {0.0, 0.0, 0.1}), ContractViolation);
    CHECK_THROWS_AS(translate_funnel(f, {0.0, 0.0}), ContractViolation);
}

TEST_CASE("concatenated rollouts stay in the chained funnels") {
    const auto& s = fixtures::highway();
    const auto& lib = s.certified;
    Rng rng(31);
    const double h = 0.001;
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t j = rng() % 3;
        const std::size_t k = rng() % 3;
        REQUIRE(lib.composability[j][k]);
        const Funnel& fj = lib.funnels[j];
        const Funnel fk = translate_funnel(lib.funnels[k], fj.offset);
        std::array<double, 3> x;
        for (std::size_t i = 0; i < 3; ++i) x[i] = uniform(rng, fj.inlet().lower[i], fj.inlet().upper[i]);
        const auto w = sample_disturbance(s.ws, 2.0, 0.1, rng());
        bool inside = true;
        for (int leg = 0; leg < 2; ++leg) {
            const Funnel& f = leg == 0 ? fj : fk;
            const std::array<double, 2> origin = leg == 0 ? std::array<double, 2>{0.0, 0.0}
                                                          : std::array<double, 2>{fj.offset[0], fj.offset[1]};
            const auto& p = s.primitives.primitives[leg == 0 ? j : k];
            const BicycleClosedLoop cl(p.geometry, s.primitives.system.wheelbase, p.gains, s.primitives.system.limits, origin);
            for (std::size_t g = 0; g < f.boxes.size(); ++g) {
                if (g > 0) {
                    for (int sub = 0; sub < 10; ++sub) {
                        const double t = f.times[g - 1] + sub * h;
                        const auto& wk = w.at(leg + t + 0.5 * h);
                        x = rk4_step<3>([&](const std::array<double, 3>& y, double tt) { return closed_loop_field(cl, y, tt, wk); },
                                        x, t, h);
                    }
                }
                inside = inside && f.boxes[g].contains({x[0], x[1], x[2]});
            }
        }
        CHECK(inside);
    }
}

}
