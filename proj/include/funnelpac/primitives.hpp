#pragma once

// Motion-primitive library: sigmoidal flat-output references, differential
// flatness for the bicycle, PD tracking controllers and the closed-loop vector
// fields consumed by rollouts and by the reachability engine.
//
// The closed-loop fields are templates over the scalar type so the same code
// runs on double (simulation), Interval (enclosures) and Dual (Jacobians).

#include <array>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "funnelpac/dual.hpp"
#include "funnelpac/dynamics.hpp"
#include "funnelpac/interval.hpp"

namespace funnelpac {

/// Lateral move of a primitive: x advances linearly, y follows an
/// affinely-rescaled logistic so that s(0) = 0 and s(1) = 1.
struct SigmoidGeometry {
    double delta_x = 10.0;
    double delta_y = 0.0;
    double duration = 1.0;
    double steepness = 20.0;
};

template <class S>
struct FlatSample {
    S x, y;
    S xd, yd;
    S xdd, ydd;
};

/// One primitive's flat-output path sampled on its time grid.
struct FlatPath {
    SigmoidGeometry geometry;
    std::vector<double> times;
    std::vector<FlatSample<double>> samples;
};

namespace detail {

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

template <class S>
FlatSample<S> sigmoid_flat(const SigmoidGeometry& g, const S& t) {
    using std::exp;
    const double a = g.steepness;
    const double s0 = detail::logistic(-0.5 * a);
    const double s1 = detail::logistic(0.5 * a);
    const double norm = s1 - s0;
    const double inv_T = 1.0 / g.duration;

    const S z = (t * inv_T - 0.5) * a;
    const S sig = 1.0 / (exp(-z) + 1.0);
    const S dsig = sig * (1.0 - sig);
    const S ddsig = dsig * (1.0 - 2.0 * sig);

    FlatSample<S> f;
    f.x = t * (g.delta_x * inv_T);
    f.xd = S(g.delta_x * inv_T);
    f.xdd = S(0.0);
    f.y = (sig - s0) * (g.delta_y / norm);
    f.yd = dsig * (g.delta_y * a * inv_T / norm);
    f.ydd = ddsig * (g.delta_y * a * a * inv_T * inv_T / norm);
    return f;
}

/// Samples the sigmoidal path on [0, duration] every dt.
FlatPath generate_sigmoid_trajectory(double delta_x, double delta_y, double duration, double dt,
                                     double steepness = 20.0);

template <class S>
struct BicycleReference {
    S x, y, theta;
    S speed, steer;
    S curvature;  // tan(steer) / L
};

/// Differential flatness of the kinematic bicycle (requires xd > 0).
template <class S>
BicycleReference<S> bicycle_flatness(const FlatSample<S>& f, double length_L) {
    using std::atan;
    using std::sqrt;
    BicycleReference<S> r;
    r.x = f.x;
    r.y = f.y;
    r.theta = atan(f.yd / f.xd);
    const S v2 = f.xd * f.xd + f.yd * f.yd;
    r.speed = sqrt(v2);
    r.curvature = (f.xd * f.ydd - f.yd * f.xdd) / (v2 * r.speed);
    r.steer = atan(r.curvature * length_L);
    return r;
}

struct DesiredState {
    SystemState state;
    ControlInput feedforward;
};

/// Desired bicycle state [x, y, theta] and feedforward [v, zeta] for one flat sample.
DesiredState flat_to_state(const FlatSample<double>& sample, double length_L);

/// Gains of the tracking controllers.
///
/// Bicycle: the steering loop commands a yaw rate; k_p_pos acts on the
/// lateral error in the desired-heading frame, k_p_heading on the heading
/// error, k_p_along on the along-track error (speed loop).
/// Surrogate: PD on position (k_p_pos) and velocity (k_d_pos) errors.
struct TrackingGains {
    double k_p_pos = 1.0;
    double k_d_pos = 0.0;
    double k_p_heading = 0.0;
    double k_p_along = 0.0;
};

struct ActuatorLimits {
    double speed_min = 1.0;
    double speed_max = 40.0;
    double steer_max = 1.5;
    double accel_max = 50.0;
};

namespace detail {

inline bool certainly_within(double x, double lo, double hi) { return lo <= x && x <= hi; }
inline bool certainly_within(const Interval& x, double lo, double hi) { return lo <= x.lo() && x.hi() <= hi; }
template <class S, std::size_t N>
bool certainly_within(const Dual<S, N>& x, double lo, double hi) {
    return certainly_within(x.v, lo, hi);
}

}  // namespace detail

/// Speed v and yaw rate omega = v * curvature, with curvature tan(zeta) / L
/// saturated at the steering limit.
///
/// The steering loop commands a yaw rate: the path's own yaw rate plus
/// feedback on the lateral error (desired-heading frame) and heading error.
/// Errors are desired minus actual; positive lateral error means the path lies to the vehicle's left.
template <class S>
std::array<S, 2> bicycle_tracking_rates(const std::array<S, 3>& x, const BicycleReference<S>& ref,
                                        const TrackingGains& gains, const ActuatorLimits& limits, double length_L) {
    using std::cos;
    using std::sin;
    const S ex = ref.x - x[0];
    const S ey = ref.y - x[1];
    const S c = cos(ref.theta);
    const S s = sin(ref.theta);
    const S e_along = c * ex + s * ey;
    const S e_lat = c * ey - s * ex;
    const S e_heading = ref.theta - x[2];
    const double kappa_max = std::tan(limits.steer_max) / length_L;
    const S v = clamp_value(ref.speed + gains.k_p_along * e_along, limits.speed_min, limits.speed_max);
    const S omega = ref.speed * ref.curvature + gains.k_p_pos * e_lat + gains.k_p_heading * e_heading;
    const S kappa = omega / v;
    // Where the limit is inactive, v * (omega / v) is omega; returning it
    // directly keeps interval evaluations free of that dependency.
    if (detail::certainly_within(kappa, -kappa_max, kappa_max)) return {v, omega};
    return {v, v * clamp_value(kappa, -kappa_max, kappa_max)};
}

/// Speed and steering angle.
template <class S>
std::array<S, 2> bicycle_tracking(const std::array<S, 3>& x, const BicycleReference<S>& ref,
                                  const TrackingGains& gains, const ActuatorLimits& limits, double length_L) {
    using std::atan;
    const auto u = bicycle_tracking_rates(x, ref, gains, limits, length_L);
    return {u[0], atan(u[1] / u[0] * length_L)};
}

template <class S>
std::array<S, 2> surrogate_tracking(const std::array<S, 4>& x, const FlatSample<S>& ref, const TrackingGains& gains,
                                    const ActuatorLimits& limits) {
    const S ax = ref.xdd + gains.k_p_pos * (ref.x - x[0]) + gains.k_d_pos * (ref.xd - x[2]);
    const S ay = ref.ydd + gains.k_p_pos * (ref.y - x[1]) + gains.k_d_pos * (ref.yd - x[3]);
    return {clamp_value(ax, -limits.accel_max, limits.accel_max), clamp_value(ay, -limits.accel_max, limits.accel_max)};
}

/// Tracking control for either system; desired carries state and feedforward.
ControlInput tracking_control(const SystemState& state, const DesiredState& desired, const TrackingGains& gains,
                              const ActuatorLimits& limits, double length_L = 5.0);

struct PrimitiveSpec {
    std::size_t id = 0;
    SigmoidGeometry geometry;
    double dt = 0.01;
    TrackingGains gains;
    /// Desired states and feedforward controls sampled on the dt grid.
    Trajectory nominal;

    double duration() const { return geometry.duration; }
    double delta_x() const { return geometry.delta_x; }
    double delta_y() const { return geometry.delta_y; }
};

struct SystemParams {
    SystemKind kind = SystemKind::kBicycle;
    double wheelbase = 5.0;  // bicycle only
    ActuatorLimits limits;
};

struct PrimitiveLibrary {
    SystemParams system;
    double dt = 0.01;
    std::vector<PrimitiveSpec> primitives;

    std::size_t size() const { return primitives.size(); }
    /// State-space start of every primitive in its local frame.
    std::vector<double> nominal_start(std::size_t id) const;
    /// State-space displacement between the primitive's start and end (positions only).
    std::vector<double> terminal_offset(std::size_t id) const;
};

struct HighwayLibraryParams {
    double ego_speed = 10.0;
    double lane_width = 4.0;
    double duration = 1.0;
    double steepness = 20.0;
    double wheelbase = 5.0;
    TrackingGains gains{10.0, 0.0, 20.0, 6.0};
    ActuatorLimits limits{1.0, 40.0, 1.5, 50.0};
};

struct SurrogateLibraryParams {
    double forward_step = 1.0;
    double lateral_unit = 0.25;
    double duration = 1.0;
    double steepness = 20.0;
    TrackingGains gains{16.0, 10.0, 0.0, 0.0};
    ActuatorLimits limits{1.0, 40.0, 1.5, 50.0};
};

/// Left lane change, lane keep, right lane change (ids 0, 1, 2).
PrimitiveLibrary build_highway_library(double dt, const HighwayLibraryParams& params = {});

/// Seven forward primitives with lateral offsets -3..3 lateral units, sorted by offset.
PrimitiveLibrary build_surrogate_library(double dt, const SurrogateLibraryParams& params = {});

/// Closed-loop bicycle executing one primitive whose local frame starts at origin.
class BicycleClosedLoop {
public:
    static constexpr std::size_t kStateDim = 3;
    static constexpr std::size_t kDisturbanceDim = 3;

    BicycleClosedLoop(const SigmoidGeometry& geometry, double wheelbase, const TrackingGains& gains,
                      const ActuatorLimits& limits, std::array<double, 2> origin = {0.0, 0.0})
        : geometry_(geometry), wheelbase_(wheelbase), gains_(gains), limits_(limits), origin_(origin) {}

    template <class S>
    BicycleReference<S> reference(const S& t) const {
        auto r = bicycle_flatness(sigmoid_flat(geometry_, t), wheelbase_);
        r.x = r.x + origin_[0];
        r.y = r.y + origin_[1];
        return r;
    }

    /// Speed and steering angle.
    template <class S>
    std::array<S, 2> control(const std::array<S, 3>& x, const S& t) const {
        return bicycle_tracking(x, reference(t), gains_, limits_, wheelbase_);
    }

    /// Undisturbed closed-loop vector field; v tan(zeta) / L is the commanded yaw rate.
    template <class S>
    std::array<S, 3> drift(const std::array<S, 3>& x, const S& t) const {
        using std::cos;
        using std::sin;
        const auto u = bicycle_tracking_rates(x, reference(t), gains_, limits_, wheelbase_);
        return {u[0] * cos(x[2]), u[0] * sin(x[2]), u[1]};
    }

    /// Column j of the matrix mapping disturbance channel j into the state derivative.
    static constexpr std::array<std::array<double, 3>, 3> disturbance_gain() {
        return {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
    }

    std::array<double, 3> nominal_state(double t) const {
        const auto r = reference(t);
        return {r.x, r.y, r.theta};
    }

    double duration() const { return geometry_.duration; }

private:
    SigmoidGeometry geometry_;
    double wheelbase_;
    TrackingGains gains_;
    ActuatorLimits limits_;
    std::array<double, 2> origin_;
};

/// Closed-loop planar double integrator executing one primitive.
class SurrogateClosedLoop {
public:
    static constexpr std::size_t kStateDim = 4;
    static constexpr std::size_t kDisturbanceDim = 2;

    SurrogateClosedLoop(const SigmoidGeometry& geometry, const TrackingGains& gains, const ActuatorLimits& limits,
                        std::array<double, 2> origin = {0.0, 0.0})
        : geometry_(geometry), gains_(gains), limits_(limits), origin_(origin) {}

    template <class S>
    FlatSample<S> reference(const S& t) const {
        auto f = sigmoid_flat(geometry_, t);
        f.x = f.x + origin_[0];
        f.y = f.y + origin_[1];
        return f;
    }

    template <class S>
    std::array<S, 2> control(const std::array<S, 4>& x, const S& t) const {
        return surrogate_tracking(x, reference(t), gains_, limits_);
    }

    template <class S>
    std::array<S, 4> drift(const std::array<S, 4>& x, const S& t) const {
        const auto a = control(x, t);
        return {x[2], x[3], a[0], a[1]};
    }

    static constexpr std::array<std::array<double, 2>, 4> disturbance_gain() {
        return {{{0.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}};
    }

    std::array<double, 4> nominal_state(double t) const {
        const auto f = reference(t);
        return {f.x, f.y, f.xd, f.yd};
    }

    double duration() const { return geometry_.duration; }

private:
    SigmoidGeometry geometry_;
    TrackingGains gains_;
    ActuatorLimits limits_;
    std::array<double, 2> origin_;
};

/// Full disturbed field f0(x, t) + G w of a closed loop, for RK4.
template <class ClosedLoop, std::size_t N = ClosedLoop::kStateDim>
std::array<double, N> closed_loop_field(const ClosedLoop& cl, const std::array<double, N>& x, double t,
                                        const std::vector<double>& w) {
    auto dx = cl.template drift<double>(x, t);
    constexpr auto G = ClosedLoop::disturbance_gain();
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < ClosedLoop::kDisturbanceDim; ++j) {
            dx[i] += G[i][j] * w[j];
        }
    }
    return dx;
}

/// Invokes fn with the closed loop of primitive id translated to origin.
template <class Fn>
decltype(auto) with_closed_loop(const PrimitiveLibrary& lib, std::size_t id, std::array<double, 2> origin, Fn&& fn) {
    const PrimitiveSpec& p = lib.primitives.at(id);
    if (lib.system.kind == SystemKind::kBicycle) {
        return fn(BicycleClosedLoop(p.geometry, lib.system.wheelbase, p.gains, lib.system.limits, origin));
    }
    return fn(SurrogateClosedLoop(p.geometry, p.gains, lib.system.limits, origin));
}

}  // namespace funnelpac
