#include "funnelpac/primitives.hpp"

#include <cmath>
#include <string>

#include "funnelpac/errors.hpp"

namespace funnelpac {
namespace {

constexpr double kMinFlatSpeed = 1e-6;

Trajectory sample_nominal(const PrimitiveLibrary& lib, const PrimitiveSpec& p) {
    Trajectory traj;
    const std::size_t steps = step_count(p.duration(), p.dt);
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * p.dt;
        const auto f = sigmoid_flat(p.geometry, t);
        traj.times.push_back(t);
        if (lib.system.kind == SystemKind::kBicycle) {
            const auto d = flat_to_state(f, lib.system.wheelbase);
            traj.states.push_back(d.state);
            if (k < steps) traj.controls.push_back(d.feedforward);
        } else {
            traj.states.push_back(SystemState{SystemKind::kPlanarSurrogate, {f.x, f.y, f.xd, f.yd}});
            if (k < steps) traj.controls.push_back(ControlInput{{f.xdd, f.ydd}});
        }
    }
    return traj;
}

}  // namespace

FlatPath generate_sigmoid_trajectory(double delta_x, double delta_y, double duration, double dt, double steepness) {
    if (!(duration > 0.0)) {
        throw Error("generate_sigmoid_trajectory: duration must be positive");
    }
    if (!(delta_x > 0.0)) {
        throw Error("generate_sigmoid_trajectory: delta_x must be positive");
    }
    const std::size_t steps = step_count(duration, dt);
    FlatPath path;
    path.geometry = SigmoidGeometry{delta_x, delta_y, duration, steepness};
    path.times.reserve(steps + 1);
    path.samples.reserve(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        path.times.push_back(t);
        path.samples.push_back(sigmoid_flat(path.geometry, t));
    }
    return path;
}

DesiredState flat_to_state(const FlatSample<double>& sample, double length_L) {
    const double v = std::hypot(sample.xd, sample.yd);
    if (!(v >= kMinFlatSpeed)) {
        throw InvalidStateError("degenerate flatness: path speed below 1e-6 m/s");
    }
    if (!(sample.xd > 0.0)) {
        throw InvalidStateError("flat_to_state requires a forward-moving path (xd > 0)");
    }
    const auto r = bicycle_flatness(sample, length_L);
    DesiredState d;
    d.state = SystemState{SystemKind::kBicycle, {r.x, r.y, r.theta}};
    d.feedforward = ControlInput{{r.speed, r.steer}};
    return d;
}

ControlInput tracking_control(const SystemState& state, const DesiredState& desired, const TrackingGains& gains,
                              const ActuatorLimits& limits, double length_L) {
    for (double v : state.values) {
        if (!std::isfinite(v)) throw InvalidStateError("tracking_control: non-finite state");
    }
    if (state.kind == SystemKind::kBicycle) {
        if (state.values.size() != 3 || desired.state.values.size() != 3 || desired.feedforward.values.size() != 2) {
            throw InvalidStateError("tracking_control: bicycle dimensions mismatch");
        }
        if (!(length_L > 0.0)) throw InvalidStateError("tracking_control: vehicle length must be positive");
        const double steer_ff = desired.feedforward.values[1];
        BicycleReference<double> ref{desired.state.values[0], desired.state.values[1], desired.state.values[2],
                                     desired.feedforward.values[0], steer_ff, std::tan(steer_ff) / length_L};
        const auto u = bicycle_tracking<double>({state.values[0], state.values[1], state.values[2]}, ref, gains, limits,
                                                length_L);
        return ControlInput{{u[0], u[1]}};
    }
    if (state.kind == SystemKind::kPlanarSurrogate) {
        if (state.values.size() != 4 || desired.state.values.size() != 4 || desired.feedforward.values.size() != 2) {
            throw InvalidStateError("tracking_control: surrogate dimensions mismatch");
        }
        const auto& d = desired.state.values;
        FlatSample<double> ref{d[0], d[1], d[2], d[3], desired.feedforward.values[0], desired.feedforward.values[1]};
        const auto u = surrogate_tracking<double>({state.values[0], state.values[1], state.values[2], state.values[3]},
                                                  ref, gains, limits);
        return ControlInput{{u[0], u[1]}};
    }
    throw InvalidStateError("tracking_control: unsupported system kind");
}

std::vector<double> PrimitiveLibrary::nominal_start(std::size_t id) const {
    const auto& s = primitives.at(id).nominal.states.front().values;
    return s;
}

std::vector<double> PrimitiveLibrary::terminal_offset(std::size_t id) const {
    const auto& p = primitives.at(id);
    std::vector<double> offset(state_dimension(system.kind), 0.0);
    offset[0] = p.delta_x();
    offset[1] = p.delta_y();
    return offset;
}

PrimitiveLibrary build_highway_library(double dt, const HighwayLibraryParams& params) {
    PrimitiveLibrary lib;
    lib.system = SystemParams{SystemKind::kBicycle, params.wheelbase, params.limits};
    lib.dt = dt;
    const double dx = params.ego_speed * params.duration;
    const double offsets[3] = {params.lane_width, 0.0, -params.lane_width};
    for (std::size_t j = 0; j < 3; ++j) {
        PrimitiveSpec p;
        p.id = j;
        p.geometry = SigmoidGeometry{dx, offsets[j], params.duration, params.steepness};
        p.dt = dt;
        p.gains = params.gains;
        lib.primitives.push_back(p);
    }
    for (auto& p : lib.primitives) p.nominal = sample_nominal(lib, p);
    return lib;
}

PrimitiveLibrary build_surrogate_library(double dt, const SurrogateLibraryParams& params) {
    PrimitiveLibrary lib;
    lib.system = SystemParams{SystemKind::kPlanarSurrogate, 0.0, params.limits};
    lib.dt = dt;
    for (int j = 0; j < 7; ++j) {
        PrimitiveSpec p;
        p.id = static_cast<std::size_t>(j);
        p.geometry = SigmoidGeometry{params.forward_step, (j - 3) * params.lateral_unit, params.duration,
                                     params.steepness};
        p.dt = dt;
        p.gains = params.gains;
        lib.primitives.push_back(p);
    }
    for (auto& p : lib.primitives) p.nominal = sample_nominal(lib, p);
    return lib;
}

}  // namespace funnelpac
