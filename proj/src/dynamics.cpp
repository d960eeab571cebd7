#include "funnelpac/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "funnelpac/errors.hpp"
#include "funnelpac/rng.hpp"

namespace funnelpac {
namespace {

constexpr double kHalfPi = 1.57079632679489661923;

void require_finite(const std::vector<double>& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw InvalidStateError(std::string(what) + " contains a non-finite value");
        }
    }
}

template <std::size_t N>
void require_finite(const std::array<double, N>& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw InvalidStateError(std::string(what) + " contains a non-finite value");
        }
    }
}

}  // namespace

std::string to_string(SystemKind kind) {
    switch (kind) {
        case SystemKind::kBicycle:
            return "bicycle";
        case SystemKind::kPlanarSurrogate:
            return "planar_surrogate";
        case SystemKind::kGeneric:
            return "generic";
    }
    return "generic";
}

SystemKind system_kind_from_string(const std::string& name) {
    if (name == "bicycle") return SystemKind::kBicycle;
    if (name == "planar_surrogate") return SystemKind::kPlanarSurrogate;
    if (name == "generic") return SystemKind::kGeneric;
    throw Error("unknown system kind '" + name + "'");
}

std::size_t state_dimension(SystemKind kind) {
    switch (kind) {
        case SystemKind::kBicycle:
            return 3;
        case SystemKind::kPlanarSurrogate:
            return 4;
        case SystemKind::kGeneric:
            break;
    }
    throw Error("generic systems have no fixed state dimension");
}

std::size_t control_dimension(SystemKind kind) {
    switch (kind) {
        case SystemKind::kBicycle:
            return 2;  // [v, zeta]
        case SystemKind::kPlanarSurrogate:
            return 2;
        case SystemKind::kGeneric:
            break;
    }
    throw Error("generic systems have no fixed control dimension");
}

std::size_t disturbance_dimension(SystemKind kind) {
    switch (kind) {
        case SystemKind::kBicycle:
            return 3;
        case SystemKind::kPlanarSurrogate:
            return 2;
        case SystemKind::kGeneric:
            break;
    }
    throw Error("generic systems have no fixed disturbance dimension");
}

DisturbanceSet::DisturbanceSet(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size() || lower_.empty()) {
        throw Error("DisturbanceSet: lower/upper must be non-empty and of equal length");
    }
    require_finite(lower_, "DisturbanceSet lower bound");
    require_finite(upper_, "DisturbanceSet upper bound");
    for (std::size_t i = 0; i < lower_.size(); ++i) {
        if (lower_[i] > upper_[i]) {
            throw Error("DisturbanceSet: lower bound exceeds upper bound in channel " + std::to_string(i));
        }
        gamma_ = std::max({gamma_, std::fabs(lower_[i]), std::fabs(upper_[i])});
    }
}

bool DisturbanceSet::contains(const std::vector<double>& w) const {
    if (w.size() != dim()) return false;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] < lower_[i] || w[i] > upper_[i]) return false;
    }
    return true;
}

DisturbanceSignal DisturbanceSignal::zero(std::size_t dim) {
    DisturbanceSignal s;
    s.kind = DisturbanceKind::kZero;
    s.dim = dim;
    s.segment_values.assign(1, std::vector<double>(dim, 0.0));
    return s;
}

const std::vector<double>& DisturbanceSignal::at(double t) const {
    if (kind == DisturbanceKind::kZero || segment_values.size() == 1) {
        return segment_values.front();
    }
    const double idx = std::floor(t / segment_duration);
    if (!(idx > 0.0)) {
        return segment_values.front();
    }
    const auto i = std::min(static_cast<std::size_t>(idx), segment_values.size() - 1);
    return segment_values[i];
}

std::array<double, 3> bicycle_derivative(const SystemState& state, double speed_v, double steer_zeta,
                                         double length_L, const std::array<double, 3>& w) {
    if (state.values.size() != 3) {
        throw InvalidStateError("bicycle state must have dimension 3");
    }
    require_finite(state.values, "bicycle state");
    require_finite(w, "bicycle disturbance");
    if (!std::isfinite(speed_v) || !std::isfinite(steer_zeta) || !std::isfinite(length_L)) {
        throw InvalidStateError("bicycle input contains a non-finite value");
    }
    if (!(std::fabs(steer_zeta) < kHalfPi)) {
        throw InvalidStateError("steering angle must satisfy |zeta| < pi/2");
    }
    if (!(length_L > 0.0)) {
        throw InvalidStateError("vehicle length must be positive");
    }
    const double theta = state.values[2];
    return {speed_v * std::cos(theta) + w[0], speed_v * std::sin(theta) + w[1],
            speed_v * std::tan(steer_zeta) / length_L + w[2]};
}

std::array<double, 4> surrogate_derivative(const SystemState& state, const std::array<double, 2>& accel,
                                           const std::array<double, 2>& w) {
    if (state.values.size() != 4) {
        throw InvalidStateError("surrogate state must have dimension 4");
    }
    require_finite(state.values, "surrogate state");
    require_finite(accel, "surrogate acceleration");
    require_finite(w, "surrogate disturbance");
    return {state.values[2], state.values[3], accel[0] + w[0], accel[1] + w[1]};
}

DisturbanceSignal sample_disturbance(const DisturbanceSet& ws, double horizon, double segment_duration,
                                     std::uint64_t seed) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw Error("sample_disturbance: horizon must be positive");
    }
    if (!(segment_duration > 0.0)) {
        throw Error("sample_disturbance: segment_duration must be positive");
    }
    bool degenerate_zero = true;
    for (std::size_t i = 0; i < ws.dim(); ++i) {
        degenerate_zero = degenerate_zero && ws.lower()[i] == 0.0 && ws.upper()[i] == 0.0;
    }
    if (degenerate_zero) {
        auto z = DisturbanceSignal::zero(ws.dim());
        z.segment_duration = segment_duration;
        return z;
    }

    DisturbanceSignal s;
    s.kind = DisturbanceKind::kPiecewiseConstant;
    s.dim = ws.dim();
    s.segment_duration = segment_duration;
    const auto segments = static_cast<std::size_t>(std::ceil(horizon / segment_duration - 1e-9));
    s.segment_values.reserve(std::max<std::size_t>(segments, 1));
    Rng rng(seed);
    for (std::size_t k = 0; k < std::max<std::size_t>(segments, 1); ++k) {
        std::vector<double> v(ws.dim());
        for (std::size_t i = 0; i < ws.dim(); ++i) {
            v[i] = ws.lower()[i] == ws.upper()[i] ? ws.lower()[i] : uniform(rng, ws.lower()[i], ws.upper()[i]);
        }
        s.segment_values.push_back(std::move(v));
    }
    return s;
}

std::size_t step_count(double horizon, double dt) {
    if (!(dt > 0.0) || !(horizon > 0.0)) {
        throw Error("integration requires dt > 0 and a positive horizon");
    }
    const double ratio = horizon / dt;
    const double n = std::round(ratio);
    if (n < 1.0 || std::fabs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
        std::ostringstream os;
        os << "horizon " << horizon << " is not a positive multiple of dt " << dt;
        throw Error(os.str());
    }
    return static_cast<std::size_t>(n);
}

Trajectory integrate_rollout(const RolloutSystem& system, const Controller& controller, const SystemState& x0,
                             const DisturbanceSignal& w, double horizon, double dt) {
    const std::size_t steps = step_count(horizon, dt);
    require_finite(x0.values, "initial state");
    const std::size_t n = x0.values.size();

    auto checked_control = [&](double t, const std::vector<double>& x) {
        auto u = controller(t, x);
        for (double v : u) {
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "controller produced a non-finite control at t=" << t;
                throw InvalidStateError(os.str());
            }
        }
        return u;
    };
    auto axpy = [n](const std::vector<double>& a, double s, const std::vector<double>& b) {
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = a[i] + s * b[i];
        return r;
    };

    Trajectory traj;
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    traj.controls.reserve(steps);
    traj.times.push_back(0.0);
    traj.states.push_back(x0);

    std::vector<double> x = x0.values;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const std::vector<double>& wk = w.at(t + 0.5 * dt);
        const auto u0 = checked_control(t, x);
        const auto k1 = system.field(x, u0, wk);
        const auto x2 = axpy(x, 0.5 * dt, k1);
        const auto k2 = system.field(x2, checked_control(t + 0.5 * dt, x2), wk);
        const auto x3 = axpy(x, 0.5 * dt, k2);
        const auto k3 = system.field(x3, checked_control(t + 0.5 * dt, x3), wk);
        const auto x4 = axpy(x, dt, k3);
        const auto k4 = system.field(x4, checked_control(t + dt, x4), wk);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        traj.controls.push_back(ControlInput{u0});
        traj.times.push_back(static_cast<double>(k + 1) * dt);
        traj.states.push_back(SystemState{x0.kind, x});
    }
    return traj;
}

}  // namespace funnelpac
