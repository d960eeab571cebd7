#pragma once

// Disturbed robot models, disturbance realizations and fixed-step RK4 rollouts.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace funnelpac {

enum class SystemKind { kBicycle, kPlanarSurrogate, kGeneric };

std::string to_string(SystemKind kind);
SystemKind system_kind_from_string(const std::string& name);

/// State dimension of a system kind (bicycle [x, y, theta]; surrogate [x, y, vx, vy]).
std::size_t state_dimension(SystemKind kind);
std::size_t control_dimension(SystemKind kind);
std::size_t disturbance_dimension(SystemKind kind);

struct SystemState {
    SystemKind kind = SystemKind::kGeneric;
    std::vector<double> values;
};

struct ControlInput {
    std::vector<double> values;
};

/// Axis-aligned box of admissible disturbance values.
class DisturbanceSet {
public:
    DisturbanceSet() = default;
    DisturbanceSet(std::vector<double> lower, std::vector<double> upper);

    const std::vector<double>& lower() const { return lower_; }
    const std::vector<double>& upper() const { return upper_; }
    std::size_t dim() const { return lower_.size(); }
    /// Sup-norm radius of the box.
    double gamma() const { return gamma_; }
    bool contains(const std::vector<double>& w) const;

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
    double gamma_ = 0.0;
};

enum class DisturbanceKind { kZero, kPiecewiseConstant };

struct DisturbanceSignal {
    DisturbanceKind kind = DisturbanceKind::kZero;
    std::size_t dim = 0;
    double segment_duration = 0.1;
    std::vector<std::vector<double>> segment_values;

    /// Identically zero signal; stored as a single zero segment.
    static DisturbanceSignal zero(std::size_t dim);

    /// Value held over the segment containing t (the last segment is held past the horizon).
    const std::vector<double>& at(double t) const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<SystemState> states;
    std::vector<ControlInput> controls;
};

/// Kinematic bicycle with additive disturbances on every state derivative.
std::array<double, 3> bicycle_derivative(const SystemState& state, double speed_v, double steer_zeta,
                                         double length_L, const std::array<double, 3>& w);

/// Planar double integrator; disturbances enter as accelerations.
std::array<double, 4> surrogate_derivative(const SystemState& state, const std::array<double, 2>& accel,
                                           const std::array<double, 2>& w);

/// Piecewise-constant disturbance, each segment uniform on the box. Deterministic in seed.
DisturbanceSignal sample_disturbance(const DisturbanceSet& ws, double horizon, double segment_duration,
                                     std::uint64_t seed);

using VectorField =
    std::function<std::vector<double>(const std::vector<double>& x, const std::vector<double>& u,
                                       const std::vector<double>& w)>;
using Controller = std::function<std::vector<double>(double t, const std::vector<double>& x)>;

struct RolloutSystem {
    SystemKind kind = SystemKind::kGeneric;
    VectorField field;
};

/// Fixed-step RK4 of the closed loop x' = f(x, controller(t, x), w(t)).
///
/// The controller is re-evaluated at every RK4 stage (continuous feedback);
/// the disturbance is held at its step-midpoint value over each step. The
/// stored control for an interval is the controller output at its start.
Trajectory integrate_rollout(const RolloutSystem& system, const Controller& controller, const SystemState& x0,
                             const DisturbanceSignal& w, double horizon, double dt);

/// Number of fixed steps of size dt in horizon; throws unless horizon is a positive multiple of dt.
std::size_t step_count(double horizon, double dt);

template <std::size_t N, class Field>
std::array<double, N> rk4_step(const Field& f, const std::array<double, N>& x, double t, double h) {
    auto axpy = [](const std::array<double, N>& a, double s, const std::array<double, N>& b) {
        std::array<double, N> r;
        for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + s * b[i];
        return r;
    };
    const auto k1 = f(x, t);
    const auto k2 = f(axpy(x, 0.5 * h, k1), t + 0.5 * h);
    const auto k3 = f(axpy(x, 0.5 * h, k2), t + 0.5 * h);
    const auto k4 = f(axpy(x, h, k3), t + h);
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

}  // namespace funnelpac
