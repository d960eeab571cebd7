#pragma once

// Score-network policies and receding-horizon episodes.

#include <array>
#include <cstddef>
#include <vector>

#include "funnelpac/dynamics.hpp"
#include "funnelpac/environments.hpp"
#include "funnelpac/primitives.hpp"
#include "funnelpac/reachability.hpp"

namespace funnelpac {

/// Layer widths from input to output; tanh on hidden layers, linear output.
struct Architecture {
    std::vector<int> widths;

    std::size_t parameter_count() const;
    std::size_t input_dim() const { return static_cast<std::size_t>(widths.front()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(widths.back()); }
};

Architecture highway_architecture();    // 10-16-16-16-3
Architecture surrogate_architecture();  // 16-24-16-7

/// Flat parameters: per layer, the row-major (out x in) weights followed by the biases.
struct PolicyParams {
    Architecture architecture;
    std::vector<double> theta;

    void validate() const;
};

std::vector<double> forward(const PolicyParams& policy, const Observation& obs);

/// Masked argmax, lowest id on ties. Throws NoComposablePrimitiveError on an all-false mask.
std::size_t select_primitive(const std::vector<double>& scores, const std::vector<bool>& mask);

/// Everything an episode needs besides the environment and the policy.
struct PlanningContext {
    const PrimitiveLibrary* primitives = nullptr;
    /// Funnels whose boxes are charged in funnel mode (certified or nominal arm).
    const FunnelLibrary* funnels = nullptr;
    /// Certified library: inlets for the first-step mask and the composability matrix.
    const FunnelLibrary* certified = nullptr;
    /// Initial state-uncertainty box relative to the environment's ego start.
    Box initial_box;
    /// RK4 substeps per funnel grid interval in rollouts.
    int rollout_substeps = 10;
};

/// Centred at the undisturbed start state with half-widths fraction * (smallest inlet half-widths).
Box initial_uncertainty_box(const PrimitiveLibrary& primitives, const FunnelLibrary& certified, double fraction = 0.5);

enum class EpisodeMode { kFunnel, kRollout };

struct EpisodeTrace {
    EpisodeMode mode = EpisodeMode::kFunnel;
    std::vector<double> decision_times;
    std::vector<Observation> observations;
    std::vector<std::vector<double>> scores;
    std::vector<std::size_t> selected;
    /// World origin of each executed primitive (accumulated nominal offsets).
    std::vector<std::array<double, 2>> offsets;
    CostRecord cost;

    /// Funnels of the executed primitives placed in the world.
    std::vector<PlacedFunnel> placed(const FunnelLibrary& funnels) const;
};

/// Funnel mode: decisions at the nominal chain, cost C(pi, E) over the swept funnels.
EpisodeTrace run_funnel_episode(const Environment& env, const PolicyParams& policy, const PlanningContext& ctx);

/// Rollout mode: disturbed integration from x0 (relative to the ego start);
/// collisions are checked on the true state at every funnel grid time.
EpisodeTrace run_rollout_episode(const Environment& env, const PolicyParams& policy, const PlanningContext& ctx,
                                 const std::vector<double>& x0, const DisturbanceSignal& w);

/// Cost c(pi, E, w) of a disturbed rollout.
CostRecord rollout_cost(const Environment& env, const PolicyParams& policy, const PlanningContext& ctx,
                        const std::vector<double>& x0, const DisturbanceSignal& w);

/// Undisturbed start state of the ego (relative coordinates).
std::vector<double> nominal_start_state(SystemKind kind, const PrimitiveLibrary& primitives);

}  // namespace funnelpac
