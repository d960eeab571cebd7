#pragma once

// Declarative run configuration. Every constant of the pipeline has a named
// key; unspecified keys keep their defaults.

#include <cstdint>
#include <string>
#include <vector>

#include "funnelpac/environments.hpp"
#include "funnelpac/io.hpp"
#include "funnelpac/learning.hpp"
#include "funnelpac/primitives.hpp"
#include "funnelpac/reachability.hpp"

namespace funnelpac {

struct Config {
    EnvironmentKind environment = EnvironmentKind::kHighway;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out = "run";
    std::string arm = "funnel";

    // Library and reachability.
    double dt = 0.01;
    FunnelLibraryOptions funnel_library;
    HighwayLibraryParams highway_library;
    SurrogateLibraryParams surrogate_library;
    /// Empty: the system's default disturbance box.
    std::vector<double> disturbance_lower;
    std::vector<double> disturbance_upper;
    std::size_t verify_samples = 1000;
    double verify_segment = 0.1;

    // Environments and datasets.
    EnvironmentConfig env;
    std::size_t train_envs = 1000;
    double prior_fraction = 0.5;
    std::size_t test_envs = 500;

    // Prior training.
    TrainOptions train{300, 8, 50, 0.05, 0.0, 1};
    double init_std = 0.1;
    double init_sigma = 0.1;

    // Certification and evaluation.
    std::size_t m_policies = 20;
    double delta = 0.01;
    int disturbance_draws = 5;
    double disturbance_segment = 0.1;
    double initial_box_fraction = 0.5;
    int rollout_substeps = 10;

    SystemKind system() const { return system_for(environment); }
    std::size_t prior_env_count() const;
    std::size_t cert_env_count() const;
};

/// Default disturbance box of a system: bicycle [±0.5, ±1, ±0.25], surrogate [±0.1, ±0.1].
DisturbanceSet default_disturbance(SystemKind kind);
DisturbanceSet disturbance_set(const Config& c);

Json config_to_json(const Config& c);
/// Overlays the keys present in j on base.
Config config_from_json(const Json& j, Config base = {});
Config load_config(const std::string& path);

PrimitiveLibrary build_primitive_library(const Config& c);
Architecture default_architecture(EnvironmentKind kind);

}  // namespace funnelpac
