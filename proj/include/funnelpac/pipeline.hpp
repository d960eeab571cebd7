#pragma once

// Pipeline stages over a run directory. Every stage reads its inputs from
// persisted artifacts, checks their recorded hashes and writes its outputs
// plus a run manifest.

#include <cstdint>
#include <string>
#include <vector>

#include "funnelpac/config.hpp"
#include "funnelpac/environments.hpp"
#include "funnelpac/learning.hpp"
#include "funnelpac/policy.hpp"

namespace funnelpac {

struct CostEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t n = 0;
};

/// Mean and sqrt(sample variance / n).
CostEstimate estimate(const std::vector<double>& samples);

struct DeploymentOptions {
    int disturbance_draws = 5;
    double segment_duration = 0.1;
    int workers = 1;
};

struct DeploymentResult {
    CostEstimate funnel;       // C(pi, E) of the deployed policies
    CostEstimate undisturbed;  // rollouts with w = 0 from the nominal start
    CostEstimate disturbed;    // rollouts with sampled w and start states
};

/// Deploys one policy per environment, drawn from the posterior, and estimates
/// funnel, undisturbed and disturbed costs.
DeploymentResult evaluate_deployment(const std::vector<Environment>& envs, const std::vector<std::vector<double>>& thetas,
                                     const std::vector<double>& posterior, const Architecture& arch,
                                     const PlanningContext& ctx, const DisturbanceSet& ws,
                                     const DeploymentOptions& options, std::uint64_t seed);

struct EvaluationReport {
    std::string arm;
    double c_pac = 0.0;
    double c_s = 0.0;
    DeploymentResult result;
};

Json to_json(const EvaluationReport& r);

/// Environment seeds of a dataset role ("prior", "cert", "test").
std::uint64_t dataset_seed(std::uint64_t root, const std::string& role);
std::vector<Environment> sample_dataset(EnvironmentKind kind, std::size_t count, std::uint64_t seed,
                                        const EnvironmentConfig& config);

/// Library artifacts loaded back from a run directory.
struct LoadedLibrary {
    Config library_config;
    PrimitiveLibrary primitives;
    FunnelLibrary certified;
    FunnelLibrary nominal;
    std::string hash;
};

LoadedLibrary load_library(const std::string& run_dir);
std::vector<Environment> load_dataset(const std::string& path, std::string* hash = nullptr);
PlanningContext planning_context(const LoadedLibrary& lib, const std::string& arm, double initial_box_fraction,
                                 int rollout_substeps);

void cmd_build_library(const Config& c);
FunnelViolationReport cmd_verify_funnels(const Config& c, std::size_t samples);
void cmd_sample_envs(const Config& c, const std::string& role, std::size_t count, std::uint64_t seed);
/// Prior, certification and test sets with their configured sizes.
void cmd_sample_all(const Config& c);
void cmd_train_prior(const Config& c);
void cmd_certify(const Config& c);
EvaluationReport cmd_evaluate(const Config& c);
void cmd_plot_data(const Config& c);

}  // namespace funnelpac
