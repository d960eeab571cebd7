#pragma once

// Prior training with evolution strategies and PAC-Bayes certification of a
// posterior over a finite set of policies sampled from the prior.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "funnelpac/environments.hpp"
#include "funnelpac/policy.hpp"

namespace funnelpac {

struct GaussianPolicyDist {
    std::vector<double> mu;
    std::vector<double> log_sigma;

    std::size_t dim() const { return mu.size(); }
    std::vector<double> sigma() const;
    void validate() const;
    /// theta = mu + sigma * eps with eps ~ N(0, I).
    std::vector<double> sample(std::uint64_t seed) const;
};

/// mu ~ N(0, init_std^2) entries, log_sigma = log(init_sigma).
GaussianPolicyDist initial_prior(std::size_t q, std::uint64_t seed, double init_std = 0.1, double init_sigma = 0.1);

double empirical_cost(const std::vector<double>& costs);

/// Cost of one parameter vector (e.g. the mean funnel cost over an environment batch).
using ParamCost = std::function<double(const std::vector<double>& theta)>;

struct EsGradient {
    std::vector<double> d_mu;
    std::vector<double> d_log_sigma;
    /// Mean of all 2 * n_pairs evaluated costs.
    double mean_cost = 0.0;
};

/// Antithetic score-function estimate of grad_psi E_{theta ~ N(mu, sigma^2)}[C(theta)]
/// in (mu, log_sigma) coordinates. The log_sigma part uses a leave-one-out baseline.
EsGradient es_gradient(const GaussianPolicyDist& psi, const ParamCost& cost, std::size_t n_pairs, std::uint64_t seed,
                       int workers = 1);

struct Adam {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;

    /// In-place descent step on params.
    void update(std::vector<double>& params, const std::vector<double>& grad, double lr);
};

struct TrainOptions {
    int iterations = 300;
    std::size_t n_pairs = 8;
    /// Environments per iteration (0: the full set).
    std::size_t minibatch = 0;
    double learning_rate = 0.05;
    /// lr_k = learning_rate / (1 + k / decay_iterations); 0 disables decay.
    double decay_iterations = 0.0;
    int workers = 1;
};

struct TrainResult {
    GaussianPolicyDist prior;
    std::vector<double> cost_log;
};

/// Generic ES + Adam loop on any parameter cost; batch_cost(theta, iteration) may subsample.
TrainResult train_es(GaussianPolicyDist init, const std::function<double(const std::vector<double>&, int)>& batch_cost,
                     const TrainOptions& options, std::uint64_t seed);

/// Funnel-mode cost of theta on each environment.
double mean_funnel_cost(const std::vector<Environment>& envs, const std::vector<std::size_t>& indices,
                        const PolicyParams& policy, const PlanningContext& ctx);

TrainResult train_prior(const std::vector<Environment>& envs_hat, const Architecture& arch, const PlanningContext& ctx,
                        const TrainOptions& options, std::uint64_t seed, const GaussianPolicyDist* init = nullptr);

struct CostMatrix {
    /// entries[i][l] = C(pi_i, E_l).
    std::vector<std::vector<double>> entries;
    std::vector<std::vector<double>> thetas;
    std::vector<std::uint64_t> env_seeds;

    std::size_t m() const { return entries.size(); }
    std::size_t n() const { return entries.empty() ? 0 : entries.front().size(); }
    std::vector<double> row_means() const;
};

CostMatrix build_cost_matrix(const GaussianPolicyDist& prior, std::size_t m_policies, const std::vector<Environment>& envs,
                             const Architecture& arch, const PlanningContext& ctx, std::uint64_t seed, int workers = 1);

double kl_discrete(const std::vector<double>& p, const std::vector<double>& p0);
double regularizer(double kl, double n, double delta);
/// (sqrt(c_s + r) + sqrt(r))^2 clamped to at most 1.
double pac_bound(double c_s, double r);
/// Unclamped (sqrt(c_s + r) + sqrt(r))^2.
double pac_bound_raw(double c_s, double r);

struct DiscretePosterior {
    std::vector<double> p;
    std::vector<double> p0;
};

struct PacCertificate {
    double c_s = 0.0;
    double kl = 0.0;
    double r = 0.0;
    double c_pac = 0.0;
    double delta = 0.0;
    std::size_t n = 0;
    std::size_t m = 0;
    double lambda = 0.0;
    std::string posterior_ref;
    std::string dataset_hash;
};

/// Gibbs distribution p_i ∝ p0_i exp(-lambda C_i).
std::vector<double> gibbs_posterior(const std::vector<double>& costs, const std::vector<double>& p0, double lambda);

struct PosteriorResult {
    DiscretePosterior posterior;
    PacCertificate certificate;
};

PosteriorResult optimize_posterior(const std::vector<double>& policy_costs, std::size_t n, double delta);
PosteriorResult optimize_posterior(const CostMatrix& costs, double delta);

}  // namespace funnelpac
