#include "funnelpac/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "funnelpac/errors.hpp"
#include "funnelpac/parallel.hpp"
#include "funnelpac/rng.hpp"

namespace funnelpac {

std::vector<double> GaussianPolicyDist::sigma() const {
    std::vector<double> s(log_sigma.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::exp(log_sigma[i]);
    return s;
}

void GaussianPolicyDist::validate() const {
    if (mu.size() != log_sigma.size()) throw ContractViolation("GaussianPolicyDist: mu/log_sigma size mismatch");
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (!std::isfinite(mu[i]) || !std::isfinite(log_sigma[i])) {
            throw InvalidStateError("GaussianPolicyDist: non-finite parameter at index " + std::to_string(i));
        }
    }
}

std::vector<double> GaussianPolicyDist::sample(std::uint64_t seed) const {
    Rng rng(seed);
    std::vector<double> theta(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) theta[i] = mu[i] + std::exp(log_sigma[i]) * standard_normal(rng);
    return theta;
}

GaussianPolicyDist initial_prior(std::size_t q, std::uint64_t seed, double init_std, double init_sigma) {
    if (!(init_sigma > 0.0)) throw ContractViolation("initial_prior: init_sigma must be positive");
    GaussianPolicyDist d;
    Rng rng(seed);
    d.mu.resize(q);
    for (auto& v : d.mu) v = init_std * standard_normal(rng);
    d.log_sigma.assign(q, std::log(init_sigma));
    return d;
}

double empirical_cost(const std::vector<double>& costs) {
    if (costs.empty()) throw ContractViolation("empirical_cost: empty input");
    double s = 0.0;
    for (double c : costs) {
        if (!(c >= 0.0 && c <= 1.0)) throw ContractViolation("empirical_cost: cost outside [0, 1]");
        s += c;
    }
    return s / static_cast<double>(costs.size());
}

EsGradient es_gradient(const GaussianPolicyDist& psi, const ParamCost& cost, std::size_t n_pairs, std::uint64_t seed,
                       int workers) {
    if (n_pairs < 1) throw ContractViolation("es_gradient: n_pairs must be >= 1");
    psi.validate();
    const std::size_t q = psi.dim();
    const auto sigma = psi.sigma();
    std::vector<std::vector<double>> eps(n_pairs, std::vector<double>(q));
    std::vector<double> c_plus(n_pairs), c_minus(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        Rng rng(derive_seed(seed, {i}));
        for (auto& e : eps[i]) e = standard_normal(rng);
    }
    parallel_for(n_pairs, workers, [&](std::size_t i) {
        std::vector<double> plus(q), minus(q);
        for (std::size_t k = 0; k < q; ++k) {
            plus[k] = psi.mu[k] + sigma[k] * eps[i][k];
            minus[k] = psi.mu[k] - sigma[k] * eps[i][k];
        }
        c_plus[i] = cost(plus);
        c_minus[i] = cost(minus);
    });

    EsGradient g;
    g.d_mu.assign(q, 0.0);
    g.d_log_sigma.assign(q, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n_pairs; ++i) total += 0.5 * (c_plus[i] + c_minus[i]);
    g.mean_cost = total / static_cast<double>(n_pairs);
    const double inv = 1.0 / static_cast<double>(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        const double avg = 0.5 * (c_plus[i] + c_minus[i]);
        const double baseline = n_pairs > 1 ? (total - avg) / static_cast<double>(n_pairs - 1) : 0.0;
        const double diff = 0.5 * (c_plus[i] - c_minus[i]);
        for (std::size_t k = 0; k < q; ++k) {
            const double e = eps[i][k];
            g.d_mu[k] += inv * diff * e / sigma[k];
            g.d_log_sigma[k] += inv * (avg - baseline) * (e * e - 1.0);
        }
    }
    return g;
}

void Adam::update(std::vector<double>& params, const std::vector<double>& grad, double lr) {
    if (grad.size() != params.size()) throw ContractViolation("Adam: gradient size mismatch");
    if (m.empty()) {
        m.assign(params.size(), 0.0);
        v.assign(params.size(), 0.0);
    }
    ++step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + epsilon);
    }
}

TrainResult train_es(GaussianPolicyDist init, const std::function<double(const std::vector<double>&, int)>& batch_cost,
                     const TrainOptions& options, std::uint64_t seed) {
    init.validate();
    TrainResult out;
    out.prior = std::move(init);
    const std::size_t q = out.prior.dim();
    Adam adam;
    std::vector<double> params(2 * q), grad(2 * q);
    for (int it = 0; it < options.iterations; ++it) {
        const ParamCost cost = [&](const std::vector<double>& theta) { return batch_cost(theta, it); };
        const EsGradient g = es_gradient(out.prior, cost, options.n_pairs,
                                         derive_seed(seed, {static_cast<std::uint64_t>(it), 0}), options.workers);
        if (!std::isfinite(g.mean_cost)) {
            throw Error("train_prior: cost diverged (NaN) at iteration " + std::to_string(it));
        }
        out.cost_log.push_back(g.mean_cost);
        std::copy(out.prior.mu.begin(), out.prior.mu.end(), params.begin());
        std::copy(out.prior.log_sigma.begin(), out.prior.log_sigma.end(), params.begin() + static_cast<long>(q));
        std::copy(g.d_mu.begin(), g.d_mu.end(), grad.begin());
        std::copy(g.d_log_sigma.begin(), g.d_log_sigma.end(), grad.begin() + static_cast<long>(q));
        const double lr = options.decay_iterations > 0.0
                              ? options.learning_rate / (1.0 + static_cast<double>(it) / options.decay_iterations)
                              : options.learning_rate;
        adam.update(params, grad, lr);
        std::copy(params.begin(), params.begin() + static_cast<long>(q), out.prior.mu.begin());
        std::copy(params.begin() + static_cast<long>(q), params.end(), out.prior.log_sigma.begin());
        for (std::size_t k = 0; k < 2 * q; ++k) {
            if (!std::isfinite(params[k])) {
                throw Error("train_prior: parameters diverged at iteration " + std::to_string(it));
            }
        }
    }
    return out;
}

double mean_funnel_cost(const std::vector<Environment>& envs, const std::vector<std::size_t>& indices,
                        const PolicyParams& policy, const PlanningContext& ctx) {
    if (indices.empty()) throw ContractViolation("mean_funnel_cost: empty batch");
    double s = 0.0;
    for (std::size_t i : indices) s += run_funnel_episode(envs.at(i), policy, ctx).cost.cost;
    return s / static_cast<double>(indices.size());
}

TrainResult train_prior(const std::vector<Environment>& envs_hat, const Architecture& arch, const PlanningContext& ctx,
                        const TrainOptions& options, std::uint64_t seed, const GaussianPolicyDist* init) {
    if (envs_hat.empty()) throw ContractViolation("train_prior: empty environment set");
    GaussianPolicyDist start = init != nullptr ? *init : initial_prior(arch.parameter_count(), derive_seed(seed, {0}));
    if (start.dim() != arch.parameter_count()) throw ContractViolation("train_prior: prior/architecture mismatch");
    const std::size_t batch = options.minibatch == 0 ? envs_hat.size() : std::min(options.minibatch, envs_hat.size());
    std::vector<std::size_t> all(envs_hat.size());
    std::iota(all.begin(), all.end(), 0);
    std::vector<std::vector<std::size_t>> batches(static_cast<std::size_t>(std::max(0, options.iterations)));
    for (std::size_t it = 0; it < batches.size(); ++it) {
        if (batch == envs_hat.size()) {
            batches[it] = all;
            continue;
        }
        // Partial Fisher-Yates with a per-iteration stream.
        std::vector<std::size_t> idx = all;
        Rng rng(derive_seed(seed, {1, it}));
        for (std::size_t k = 0; k < batch; ++k) {
            const std::size_t r = k + static_cast<std::size_t>(rng() % (idx.size() - k));
            std::swap(idx[k], idx[r]);
        }
        idx.resize(batch);
        batches[it] = std::move(idx);
    }
    auto batch_cost = [&](const std::vector<double>& theta, int it) {
        PolicyParams p{arch, theta};
        return mean_funnel_cost(envs_hat, batches[static_cast<std::size_t>(it)], p, ctx);
    };
    return train_es(std::move(start), batch_cost, options, derive_seed(seed, {2}));
}

std::vector<double> CostMatrix::row_means() const {
    std::vector<double> r;
    for (const auto& row : entries) r.push_back(empirical_cost(row));
    return r;
}

CostMatrix build_cost_matrix(const GaussianPolicyDist& prior, std::size_t m_policies, const std::vector<Environment>& envs,
                             const Architecture& arch, const PlanningContext& ctx, std::uint64_t seed, int workers) {
    if (m_policies < 2) throw ContractViolation("build_cost_matrix: need at least two policies");
    if (envs.empty()) throw ContractViolation("build_cost_matrix: empty environment set");
    prior.validate();
    if (prior.dim() != arch.parameter_count()) throw ContractViolation("build_cost_matrix: prior/architecture mismatch");
    CostMatrix cm;
    for (std::size_t i = 0; i < m_policies; ++i) cm.thetas.push_back(prior.sample(derive_seed(seed, {i})));
    for (const auto& e : envs) cm.env_seeds.push_back(std::visit([](const auto& x) { return x.seed; }, e));
    cm.entries.assign(m_policies, std::vector<double>(envs.size(), 0.0));
    const std::size_t n = envs.size();
    parallel_for(m_policies * n, workers, [&](std::size_t task) {
        const std::size_t i = task / n;
        const std::size_t l = task % n;
        cm.entries[i][l] = run_funnel_episode(envs[l], PolicyParams{arch, cm.thetas[i]}, ctx).cost.cost;
    });
    return cm;
}

double kl_discrete(const std::vector<double>& p, const std::vector<double>& p0) {
    if (p.size() != p0.size() || p.empty()) throw ContractViolation("kl_discrete: size mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || p0[i] < 0.0) throw ContractViolation("kl_discrete: negative probability");
        if (p[i] == 0.0) continue;
        if (p0[i] == 0.0) throw ContractViolation("kl_discrete: infinite KL (p > 0 where p0 = 0)");
        kl += p[i] * std::log(p[i] / p0[i]);
    }
    return std::max(kl, 0.0);
}

double regularizer(double kl, double n, double delta) {
    if (!(kl >= 0.0) || !(n >= 1.0) || !(delta > 0.0 && delta < 1.0)) {
        throw ContractViolation("regularizer: requires kl >= 0, N >= 1, delta in (0, 1)");
    }
    return (kl + std::log(2.0 * std::sqrt(n) / delta)) / (2.0 * n);
}

double pac_bound_raw(double c_s, double r) {
    const double a = std::sqrt(c_s + r) + std::sqrt(r);
    return a * a;
}

double pac_bound(double c_s, double r) {
    if (!(c_s >= 0.0 && c_s <= 1.0) || !(r >= 0.0)) throw ContractViolation("pac_bound: c_s in [0,1], r >= 0");
    return std::min(1.0, pac_bound_raw(c_s, r));
}

std::vector<double> gibbs_posterior(const std::vector<double>& costs, const std::vector<double>& p0, double lambda) {
    if (costs.size() != p0.size() || costs.empty()) throw ContractViolation("gibbs_posterior: size mismatch");
    const double cmin = *std::min_element(costs.begin(), costs.end());
    std::vector<double> p(costs.size());
    double z = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = p0[i] * std::exp(-lambda * (costs[i] - cmin));
        z += p[i];
    }
    for (auto& v : p) v /= z;
    return p;
}

PosteriorResult optimize_posterior(const std::vector<double>& policy_costs, std::size_t n, double delta) {
    const std::size_t m = policy_costs.size();
    if (m < 1) throw ContractViolation("optimize_posterior: no policies");
    const std::vector<double> p0(m, 1.0 / static_cast<double>(m));
    struct Eval {
        double lambda, bound;
        std::vector<double> p;
    };
    auto evaluate = [&](double lambda) {
        Eval e{lambda, 0.0, gibbs_posterior(policy_costs, p0, lambda)};
        double cp = 0.0;
        for (std::size_t i = 0; i < m; ++i) cp += e.p[i] * policy_costs[i];
        e.bound = pac_bound_raw(std::clamp(cp, 0.0, 1.0), regularizer(kl_discrete(e.p, p0), static_cast<double>(n), delta));
        return e;
    };
    Eval best = evaluate(0.0);
    auto consider = [&](const Eval& e) {
        if (e.bound < best.bound) best = e;
    };
    // Coarse scan of log(lambda) to bracket the minimum, then golden section.
    const double lo = std::log(1e-3), hi = std::log(1e6);
    const int grid = 120;
    int arg = 0;
    double arg_bound = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i) {
        const Eval e = evaluate(std::exp(lo + (hi - lo) * i / grid));
        consider(e);
        if (e.bound < arg_bound) {
            arg_bound = e.bound;
            arg = i;
        }
    }
    double a = lo + (hi - lo) * std::max(0, arg - 1) / grid;
    double b = lo + (hi - lo) * std::min(grid, arg + 1) / grid;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    Eval f1 = evaluate(std::exp(x1)), f2 = evaluate(std::exp(x2));
    for (int it = 0; it < 80 && b - a > 1e-10; ++it) {
        if (f1.bound <= f2.bound) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = evaluate(std::exp(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = evaluate(std::exp(x2));
        }
        consider(f1);
        consider(f2);
    }

    PosteriorResult out;
    out.posterior.p = best.p;
    out.posterior.p0 = p0;
    auto& c = out.certificate;
    c.c_s = 0.0;
    for (std::size_t i = 0; i < m; ++i) c.c_s += best.p[i] * policy_costs[i];
    c.c_s = std::clamp(c.c_s, 0.0, 1.0);
    c.kl = kl_discrete(best.p, p0);
    c.r = regularizer(c.kl, static_cast<double>(n), delta);
    c.c_pac = pac_bound(c.c_s, c.r);
    c.delta = delta;
    c.n = n;
    c.m = m;
    c.lambda = best.lambda;
    return out;
}

PosteriorResult optimize_posterior(const CostMatrix& costs, double delta) {
    return optimize_posterior(costs.row_means(), costs.n(), delta);
}

}  // namespace funnelpac
