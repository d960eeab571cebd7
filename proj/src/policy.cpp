#include "funnelpac/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "funnelpac/errors.hpp"

namespace funnelpac {

std::size_t Architecture::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        n += static_cast<std::size_t>(widths[l + 1]) * (static_cast<std::size_t>(widths[l]) + 1);
    }
    return n;
}

Architecture highway_architecture() { return Architecture{{10, 16, 16, 16, 3}}; }
Architecture surrogate_architecture() { return Architecture{{16, 24, 16, 7}}; }

void PolicyParams::validate() const {
    if (architecture.widths.size() < 2) throw ContractViolation("policy: architecture needs at least two layers");
    for (int w : architecture.widths) {
        if (w < 1) throw ContractViolation("policy: layer widths must be positive");
    }
    if (theta.size() != architecture.parameter_count()) {
        throw ContractViolation("policy: theta has " + std::to_string(theta.size()) + " entries, architecture needs " +
                                std::to_string(architecture.parameter_count()));
    }
}

std::vector<double> forward(const PolicyParams& policy, const Observation& obs) {
    const auto& w = policy.architecture.widths;
    if (policy.theta.size() != policy.architecture.parameter_count()) policy.validate();
    if (obs.values.size() != policy.architecture.input_dim()) {
        throw ContractViolation("forward: observation has dimension " + std::to_string(obs.values.size()) +
                                ", expected " + std::to_string(policy.architecture.input_dim()));
    }
    std::vector<double> a = obs.values;
    std::vector<double> next;
    std::size_t p = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        const auto n_in = static_cast<std::size_t>(w[l]);
        const auto n_out = static_cast<std::size_t>(w[l + 1]);
        const double* W = policy.theta.data() + p;
        const double* b = W + n_out * n_in;
        next.assign(n_out, 0.0);
        for (std::size_t o = 0; o < n_out; ++o) {
            double s = b[o];
            for (std::size_t i = 0; i < n_in; ++i) s += W[o * n_in + i] * a[i];
            next[o] = l + 2 < w.size() ? std::tanh(s) : s;
        }
        p += n_out * (n_in + 1);
        a.swap(next);
    }
    return a;
}

std::size_t select_primitive(const std::vector<double>& scores, const std::vector<bool>& mask) {
    if (scores.size() != mask.size()) throw ContractViolation("select_primitive: scores and mask differ in size");
    std::size_t best = scores.size();
    for (std::size_t j = 0; j < scores.size(); ++j) {
        if (!mask[j]) continue;
        if (best == scores.size() || scores[j] > scores[best]) best = j;
    }
    if (best == scores.size()) throw NoComposablePrimitiveError("select_primitive: no composable primitive");
    return best;
}

std::vector<double> nominal_start_state(SystemKind kind, const PrimitiveLibrary& primitives) {
    // The straight primitive (smallest lateral displacement) defines the undisturbed start.
    std::size_t straight = 0;
    for (std::size_t j = 1; j < primitives.size(); ++j) {
        if (std::fabs(primitives.primitives[j].delta_y()) < std::fabs(primitives.primitives[straight].delta_y())) {
            straight = j;
        }
    }
    std::vector<double> s = primitives.nominal_start(straight);
    if (s.size() != state_dimension(kind)) throw ContractViolation("nominal_start_state: library/system mismatch");
    s[0] = 0.0;
    s[1] = 0.0;
    return s;
}

Box initial_uncertainty_box(const PrimitiveLibrary& primitives, const FunnelLibrary& certified, double fraction) {
    if (!(fraction >= 0.0)) throw ContractViolation("initial_uncertainty_box: fraction must be non-negative");
    if (certified.size() == 0) throw ContractViolation("initial_uncertainty_box: empty library");
    const auto center = nominal_start_state(certified.kind, primitives);
    std::vector<double> half(center.size(), std::numeric_limits<double>::infinity());
    for (const auto& f : certified.funnels) {
        const auto w = f.inlet().widths();
        for (std::size_t i = 0; i < half.size(); ++i) half[i] = std::min(half[i], 0.5 * w[i] * fraction);
    }
    return Box::centered(center, half);
}

std::vector<PlacedFunnel> EpisodeTrace::placed(const FunnelLibrary& funnels) const {
    std::vector<PlacedFunnel> out;
    for (std::size_t s = 0; s < selected.size(); ++s) {
        out.push_back(PlacedFunnel{&funnels.funnels.at(selected[s]), offsets[s], decision_times[s]});
    }
    return out;
}

namespace {

void check_context(const Environment& env, const PolicyParams& policy, const PlanningContext& ctx) {
    if (ctx.primitives == nullptr || ctx.funnels == nullptr || ctx.certified == nullptr) {
        throw ContractViolation("episode: planning context is incomplete");
    }
    if (ctx.funnels->size() != ctx.primitives->size() || ctx.certified->size() != ctx.primitives->size()) {
        throw ContractViolation("episode: library sizes differ");
    }
    if (ctx.certified->kind != system_for(kind_of(env)) || ctx.primitives->system.kind != ctx.certified->kind) {
        throw ContractViolation("episode: environment and library systems differ");
    }
    if (policy.architecture.output_dim() != ctx.primitives->size()) {
        throw ContractViolation("episode: policy output dimension differs from the library size");
    }
    if (ctx.initial_box.dim() != state_dimension(ctx.certified->kind)) {
        throw ContractViolation("episode: initial box dimension mismatch");
    }
}

std::vector<bool> first_mask(const PlanningContext& ctx) {
    std::vector<bool> mask(ctx.certified->size());
    for (std::size_t j = 0; j < mask.size(); ++j) mask[j] = ctx.initial_box.subset_of(ctx.certified->funnels[j].inlet());
    return mask;
}

std::vector<bool> mask_after(const PlanningContext& ctx, std::size_t prev) {
    return ctx.certified->composability.at(prev);
}

}  // namespace

EpisodeTrace run_funnel_episode(const Environment& env, const PolicyParams& policy, const PlanningContext& ctx) {
    check_context(env, policy, ctx);
    const int K = horizon_of(env);
    EpisodeTrace trace;
    trace.mode = EpisodeMode::kFunnel;
    std::array<double, 2> origin = ego_start(env);
    std::vector<double> decision = nominal_start_state(ctx.certified->kind, *ctx.primitives);
    double t = 0.0;
    for (int k = 0; k < K; ++k) {
        decision[0] = origin[0];
        decision[1] = origin[1];
        Observation obs = observe(env, decision, t);
        auto scores = forward(policy, obs);
        const auto mask = k == 0 ? first_mask(ctx) : mask_after(ctx, trace.selected.back());
        std::size_t j = 0;
        try {
            j = select_primitive(scores, mask);
        } catch (const NoComposablePrimitiveError&) {
            trace.cost = CostRecord::make(k, K, FailureKind::kNoComposable);
            return trace;
        }
        trace.decision_times.push_back(t);
        trace.observations.push_back(std::move(obs));
        trace.scores.push_back(std::move(scores));
        trace.selected.push_back(j);
        trace.offsets.push_back(origin);
        const PlacedFunnel pf{&ctx.funnels->funnels[j], origin, t};
        const FailureKind fk = placed_funnel_failure(env, pf);
        if (fk != FailureKind::kNone) {
            trace.cost = CostRecord::make(k, K, fk);
            return trace;
        }
        const auto& p = ctx.primitives->primitives[j];
        origin[0] += p.delta_x();
        origin[1] += p.delta_y();
        t += p.duration();
    }
    trace.cost = CostRecord::make(K, K, FailureKind::kNone);
    return trace;
}

EpisodeTrace run_rollout_episode(const Environment& env, const PolicyParams& policy, const PlanningContext& ctx,
                                 const std::vector<double>& x0, const DisturbanceSignal& w) {
    check_context(env, policy, ctx);
    const SystemKind kind = ctx.certified->kind;
    const std::size_t n = state_dimension(kind);
    if (x0.size() != n) throw ContractViolation("run_rollout_episode: x0 dimension mismatch");
    if (w.dim != disturbance_dimension(kind)) throw ContractViolation("run_rollout_episode: disturbance dimension");
    if (ctx.rollout_substeps < 1) throw ContractViolation("run_rollout_episode: rollout_substeps must be >= 1");
    const int K = horizon_of(env);
    EpisodeTrace trace;
    trace.mode = EpisodeMode::kRollout;
    std::array<double, 2> origin = ego_start(env);
    std::vector<double> x = x0;
    x[0] += origin[0];
    x[1] += origin[1];
    double t = 0.0;
    if (const FailureKind fk = state_failure(env, x, 0.0); fk != FailureKind::kNone) {
        trace.cost = CostRecord::make(0, K, fk);
        return trace;
    }
    for (int k = 0; k < K; ++k) {
        Observation obs = observe(env, x, t);
        auto scores = forward(policy, obs);
        const auto mask = k == 0 ? first_mask(ctx) : mask_after(ctx, trace.selected.back());
        std::size_t j = 0;
        try {
            j = select_primitive(scores, mask);
        } catch (const NoComposablePrimitiveError&) {
            trace.cost = CostRecord::make(k, K, FailureKind::kNoComposable);
            return trace;
        }
        trace.decision_times.push_back(t);
        trace.observations.push_back(std::move(obs));
        trace.scores.push_back(std::move(scores));
        trace.selected.push_back(j);
        trace.offsets.push_back(origin);

        const Funnel& funnel = ctx.certified->funnels[j];
        const auto sub = static_cast<std::size_t>(ctx.rollout_substeps);
        const double h = funnel.dt_f / static_cast<double>(sub);
        const FailureKind fk = with_closed_loop(*ctx.primitives, j, origin, [&](const auto& cl) {
            constexpr std::size_t N = std::decay_t<decltype(cl)>::kStateDim;
            std::array<double, N> s;
            std::copy(x.begin(), x.end(), s.begin());
            FailureKind fail = FailureKind::kNone;
            for (std::size_t g = 1; g < funnel.times.size() && fail == FailureKind::kNone; ++g) {
                for (std::size_t q = 0; q < sub; ++q) {
                    const double tl = funnel.times[g - 1] + static_cast<double>(q) * h;
                    const auto& wk = w.at(t + tl + 0.5 * h);
                    s = rk4_step<N>([&](const std::array<double, N>& y, double tt) { return closed_loop_field(cl, y, tt, wk); },
                                    s, tl, h);
                }
                std::copy(s.begin(), s.end(), x.begin());
                fail = state_failure(env, x, t + funnel.times[g]);
            }
            return fail;
        });
        if (fk != FailureKind::kNone) {
            trace.cost = CostRecord::make(k, K, fk);
            return trace;
        }
        const auto& p = ctx.primitives->primitives[j];
        origin[0] += p.delta_x();
        origin[1] += p.delta_y();
        t += p.duration();
    }
    trace.cost = CostRecord::make(K, K, FailureKind::kNone);
    return trace;
}

CostRecord rollout_cost(const Environment& env, const PolicyParams& policy, const PlanningContext& ctx,
                        const std::vector<double>& x0, const DisturbanceSignal& w) {
    return run_rollout_episode(env, policy, ctx, x0, w).cost;
}

}  // namespace funnelpac
