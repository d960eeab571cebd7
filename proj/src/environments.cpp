#include "funnelpac/environments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "funnelpac/errors.hpp"
#include "funnelpac/interval.hpp"
#include "funnelpac/rng.hpp"

namespace funnelpac {

std::string to_string(EnvironmentKind kind) {
    return kind == EnvironmentKind::kHighway ? "highway" : "obstacle_field";
}

EnvironmentKind environment_kind_from_string(const std::string& name) {
    if (name == "highway") return EnvironmentKind::kHighway;
    if (name == "obstacle_field" || name == "surrogate") return EnvironmentKind::kObstacleField;
    throw ContractViolation("unknown environment kind: " + name);
}

SystemKind system_for(EnvironmentKind kind) {
    return kind == EnvironmentKind::kHighway ? SystemKind::kBicycle : SystemKind::kPlanarSurrogate;
}

std::string to_string(FailureKind kind) {
    switch (kind) {
        case FailureKind::kNone: return "none";
        case FailureKind::kCollision: return "collision";
        case FailureKind::kBoundary: return "boundary";
        case FailureKind::kNoComposable: return "no_composable";
    }
    return "none";
}

FailureKind failure_kind_from_string(const std::string& name) {
    if (name == "none") return FailureKind::kNone;
    if (name == "collision") return FailureKind::kCollision;
    if (name == "boundary") return FailureKind::kBoundary;
    if (name == "no_composable") return FailureKind::kNoComposable;
    throw ContractViolation("unknown failure kind: " + name);
}

CostRecord CostRecord::make(int k, int K, FailureKind failure) {
    if (K < 1 || k < 0 || k > K) throw ContractViolation("CostRecord: k must lie in [0, K]");
    CostRecord r;
    r.k = k;
    r.K = K;
    r.cost = static_cast<double>(K - k) / static_cast<double>(K);
    r.failure = failure;
    return r;
}

double HighwayEnvironment::vehicle_x(std::size_t i, double t) const {
    const Vehicle& v = vehicles.at(i);
    double x = v.offset;
    const double dt = config.interval;
    std::size_t j = 0;
    for (; j + 1 < v.speeds.size() && t >= static_cast<double>(j + 1) * dt; ++j) x += v.speeds[j] * dt;
    if (!v.speeds.empty()) x += v.speeds[j] * (t - static_cast<double>(j) * dt);
    return x;
}

EnvironmentKind kind_of(const Environment& env) {
    return std::holds_alternative<HighwayEnvironment>(env) ? EnvironmentKind::kHighway
                                                           : EnvironmentKind::kObstacleField;
}

int horizon_of(const Environment& env) {
    return std::visit([](const auto& e) { return e.config.horizon; }, env);
}

std::array<double, 2> ego_start(const Environment& env) {
    return std::visit([](const auto& e) { return e.ego_start(); }, env);
}

std::size_t observation_dimension(const Environment& env) {
    if (const auto* h = std::get_if<HighwayEnvironment>(&env)) {
        return 2 * static_cast<std::size_t>(h->config.observed_vehicles);
    }
    return static_cast<std::size_t>(std::get<ObstacleFieldEnvironment>(env).config.rays);
}

Environment sample_environment(EnvironmentKind kind, std::uint64_t seed, const EnvironmentConfig& config) {
    if (kind == EnvironmentKind::kHighway) {
        const HighwayConfig& c = config.highway;
        if (c.lane_count < 1 || c.horizon < 1 || c.vehicle_count < 0) {
            throw ContractViolation("sample_environment: invalid highway config");
        }
        HighwayEnvironment env;
        env.config = c;
        env.seed = seed;
        for (int i = 0; i < c.vehicle_count; ++i) {
            Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
            Vehicle v;
            v.lane = std::uniform_int_distribution<int>(0, c.lane_count - 1)(rng);
            v.offset = uniform(rng, c.offset_min, c.offset_max);
            v.speeds.resize(static_cast<std::size_t>(c.horizon));
            for (auto& s : v.speeds) s = uniform(rng, c.speed_min, c.speed_max);
            v.length = c.vehicle_length;
            v.width = c.vehicle_width;
            env.vehicles.push_back(std::move(v));
        }
        return env;
    }
    const ObstacleFieldConfig& c = config.field;
    if (c.obstacle_count < 0 || c.horizon < 1 || c.rays < 2) {
        throw ContractViolation("sample_environment: invalid obstacle-field config");
    }
    ObstacleFieldEnvironment env;
    env.config = c;
    env.seed = seed;
    Rng rng(derive_seed(seed, {0}));
    for (int i = 0; i < c.obstacle_count; ++i) {
        Disc d;
        d.x = uniform(rng, c.forward_min, c.forward_max);
        d.y = uniform(rng, c.lateral_min, c.lateral_max);
        d.r = uniform(rng, c.radius_min, c.radius_max);
        env.obstacles.push_back(d);
    }
    return env;
}

namespace {

Observation observe_highway(const HighwayEnvironment& env, double x, double y, double t) {
    const auto& c = env.config;
    std::vector<std::size_t> order(env.vehicles.size());
    std::vector<double> dist(env.vehicles.size());
    for (std::size_t i = 0; i < env.vehicles.size(); ++i) {
        dist[i] = std::hypot(env.vehicle_x(i, t) - x, env.lane_center(env.vehicles[i].lane) - y);
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

    Observation obs;
    obs.values.assign(2 * static_cast<std::size_t>(c.observed_vehicles), 1.0);
    const std::size_t n = std::min(order.size(), static_cast<std::size_t>(c.observed_vehicles));
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t i = order[r];
        obs.values[2 * r] = std::clamp((env.vehicle_x(i, t) - x) / c.scale_x, -1.0, 1.0);
        obs.values[2 * r + 1] = std::clamp((env.lane_center(env.vehicles[i].lane) - y) / c.scale_y, -1.0, 1.0);
    }
    return obs;
}

// Distance along a unit ray to the first disc, or +inf.
double ray_hit(double px, double py, double dx, double dy, const Disc& d) {
    const double fx = px - d.x;
    const double fy = py - d.y;
    const double c = fx * fx + fy * fy - d.r * d.r;
    if (c <= 0.0) return 0.0;
    const double b = fx * dx + fy * dy;
    const double disc = b * b - c;
    if (disc < 0.0) return std::numeric_limits<double>::infinity();
    const double t = -b - std::sqrt(disc);
    return t >= 0.0 ? t : std::numeric_limits<double>::infinity();
}

Observation observe_field(const ObstacleFieldEnvironment& env, double x, double y) {
    const auto& c = env.config;
    Observation obs;
    obs.values.resize(static_cast<std::size_t>(c.rays));
    const double pi = std::acos(-1.0);
    for (int i = 0; i < c.rays; ++i) {
        const double phi = -0.5 * pi + pi * static_cast<double>(i) / static_cast<double>(c.rays - 1);
        const double dx = std::cos(phi);
        const double dy = std::sin(phi);
        double range = c.ray_range;
        for (const Disc& d : env.obstacles) range = std::min(range, ray_hit(x, y, dx, dy, d));
        obs.values[static_cast<std::size_t>(i)] = 2.0 * range / c.ray_range - 1.0;
    }
    return obs;
}

bool overlap(double alo, double ahi, double blo, double bhi) { return alo <= bhi && blo <= ahi; }

// Separating-axis test between the ego rectangle (centre, heading) and an
// axis-aligned rectangle; touching does not count as a collision.
bool rect_collides(double x, double y, double theta, double hl, double hw, double bx_lo, double bx_hi, double by_lo,
                   double by_hi) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const std::array<std::array<double, 2>, 4> ego = {{{x + c * hl - s * hw, y + s * hl + c * hw},
                                                       {x + c * hl + s * hw, y + s * hl - c * hw},
                                                       {x - c * hl + s * hw, y - s * hl - c * hw},
                                                       {x - c * hl - s * hw, y - s * hl + c * hw}}};
    const std::array<std::array<double, 2>, 4> box = {
        {{bx_lo, by_lo}, {bx_hi, by_lo}, {bx_hi, by_hi}, {bx_lo, by_hi}}};
    const std::array<std::array<double, 2>, 4> axes = {{{1.0, 0.0}, {0.0, 1.0}, {c, s}, {-s, c}}};
    for (const auto& a : axes) {
        double elo = std::numeric_limits<double>::infinity(), ehi = -elo;
        double blo = elo, bhi = -elo;
        for (const auto& p : ego) {
            const double v = p[0] * a[0] + p[1] * a[1];
            elo = std::min(elo, v);
            ehi = std::max(ehi, v);
        }
        for (const auto& p : box) {
            const double v = p[0] * a[0] + p[1] * a[1];
            blo = std::min(blo, v);
            bhi = std::max(bhi, v);
        }
        if (ehi <= blo || bhi <= elo) return false;
    }
    return true;
}

}  // namespace

Observation observe(const Environment& env, const std::vector<double>& ego_state, double t) {
    if (ego_state.size() < 2) throw ContractViolation("observe: state needs a position");
    if (const auto* h = std::get_if<HighwayEnvironment>(&env)) {
        return observe_highway(*h, ego_state[0], ego_state[1], t);
    }
    return observe_field(std::get<ObstacleFieldEnvironment>(env), ego_state[0], ego_state[1]);
}

FailureKind box_failure(const Environment& env, const Box& box, double t, double vehicle_inflation) {
    if (const auto* h = std::get_if<HighwayEnvironment>(&env)) {
        if (box.dim() < 3) throw ContractViolation("box_failure: highway boxes carry a heading");
        if (box.lower[1] < 0.0 || box.upper[1] > h->road_width()) return FailureKind::kBoundary;
        // Axis-aligned hull of the ego rectangle over the heading interval.
        const Interval th(box.lower[2], box.upper[2]);
        const double hl = 0.5 * h->config.vehicle_length;
        const double hw = 0.5 * h->config.vehicle_width;
        const double cm = cos(th).mag();
        const double sm = sin(th).mag();
        const double ex = hl * cm + hw * sm;
        const double ey = hl * sm + hw * cm;
        const double xlo = box.lower[0] - ex, xhi = box.upper[0] + ex;
        const double ylo = box.lower[1] - ey, yhi = box.upper[1] + ey;
        for (std::size_t i = 0; i < h->vehicles.size(); ++i) {
            const Vehicle& v = h->vehicles[i];
            const double vx = h->vehicle_x(i, t);
            const double vy = h->lane_center(v.lane);
            if (overlap(xlo, xhi, vx - 0.5 * v.length - vehicle_inflation, vx + 0.5 * v.length + vehicle_inflation) &&
                overlap(ylo, yhi, vy - 0.5 * v.width, vy + 0.5 * v.width)) {
                return FailureKind::kCollision;
            }
        }
        return FailureKind::kNone;
    }
    const auto& f = std::get<ObstacleFieldEnvironment>(env);
    if (box.lower[1] < f.config.lateral_min || box.upper[1] > f.config.lateral_max) return FailureKind::kBoundary;
    for (const Disc& d : f.obstacles) {
        const double dx = std::max({box.lower[0] - d.x, 0.0, d.x - box.upper[0]});
        const double dy = std::max({box.lower[1] - d.y, 0.0, d.y - box.upper[1]});
        const double reach = d.r + f.config.robot_radius;
        if (dx * dx + dy * dy <= reach * reach) return FailureKind::kCollision;
    }
    return FailureKind::kNone;
}

FailureKind state_failure(const Environment& env, const std::vector<double>& state, double t) {
    if (const auto* h = std::get_if<HighwayEnvironment>(&env)) {
        if (state.size() < 3) throw ContractViolation("state_failure: highway state is [x, y, theta]");
        if (state[1] < 0.0 || state[1] > h->road_width()) return FailureKind::kBoundary;
        const double hl = 0.5 * h->config.vehicle_length;
        const double hw = 0.5 * h->config.vehicle_width;
        for (std::size_t i = 0; i < h->vehicles.size(); ++i) {
            const Vehicle& v = h->vehicles[i];
            const double vx = h->vehicle_x(i, t);
            const double vy = h->lane_center(v.lane);
            if (std::fabs(vx - state[0]) > 0.5 * v.length + hl + hw) continue;
            if (rect_collides(state[0], state[1], state[2], hl, hw, vx - 0.5 * v.length, vx + 0.5 * v.length,
                              vy - 0.5 * v.width, vy + 0.5 * v.width)) {
                return FailureKind::kCollision;
            }
        }
        return FailureKind::kNone;
    }
    const auto& f = std::get<ObstacleFieldEnvironment>(env);
    if (state.size() < 2) throw ContractViolation("state_failure: state needs a position");
    if (state[1] < f.config.lateral_min || state[1] > f.config.lateral_max) return FailureKind::kBoundary;
    for (const Disc& d : f.obstacles) {
        const double reach = d.r + f.config.robot_radius;
        const double dx = state[0] - d.x;
        const double dy = state[1] - d.y;
        if (dx * dx + dy * dy < reach * reach) return FailureKind::kCollision;
    }
    return FailureKind::kNone;
}

FailureKind placed_funnel_failure(const Environment& env, const PlacedFunnel& pf) {
    if (pf.funnel == nullptr) throw ContractViolation("placed_funnel_failure: null funnel");
    const auto* h = std::get_if<HighwayEnvironment>(&env);
    const double inflation = h != nullptr ? h->config.speed_max * pf.funnel->dt_f : 0.0;
    Box b;
    for (std::size_t g = 0; g < pf.funnel->boxes.size(); ++g) {
        b = pf.funnel->boxes[g];
        for (std::size_t i = 0; i < 2; ++i) {
            b.lower[i] += pf.origin[i];
            b.upper[i] += pf.origin[i];
        }
        const FailureKind fk = box_failure(env, b, pf.start_time + pf.funnel->times[g], inflation);
        if (fk != FailureKind::kNone) return fk;
    }
    return FailureKind::kNone;
}

CostRecord funnel_collision_cost(const Environment& env, const FunnelLibrary& library,
                                 const std::vector<PlacedFunnel>& sequence) {
    const int K = horizon_of(env);
    if (static_cast<int>(sequence.size()) > K) throw ContractViolation("funnel_collision_cost: sequence longer than K");
    for (std::size_t s = 0; s < sequence.size(); ++s) {
        const PlacedFunnel& pf = sequence[s];
        if (pf.funnel == nullptr) throw ContractViolation("funnel_collision_cost: null funnel");
        if (s > 0) {
            const std::size_t a = sequence[s - 1].funnel->primitive_id;
            const std::size_t b = pf.funnel->primitive_id;
            if (a >= library.composability.size() || b >= library.composability[a].size() ||
                !library.composability[a][b]) {
                throw ContractViolation("funnel_collision_cost: uncertified composition " + std::to_string(a) +
                                        " -> " + std::to_string(b));
            }
        }
        const FailureKind fk = placed_funnel_failure(env, pf);
        if (fk != FailureKind::kNone) return CostRecord::make(static_cast<int>(s), K, fk);
    }
    const int k = static_cast<int>(sequence.size());
    return CostRecord::make(k, K, k < K ? FailureKind::kNoComposable : FailureKind::kNone);
}

}  // namespace funnelpac
