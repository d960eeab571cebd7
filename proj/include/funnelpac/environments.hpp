#pragma once

// Sampled planning environments and the two episode costs: the funnel-sequence
// cost C(pi, E) and the collision checks used by disturbed rollouts.
//
// Highway: lanes are stacked along +y starting at y = 0, traffic drives along
// +x. Obstacle field: forward is +x in [0, 14] m, lateral y in [-5, 5] m.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "funnelpac/dynamics.hpp"
#include "funnelpac/reachability.hpp"

namespace funnelpac {

enum class EnvironmentKind { kHighway, kObstacleField };

std::string to_string(EnvironmentKind kind);
EnvironmentKind environment_kind_from_string(const std::string& name);
SystemKind system_for(EnvironmentKind kind);

struct HighwayConfig {
    int lane_count = 5;
    double lane_width = 4.0;
    int horizon = 10;
    double interval = 1.0;  // primitive duration; traffic speeds change on this grid
    int vehicle_count = 12;
    double offset_min = 8.0;
    double offset_max = 100.0;
    double speed_min = 0.0;
    double speed_max = 9.0;
    double vehicle_length = 4.5;
    double vehicle_width = 2.0;
    int ego_lane = 2;
    int observed_vehicles = 5;
    double scale_x = 30.0;
    double scale_y = 8.0;
};

struct ObstacleFieldConfig {
    int obstacle_count = 50;
    double radius_min = 0.05;
    double radius_max = 0.30;
    double forward_min = 0.0;
    double forward_max = 14.0;
    double lateral_min = -5.0;
    double lateral_max = 5.0;
    int horizon = 14;
    double interval = 1.0;
    double robot_radius = 0.1;
    int rays = 16;
    double ray_range = 10.0;
};

struct EnvironmentConfig {
    HighwayConfig highway;
    ObstacleFieldConfig field;
};

struct Vehicle {
    int lane = 0;
    double offset = 0.0;  // longitudinal centre at t = 0
    std::vector<double> speeds;  // one per primitive interval
    double length = 4.5;
    double width = 2.0;
};

struct HighwayEnvironment {
    HighwayConfig config;
    std::vector<Vehicle> vehicles;
    std::uint64_t seed = 0;

    double lane_center(int lane) const { return (lane + 0.5) * config.lane_width; }
    double road_width() const { return config.lane_count * config.lane_width; }
    /// Longitudinal centre of vehicle i at time t (speeds held constant per interval, last held beyond).
    double vehicle_x(std::size_t i, double t) const;
    std::array<double, 2> ego_start() const { return {0.0, lane_center(config.ego_lane)}; }
};

struct Disc {
    double x = 0.0;
    double y = 0.0;
    double r = 0.0;
};

struct ObstacleFieldEnvironment {
    ObstacleFieldConfig config;
    std::vector<Disc> obstacles;
    std::uint64_t seed = 0;

    std::array<double, 2> ego_start() const { return {0.0, 0.0}; }
};

using Environment = std::variant<HighwayEnvironment, ObstacleFieldEnvironment>;

EnvironmentKind kind_of(const Environment& env);
int horizon_of(const Environment& env);
std::array<double, 2> ego_start(const Environment& env);

struct Observation {
    std::vector<double> values;
};

std::size_t observation_dimension(const Environment& env);

enum class FailureKind { kNone, kCollision, kBoundary, kNoComposable };

std::string to_string(FailureKind kind);
FailureKind failure_kind_from_string(const std::string& name);

struct CostRecord {
    int k = 0;
    int K = 0;
    double cost = 0.0;
    FailureKind failure = FailureKind::kNone;

    static CostRecord make(int k, int K, FailureKind failure);
};

/// A library funnel placed in the world: boxes shifted by origin (x, y) and
/// grid times shifted by start_time.
struct PlacedFunnel {
    const Funnel* funnel = nullptr;
    std::array<double, 2> origin{0.0, 0.0};
    double start_time = 0.0;
};

Environment sample_environment(EnvironmentKind kind, std::uint64_t seed, const EnvironmentConfig& config = {});

/// Highway: relative (dx, dy) of the nearest vehicles, nearest first; field: ray ranges.
Observation observe(const Environment& env, const std::vector<double>& ego_state, double t);

/// Checks every grid box of the sequence against boundaries and obstacles.
/// Consecutive funnels must be composable according to library.composability.
CostRecord funnel_collision_cost(const Environment& env, const FunnelLibrary& library,
                                 const std::vector<PlacedFunnel>& sequence);

/// Collision test of a single grid-time box (ego positions in box, headings in box[2] for the highway).
/// Vehicle rectangles are grown longitudinally by vehicle_inflation.
FailureKind box_failure(const Environment& env, const Box& box, double t, double vehicle_inflation = 0.0);

/// First failure of one placed funnel over its grid times (vehicles inflated by speed_max * dt_f).
FailureKind placed_funnel_failure(const Environment& env, const PlacedFunnel& placed);

/// Collision test of one true state at time t.
FailureKind state_failure(const Environment& env, const std::vector<double>& state, double t);

}  // namespace funnelpac
