#include "funnelpac/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "funnelpac/errors.hpp"

namespace funnelpac {

std::size_t Config::prior_env_count() const {
    return static_cast<std::size_t>(std::llround(prior_fraction * static_cast<double>(train_envs)));
}

std::size_t Config::cert_env_count() const { return train_envs - prior_env_count(); }

DisturbanceSet default_disturbance(SystemKind kind) {
    if (kind == SystemKind::kBicycle) return DisturbanceSet({-0.5, -1.0, -0.25}, {0.5, 1.0, 0.25});
    if (kind == SystemKind::kPlanarSurrogate) return DisturbanceSet({-0.1, -0.1}, {0.1, 0.1});
    throw ContractViolation("default_disturbance: no default for generic systems");
}

DisturbanceSet disturbance_set(const Config& c) {
    if (c.disturbance_lower.empty() && c.disturbance_upper.empty()) return default_disturbance(c.system());
    return DisturbanceSet(c.disturbance_lower, c.disturbance_upper);
}

namespace {

Json gains_json(const TrackingGains& g) {
    return Json{{"k_p_pos", g.k_p_pos}, {"k_d_pos", g.k_d_pos}, {"k_p_heading", g.k_p_heading},
                {"k_p_along", g.k_p_along}};
}

Json limits_json(const ActuatorLimits& l) {
    return Json{{"speed_min", l.speed_min}, {"speed_max", l.speed_max}, {"steer_max", l.steer_max},
                {"accel_max", l.accel_max}};
}

template <class T>
void maybe(const Json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

void gains_from(const Json& j, TrackingGains& g) {
    maybe(j, "k_p_pos", g.k_p_pos);
    maybe(j, "k_d_pos", g.k_d_pos);
    maybe(j, "k_p_heading", g.k_p_heading);
    maybe(j, "k_p_along", g.k_p_along);
}

void limits_from(const Json& j, ActuatorLimits& l) {
    maybe(j, "speed_min", l.speed_min);
    maybe(j, "speed_max", l.speed_max);
    maybe(j, "steer_max", l.steer_max);
    maybe(j, "accel_max", l.accel_max);
}

}  // namespace

Json config_to_json(const Config& c) {
    const auto& f = c.funnel_library.funnel;
    const auto& h = c.highway_library;
    const auto& s = c.surrogate_library;
    const DisturbanceSet ws = disturbance_set(c);
    return Json{
        {"environment", to_string(c.environment)},
        {"seed", c.seed},
        {"workers", c.workers},
        {"out", c.out},
        {"arm", c.arm},
        {"dt", c.dt},
        {"reachability",
         {{"dt_f", f.dt_f},
          {"working_margin", f.working_margin},
          {"picard_margin", f.picard_margin},
          {"picard_retries", f.picard_retries},
          {"substeps", f.substeps},
          {"second_order", f.second_order},
          {"zonotope_order", f.zonotope_order},
          {"initial_half_widths", c.funnel_library.initial_half_widths},
          {"inlet_growth", c.funnel_library.growth},
          {"inlet_max_iterations", c.funnel_library.max_iterations}}},
        {"highway_library",
         {{"ego_speed", h.ego_speed},
          {"lane_width", h.lane_width},
          {"duration", h.duration},
          {"steepness", h.steepness},
          {"wheelbase", h.wheelbase},
          {"gains", gains_json(h.gains)},
          {"limits", limits_json(h.limits)}}},
        {"surrogate_library",
         {{"forward_step", s.forward_step},
          {"lateral_unit", s.lateral_unit},
          {"duration", s.duration},
          {"steepness", s.steepness},
          {"gains", gains_json(s.gains)},
          {"limits", limits_json(s.limits)}}},
        {"disturbance", {{"lower", ws.lower()}, {"upper", ws.upper()}}},
        {"verify", {{"samples", c.verify_samples}, {"segment_duration", c.verify_segment}}},
        {"highway", to_json(c.env.highway)},
        {"obstacle_field", to_json(c.env.field)},
        {"datasets", {{"train_envs", c.train_envs}, {"prior_fraction", c.prior_fraction}, {"test_envs", c.test_envs}}},
        {"train",
         {{"iterations", c.train.iterations},
          {"n_pairs", c.train.n_pairs},
          {"minibatch", c.train.minibatch},
          {"learning_rate", c.train.learning_rate},
          {"decay_iterations", c.train.decay_iterations},
          {"init_std", c.init_std},
          {"init_sigma", c.init_sigma}}},
        {"certify", {{"m_policies", c.m_policies}, {"delta", c.delta}}},
        {"evaluate",
         {{"disturbance_draws", c.disturbance_draws},
          {"disturbance_segment", c.disturbance_segment},
          {"initial_box_fraction", c.initial_box_fraction},
          {"rollout_substeps", c.rollout_substeps}}},
    };
}

Config config_from_json(const Json& j, Config c) {
    try {
        if (j.contains("environment")) c.environment = environment_kind_from_string(j.at("environment").get<std::string>());
        maybe(j, "seed", c.seed);
        maybe(j, "workers", c.workers);
        maybe(j, "out", c.out);
        maybe(j, "arm", c.arm);
        maybe(j, "dt", c.dt);
        if (j.contains("reachability")) {
            const auto& r = j.at("reachability");
            auto& f = c.funnel_library.funnel;
            maybe(r, "dt_f", f.dt_f);
            maybe(r, "working_margin", f.working_margin);
            maybe(r, "picard_margin", f.picard_margin);
            maybe(r, "picard_retries", f.picard_retries);
            maybe(r, "substeps", f.substeps);
            maybe(r, "second_order", f.second_order);
            maybe(r, "zonotope_order", f.zonotope_order);
            maybe(r, "initial_half_widths", c.funnel_library.initial_half_widths);
            maybe(r, "inlet_growth", c.funnel_library.growth);
            maybe(r, "inlet_max_iterations", c.funnel_library.max_iterations);
        }
        if (j.contains("highway_library")) {
            const auto& r = j.at("highway_library");
            auto& h = c.highway_library;
            maybe(r, "ego_speed", h.ego_speed);
            maybe(r, "lane_width", h.lane_width);
            maybe(r, "duration", h.duration);
            maybe(r, "steepness", h.steepness);
            maybe(r, "wheelbase", h.wheelbase);
            if (r.contains("gains")) gains_from(r.at("gains"), h.gains);
            if (r.contains("limits")) limits_from(r.at("limits"), h.limits);
        }
        if (j.contains("surrogate_library")) {
            const auto& r = j.at("surrogate_library");
            auto& s = c.surrogate_library;
            maybe(r, "forward_step", s.forward_step);
            maybe(r, "lateral_unit", s.lateral_unit);
            maybe(r, "duration", s.duration);
            maybe(r, "steepness", s.steepness);
            if (r.contains("gains")) gains_from(r.at("gains"), s.gains);
            if (r.contains("limits")) limits_from(r.at("limits"), s.limits);
        }
        if (j.contains("disturbance")) {
            maybe(j.at("disturbance"), "lower", c.disturbance_lower);
            maybe(j.at("disturbance"), "upper", c.disturbance_upper);
        }
        if (j.contains("verify")) {
            maybe(j.at("verify"), "samples", c.verify_samples);
            maybe(j.at("verify"), "segment_duration", c.verify_segment);
        }
        if (j.contains("highway")) update_from_json(j.at("highway"), c.env.highway);
        if (j.contains("obstacle_field")) update_from_json(j.at("obstacle_field"), c.env.field);
        if (j.contains("datasets")) {
            const auto& d = j.at("datasets");
            maybe(d, "train_envs", c.train_envs);
            maybe(d, "prior_fraction", c.prior_fraction);
            maybe(d, "test_envs", c.test_envs);
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            maybe(t, "iterations", c.train.iterations);
            maybe(t, "n_pairs", c.train.n_pairs);
            maybe(t, "minibatch", c.train.minibatch);
            maybe(t, "learning_rate", c.train.learning_rate);
            maybe(t, "decay_iterations", c.train.decay_iterations);
            maybe(t, "init_std", c.init_std);
            maybe(t, "init_sigma", c.init_sigma);
        }
        if (j.contains("certify")) {
            maybe(j.at("certify"), "m_policies", c.m_policies);
            maybe(j.at("certify"), "delta", c.delta);
        }
        if (j.contains("evaluate")) {
            const auto& e = j.at("evaluate");
            maybe(e, "disturbance_draws", c.disturbance_draws);
            maybe(e, "disturbance_segment", c.disturbance_segment);
            maybe(e, "initial_box_fraction", c.initial_box_fraction);
            maybe(e, "rollout_substeps", c.rollout_substeps);
        }
    } catch (const Json::exception& e) {
        throw ContractViolation(std::string("config: ") + e.what());
    }
    if (c.prior_fraction <= 0.0 || c.prior_fraction >= 1.0) throw ContractViolation("config: prior_fraction in (0, 1)");
    if (c.arm != "funnel" && c.arm != "nominal") throw ContractViolation("config: arm must be funnel or nominal");
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw ContractViolation("config: delta must lie in (0, 1)");
    return c;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ContractViolation("cannot open config " + path);
    try {
        return config_from_json(Json::parse(in));
    } catch (const Json::parse_error& e) {
        throw ContractViolation("config " + path + ": " + e.what());
    }
}

PrimitiveLibrary build_primitive_library(const Config& c) {
    if (c.system() == SystemKind::kBicycle) return build_highway_library(c.dt, c.highway_library);
    return build_surrogate_library(c.dt, c.surrogate_library);
}

Architecture default_architecture(EnvironmentKind kind) {
    return kind == EnvironmentKind::kHighway ? highway_architecture() : surrogate_architecture();
}

}  // namespace funnelpac
