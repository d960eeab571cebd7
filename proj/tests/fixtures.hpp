#pragma once

// Shipped libraries built once per test process.

#include "funnelpac/config.hpp"
#include "funnelpac/policy.hpp"
#include "funnelpac/reachability.hpp"

namespace fixtures {

struct Setup {
    funnelpac::Config config;
    funnelpac::PrimitiveLibrary primitives;
    funnelpac::DisturbanceSet ws;
    funnelpac::FunnelLibrary certified;
    funnelpac::FunnelLibrary nominal;

    funnelpac::PlanningContext context(bool nominal_arm = false) const {
        funnelpac::PlanningContext ctx;
        ctx.primitives = &primitives;
        ctx.funnels = nominal_arm ? &nominal : &certified;
        ctx.certified = &certified;
        ctx.initial_box = funnelpac::initial_uncertainty_box(primitives, certified, config.initial_box_fraction);
        ctx.rollout_substeps = config.rollout_substeps;
        return ctx;
    }
};

inline Setup make_setup(funnelpac::EnvironmentKind kind) {
    Setup s;
    s.config.environment = kind;
    s.primitives = funnelpac::build_primitive_library(s.config);
    s.ws = funnelpac::disturbance_set(s.config);
    s.certified = funnelpac::build_funnel_library(s.primitives, s.ws, s.config.funnel_library);
    s.nominal = funnelpac::nominal_funnel_library(s.primitives, s.certified);
    return s;
}

inline const Setup& highway() {
    static const Setup s = make_setup(funnelpac::EnvironmentKind::kHighway);
    return s;
}

inline const Setup& surrogate() {
    static const Setup s = make_setup(funnelpac::EnvironmentKind::kObstacleField);
    return s;
}

}  // namespace fixtures
