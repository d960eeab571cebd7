#include "funnelpac/reachability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace funnelpac {

bool Box::contains(const std::vector<double>& x) const {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i) {
        if (x[i] < lower[i] || x[i] > upper[i]) return false;
    }
    return true;
}

bool Box::subset_of(const Box& other) const {
    if (other.dim() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i) {
        if (lower[i] < other.lower[i] || upper[i] > other.upper[i]) return false;
    }
    return true;
}

std::vector<double> Box::center() const {
    std::vector<double> c(dim());
    for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
    return c;
}

std::vector<double> Box::widths() const {
    std::vector<double> w(dim());
    for (std::size_t i = 0; i < dim(); ++i) w[i] = upper[i] - lower[i];
    return w;
}

double Box::margin(const std::vector<double>& x) const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dim(); ++i) m = std::min({m, x[i] - lower[i], upper[i] - x[i]});
    return m;
}

Box Box::centered(const std::vector<double>& center, const std::vector<double>& half_widths) {
    if (center.size() != half_widths.size()) throw ContractViolation("Box::centered: dimension mismatch");
    Box b;
    b.lower.resize(center.size());
    b.upper.resize(center.size());
    for (std::size_t i = 0; i < center.size(); ++i) {
        if (!(half_widths[i] >= 0.0)) throw ContractViolation("Box::centered: negative half-width");
        b.lower[i] = center[i] - half_widths[i];
        b.upper[i] = center[i] + half_widths[i];
    }
    return b;
}

bool FunnelLibrary::all_pairs_composable() const {
    for (const auto& row : composability) {
        for (bool ok : row) {
            if (!ok) return false;
        }
    }
    return !composability.empty();
}

bool check_composable(const Funnel& fj, const Funnel& fk) {
    if (fj.dim() != fk.dim() || fj.dim() == 0) throw ContractViolation("check_composable: dimension mismatch");
    const Box& out = fj.outlet();
    const Box& in = fk.inlet();
    for (std::size_t i = 0; i < out.dim(); ++i) {
        const double off = i < fj.offset.size() ? fj.offset[i] : 0.0;
        if (out.lower[i] - off < in.lower[i] || out.upper[i] - off > in.upper[i]) return false;
    }
    return true;
}

Funnel translate_funnel(const Funnel& f, const std::vector<double>& offset) {
    if (offset.size() != f.dim()) throw ContractViolation("translate_funnel: offset dimension mismatch");
    if (f.kind != SystemKind::kGeneric) {
        for (std::size_t i = 2; i < offset.size(); ++i) {
            if (offset[i] != 0.0) throw ContractViolation("translate_funnel: offset must only move positions");
        }
    }
    Funnel r = f;
    for (auto& b : r.boxes) {
        for (std::size_t i = 0; i < offset.size(); ++i) {
            b.lower[i] += offset[i];
            b.upper[i] += offset[i];
        }
    }
    return r;
}

Funnel compute_primitive_funnel(const PrimitiveLibrary& lib, std::size_t id, const Box& inlet,
                                const DisturbanceSet& ws, const FunnelOptions& options) {
    const auto& p = lib.primitives.at(id);
    Funnel f = with_closed_loop(lib, id, {0.0, 0.0}, [&](const auto& cl) {
        return compute_funnel(cl, inlet, ws, p.duration(), options, id, lib.system.kind);
    });
    f.offset = lib.terminal_offset(id);
    return f;
}

FunnelViolationReport verify_library_funnel(const PrimitiveLibrary& lib, const Funnel& f, const DisturbanceSet& ws,
                                            std::size_t n_samples, std::uint64_t seed, double segment_duration) {
    return with_closed_loop(lib, f.primitive_id, {0.0, 0.0}, [&](const auto& cl) {
        return verify_funnel_monte_carlo(f, cl, ws, n_samples, seed, segment_duration);
    });
}

FunnelLibrary build_funnel_library(const PrimitiveLibrary& lib, const DisturbanceSet& ws,
                                   const FunnelLibraryOptions& options) {
    if (lib.size() == 0) throw ContractViolation("build_funnel_library: empty primitive library");
    const std::size_t n = state_dimension(lib.system.kind);
    if (ws.dim() != disturbance_dimension(lib.system.kind)) {
        throw ContractViolation("build_funnel_library: disturbance dimension mismatch");
    }
    std::vector<double> half = options.initial_half_widths;
    if (half.empty()) half.assign(n, 1e-3);
    if (half.size() != n) throw ContractViolation("build_funnel_library: initial_half_widths dimension mismatch");

    FunnelLibrary out;
    out.kind = lib.system.kind;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        out.funnels.clear();
        for (std::size_t j = 0; j < lib.size(); ++j) {
            const Box inlet = Box::centered(lib.nominal_start(j), half);
            out.funnels.push_back(compute_primitive_funnel(lib, j, inlet, ws, options.funnel));
        }
        // Half-widths needed so every translated outlet fits every inlet.
        std::vector<double> need(n, 0.0);
        for (const auto& fj : out.funnels) {
            for (std::size_t k = 0; k < lib.size(); ++k) {
                const auto start = lib.nominal_start(k);
                for (std::size_t i = 0; i < n; ++i) {
                    need[i] = std::max({need[i], start[i] - (fj.outlet().lower[i] - fj.offset[i]),
                                        fj.outlet().upper[i] - fj.offset[i] - start[i]});
                }
            }
        }
        bool fits = true;
        for (std::size_t i = 0; i < n; ++i) fits = fits && need[i] <= half[i];
        if (fits) {
            out.composability.assign(lib.size(), std::vector<bool>(lib.size(), false));
            for (std::size_t j = 0; j < lib.size(); ++j)
                for (std::size_t k = 0; k < lib.size(); ++k)
                    out.composability[j][k] = check_composable(out.funnels[j], out.funnels[k]);
            return out;
        }
        for (std::size_t i = 0; i < n; ++i) half[i] = std::max(half[i], need[i]) * options.growth;
    }
    throw ContractViolation("build_funnel_library: inlets did not reach a composable fixed point after " +
                            std::to_string(options.max_iterations) + " iterations");
}

FunnelLibrary nominal_funnel_library(const PrimitiveLibrary& lib, const FunnelLibrary& certified) {
    if (certified.size() != lib.size()) throw ContractViolation("nominal_funnel_library: library size mismatch");
    FunnelLibrary out;
    out.kind = lib.system.kind;
    out.composability = certified.composability;
    for (std::size_t j = 0; j < lib.size(); ++j) {
        const Funnel& ref = certified.funnels[j];
        Funnel f;
        f.primitive_id = j;
        f.kind = lib.system.kind;
        f.dt_f = ref.dt_f;
        f.offset = ref.offset;
        with_closed_loop(lib, j, {0.0, 0.0}, [&](const auto& cl) {
            for (double t : ref.times) {
                const auto s = cl.nominal_state(t);
                std::vector<double> v(s.begin(), s.end());
                f.times.push_back(t);
                f.boxes.push_back(Box{v, v});
            }
            return 0;
        });
        out.funnels.push_back(std::move(f));
    }
    return out;
}

}  // namespace funnelpac
