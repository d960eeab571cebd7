#pragma once

// Hyper-rectangle funnels for closed-loop primitives.
//
// compute_funnel propagates a zonotope {c + sum_j xi_j g_j : |xi_j| <= 1}
// through validated interval Euler steps:
//
//   x(t+h) in x(t) + h f0(x(t), t) + h G W + (h^2 / 2) D
//
// where D encloses d/dt f0 along trajectories over an a-priori (Picard)
// enclosure of the step. The Euler map is linearized at c with a Hessian
// remainder over the hull (mean-value form where the Hessian does not exist);
// the per-step disturbance and remainder boxes become new generators, so the
// accumulated disturbance keeps its shape instead of being re-boxed. Boxes
// emitted per grid time are the interval hulls of the zonotope.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <vector>

#include "funnelpac/dual.hpp"
#include "funnelpac/dynamics.hpp"
#include "funnelpac/errors.hpp"
#include "funnelpac/interval.hpp"
#include "funnelpac/primitives.hpp"
#include "funnelpac/rng.hpp"

namespace funnelpac {

struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t dim() const { return lower.size(); }
    bool contains(const std::vector<double>& x) const;
    bool subset_of(const Box& other) const;
    std::vector<double> center() const;
    std::vector<double> widths() const;
    /// Signed distance to the nearest face; negative when x lies outside.
    double margin(const std::vector<double>& x) const;

    static Box centered(const std::vector<double>& center, const std::vector<double>& half_widths);
};

struct Funnel {
    std::size_t primitive_id = 0;
    SystemKind kind = SystemKind::kGeneric;
    double dt_f = 0.01;
    std::vector<double> times;
    std::vector<Box> boxes;
    /// Nominal start-to-end displacement of the primitive (position coordinates only).
    std::vector<double> offset;

    const Box& inlet() const { return boxes.front(); }
    const Box& outlet() const { return boxes.back(); }
    std::size_t dim() const { return boxes.empty() ? 0 : boxes.front().dim(); }
    double duration() const { return times.empty() ? 0.0 : times.back(); }
};

struct FunnelLibrary {
    SystemKind kind = SystemKind::kGeneric;
    std::vector<Funnel> funnels;
    /// composability[j][k] holds iff outlet_j, translated into k's frame, lies inside inlet_k.
    std::vector<std::vector<bool>> composability;

    std::size_t size() const { return funnels.size(); }
    bool all_pairs_composable() const;
};

struct FunnelOptions {
    double dt_f = 0.01;
    /// Working box: inlet inflated by this much in every coordinate.
    double working_margin = 40.0;
    /// Absolute term added to the Picard inflation radius.
    double picard_margin = 1e-8;
    int picard_retries = 20;
    /// Internal Euler steps per grid interval dt_f.
    int substeps = 10;
    /// Linearize at the set center with a Hessian remainder (else mean-value form over the hull).
    bool second_order = true;
    /// Generator budget per state dimension before order reduction.
    int zonotope_order = 20;
};

struct FunnelViolationReport {
    std::size_t samples = 0;
    std::size_t violating_samples = 0;
    std::size_t violating_points = 0;
    /// Minimum over samples and grid times of the signed box margin.
    double worst_margin = 0.0;
};

/// True iff fj's outlet translated by -fj.offset lies inside fk's inlet.
bool check_composable(const Funnel& fj, const Funnel& fk);

/// Shifts every box by offset; offset must vanish outside position coordinates.
Funnel translate_funnel(const Funnel& f, const std::vector<double>& offset);

namespace detail {

template <std::size_t N>
using IVec = std::array<Interval, N>;
template <std::size_t N>
using IMat = std::array<std::array<Interval, N>, N>;

template <std::size_t N>
IVec<N> to_ivec(const Box& b) {
    IVec<N> r;
    for (std::size_t i = 0; i < N; ++i) r[i] = Interval(b.lower[i], b.upper[i]);
    return r;
}

template <std::size_t N>
Box to_box(const IVec<N>& v) {
    Box b;
    b.lower.resize(N);
    b.upper.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        b.lower[i] = v[i].lo();
        b.upper[i] = v[i].hi();
    }
    return b;
}

/// Value, state Jacobian and time partial of the drift over a box and time interval.
template <class ClosedLoop, std::size_t N = ClosedLoop::kStateDim>
void drift_with_derivatives(const ClosedLoop& cl, const IVec<N>& x, const Interval& t, IVec<N>& value,
                            IMat<N>& jac, IVec<N>& time_partial) {
    using D = Dual<Interval, N + 1>;
    std::array<D, N> xd;
    for (std::size_t i = 0; i < N; ++i) xd[i] = D::variable(x[i], i);
    const D td = D::variable(t, N);
    const auto f = cl.template drift<D>(xd, td);
    for (std::size_t i = 0; i < N; ++i) {
        value[i] = f[i].v;
        for (std::size_t j = 0; j < N; ++j) jac[i][j] = f[i].d[j];
        time_partial[i] = f[i].d[N];
    }
}

/// H[i][j][k] encloses d2 f0_i / dx_j dx_k over the box at a fixed time.
template <class ClosedLoop, std::size_t N = ClosedLoop::kStateDim>
std::array<IMat<N>, N> drift_hessian(const ClosedLoop& cl, const IVec<N>& x, double t) {
    using Inner = Dual<Interval, N>;
    using D = Dual<Inner, N>;
    std::array<D, N> xd;
    for (std::size_t i = 0; i < N; ++i) xd[i] = D::variable(Inner::variable(x[i], i), i);
    const auto f = cl.template drift<D>(xd, D(t));
    std::array<IMat<N>, N> h;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            for (std::size_t k = 0; k < N; ++k) h[i][j][k] = f[i].d[j].d[k];
    return h;
}

/// Zonotope c + sum_j xi_j g_j, |xi_j| <= 1.
template <std::size_t N>
struct Zonotope {
    std::array<double, N> center{};
    std::vector<std::array<double, N>> generators;

    /// Outward-rounded interval hull.
    IVec<N> hull() const {
        IVec<N> r;
        for (std::size_t i = 0; i < N; ++i) {
            double rad = 0.0;
            for (const auto& g : generators) rad = up(rad + std::fabs(g[i]));
            r[i] = Interval::raw(down(center[i] - rad), up(center[i] + rad));
        }
        return r;
    }

    void add_box(const std::array<double, N>& radius) {
        for (std::size_t i = 0; i < N; ++i) {
            if (radius[i] > 0.0) {
                std::array<double, N> g{};
                g[i] = radius[i];
                generators.push_back(g);
            }
        }
    }

    /// Girard reduction: boxes the generators with the smallest l1 - linf
    /// norm until at most max_generators remain.
    void reduce(std::size_t max_generators) {
        if (generators.size() <= max_generators || max_generators < N) return;
        const std::size_t merge = generators.size() - max_generators + N;
        std::vector<std::pair<double, std::size_t>> key(generators.size());
        for (std::size_t j = 0; j < generators.size(); ++j) {
            double l1 = 0.0;
            double linf = 0.0;
            for (double v : generators[j]) {
                l1 += std::fabs(v);
                linf = std::max(linf, std::fabs(v));
            }
            key[j] = {l1 - linf, j};
        }
        std::sort(key.begin(), key.end());
        std::array<double, N> box{};
        std::vector<bool> drop(generators.size(), false);
        for (std::size_t m = 0; m < merge; ++m) {
            const auto& g = generators[key[m].second];
            for (std::size_t i = 0; i < N; ++i) box[i] = up(box[i] + std::fabs(g[i]));
            drop[key[m].second] = true;
        }
        std::vector<std::array<double, N>> kept;
        kept.reserve(max_generators);
        for (std::size_t j = 0; j < generators.size(); ++j) {
            if (!drop[j]) kept.push_back(generators[j]);
        }
        generators = std::move(kept);
        add_box(box);
    }
};

/// Radius of v about its midpoint, rounded up.
inline double radius_up(const Interval& v, double m) { return up(std::max(v.hi() - m, m - v.lo())); }

}  // namespace detail

/// Sound box funnel of a closed loop from inlet under every disturbance in ws.
///
/// Throws SoundnessError when a step's a-priori enclosure cannot be certified
/// and DivergenceError when an enclosure leaves the working box.
template <class ClosedLoop>
Funnel compute_funnel(const ClosedLoop& cl, const Box& inlet, const DisturbanceSet& ws, double horizon,
                      const FunnelOptions& opt, std::size_t primitive_id = 0, SystemKind kind = SystemKind::kGeneric) {
    constexpr std::size_t N = ClosedLoop::kStateDim;
    constexpr std::size_t M = ClosedLoop::kDisturbanceDim;
    using IV = detail::IVec<N>;
    using IM = detail::IMat<N>;

    if (inlet.dim() != N) throw ContractViolation("compute_funnel: inlet dimension mismatch");
    if (ws.dim() != M) throw ContractViolation("compute_funnel: disturbance dimension mismatch");
    for (std::size_t i = 0; i < N; ++i) {
        if (!(inlet.lower[i] <= inlet.upper[i])) throw ContractViolation("compute_funnel: empty inlet");
    }
    const std::size_t grid_steps = step_count(horizon, opt.dt_f);
    if (opt.substeps < 1) throw ContractViolation("compute_funnel: substeps must be >= 1");
    if (opt.zonotope_order < 2) throw ContractViolation("compute_funnel: zonotope_order must be >= 2");
    const auto sub = static_cast<std::size_t>(opt.substeps);
    const std::size_t steps = grid_steps * sub;
    const double h = opt.dt_f / static_cast<double>(sub);
    const std::size_t max_generators = static_cast<std::size_t>(opt.zonotope_order) * N;

    Box working = inlet;
    for (std::size_t i = 0; i < N; ++i) {
        working.lower[i] -= opt.working_margin;
        working.upper[i] += opt.working_margin;
    }
    const IV work = detail::to_ivec<N>(working);

    // Disturbance contribution G W as a box.
    constexpr auto G = ClosedLoop::disturbance_gain();
    IV gw;
    for (std::size_t i = 0; i < N; ++i) {
        Interval acc(0.0);
        for (std::size_t j = 0; j < M; ++j) {
            if (G[i][j] != 0.0) acc += G[i][j] * Interval(ws.lower()[j], ws.upper()[j]);
        }
        gw[i] = acc;
    }

    Funnel funnel;
    funnel.primitive_id = primitive_id;
    funnel.kind = kind;
    funnel.dt_f = opt.dt_f;
    funnel.times.reserve(grid_steps + 1);
    funnel.boxes.reserve(grid_steps + 1);
    funnel.times.push_back(0.0);
    funnel.boxes.push_back(inlet);

    IV xbox = detail::to_ivec<N>(inlet);
    detail::Zonotope<N> z;
    {
        std::array<double, N> r{};
        for (std::size_t i = 0; i < N; ++i) {
            z.center[i] = xbox[i].mid();
            r[i] = detail::radius_up(xbox[i], z.center[i]);
        }
        z.add_box(r);
    }

    auto fail_step = [](const char* what, std::size_t k) {
        std::ostringstream os;
        os << what << " at step " << k;
        return os.str();
    };
    const Interval hh(h);
    const Interval half_h = Interval(0.5) * hh;

    for (std::size_t k = 0; k < steps; ++k) {
        const double t0 = static_cast<double>(k) * h;
        const double t1 = static_cast<double>(k + 1) * h;
        const Interval tspan(t0, t1);
        const Interval hspan(0.0, h);

        // A-priori enclosure over [t0, t1] by Picard self-mapping.
        IV B;
        {
            IV f0;
            IM unused_j;
            IV unused_t;
            detail::drift_with_derivatives(cl, xbox, tspan, f0, unused_j, unused_t);
            std::array<double, N> r;
            for (std::size_t i = 0; i < N; ++i) {
                r[i] = h * (f0[i] + gw[i]).mag() + opt.picard_margin * (1.0 + xbox[i].mag() * 1e-6);
            }
            bool certified = false;
            for (int attempt = 0; attempt <= opt.picard_retries && !certified; ++attempt) {
                IV cand;
                for (std::size_t i = 0; i < N; ++i) {
                    cand[i] = Interval::raw(detail::down(xbox[i].lo() - r[i]), detail::up(xbox[i].hi() + r[i]));
                }
                IV fc;
                try {
                    IM jj;
                    IV tt;
                    detail::drift_with_derivatives(cl, cand, tspan, fc, jj, tt);
                } catch (const std::domain_error&) {
                    for (auto& ri : r) ri *= 2.0;
                    continue;
                }
                IV image;
                bool inside = true;
                for (std::size_t i = 0; i < N; ++i) {
                    image[i] = xbox[i] + hspan * (fc[i] + gw[i]);
                    inside = inside && image[i].subset_of(cand[i]);
                }
                if (inside) {
                    B = image;
                    certified = true;
                } else {
                    // Grow each radius to cover its image with slack; coupled
                    // coordinates then settle within a few rounds.
                    for (std::size_t i = 0; i < N; ++i) {
                        const double need = std::max(xbox[i].lo() - image[i].lo(), image[i].hi() - xbox[i].hi());
                        r[i] = std::max(2.0 * r[i], 1.5 * need);
                    }
                }
            }
            if (!certified) {
                throw SoundnessError(fail_step("compute_funnel: no self-mapping a-priori enclosure", k));
            }
            for (std::size_t i = 0; i < N; ++i) {
                if (!B[i].subset_of(work[i])) {
                    throw DivergenceError(fail_step("compute_funnel: enclosure left the working box", k));
                }
            }
        }

        // Additive terms: h G W + (h^2 / 2) D with D = Jf0 (f0 + G w) + df0/dt over B.
        IV rem;
        {
            IV fB;
            IM JB;
            IV dtB;
            detail::drift_with_derivatives(cl, B, tspan, fB, JB, dtB);
            const Interval half_h2 = half_h * hh;
            for (std::size_t i = 0; i < N; ++i) {
                Interval d = dtB[i];
                for (std::size_t j = 0; j < N; ++j) d += JB[i][j] * (fB[j] + gw[j]);
                rem[i] = hh * gw[i] + half_h2 * d;
            }
        }

        // Euler map phi(x) = x + h f0(x, t0) about c: point Jacobian plus a
        // Hessian remainder, or the mean-value form where the Hessian does not
        // exist (a saturation limit inside the box).
        IV phi_c;
        IM Mphi;
        {
            IV cpt;
            for (std::size_t i = 0; i < N; ++i) cpt[i] = Interval(z.center[i]);
            IV fc;
            IM jc;
            IV tc;
            detail::drift_with_derivatives(cl, cpt, Interval(t0), fc, jc, tc);
            for (std::size_t i = 0; i < N; ++i) phi_c[i] = cpt[i] + hh * fc[i];

            bool second_order = opt.second_order;
            if (second_order) {
                IV around;
                IV delta;
                for (std::size_t i = 0; i < N; ++i) {
                    around[i] = hull(xbox[i], cpt[i]);
                    delta[i] = xbox[i] - z.center[i];
                }
                std::array<IM, N> H;
                try {
                    H = detail::drift_hessian(cl, around, t0);
                } catch (const std::domain_error&) {
                    second_order = false;
                }
                if (second_order) {
                    for (std::size_t i = 0; i < N; ++i) {
                        Interval q(0.0);
                        for (std::size_t j = 0; j < N; ++j) {
                            q += H[i][j][j] * sqr(delta[j]);
                            for (std::size_t l = j + 1; l < N; ++l) {
                                q += Interval(2.0) * H[i][j][l] * (delta[j] * delta[l]);
                            }
                        }
                        rem[i] += half_h * q;
                        for (std::size_t j = 0; j < N; ++j) {
                            Mphi[i][j] = (i == j ? Interval(1.0) : Interval(0.0)) + hh * jc[i][j];
                        }
                    }
                }
            }
            if (!second_order) {
                IV fX;
                IM JX;
                IV dtX;
                detail::drift_with_derivatives(cl, xbox, Interval(t0), fX, JX, dtX);
                for (std::size_t i = 0; i < N; ++i) {
                    for (std::size_t j = 0; j < N; ++j) {
                        Mphi[i][j] = (i == j ? Interval(1.0) : Interval(0.0)) + hh * JX[i][j];
                    }
                }
            }
        }

        // Map generators; interval width of each image goes to an error box.
        std::array<double, N> err{};
        for (auto& g : z.generators) {
            std::array<double, N> ng;
            for (std::size_t i = 0; i < N; ++i) {
                Interval acc(0.0);
                for (std::size_t j = 0; j < N; ++j) {
                    if (g[j] != 0.0) acc += Mphi[i][j] * g[j];
                }
                ng[i] = acc.mid();
                err[i] = detail::up(err[i] + detail::radius_up(acc, ng[i]));
            }
            g = ng;
        }
        for (std::size_t i = 0; i < N; ++i) {
            const Interval shift = phi_c[i] + rem[i];
            z.center[i] = shift.mid();
            err[i] = detail::up(err[i] + detail::radius_up(shift, z.center[i]));
        }
        z.add_box(err);
        z.reduce(max_generators);

        const IV zh = z.hull();
        IV x_next;
        for (std::size_t i = 0; i < N; ++i) {
            if (!zh[i].is_finite()) {
                throw DivergenceError(fail_step("compute_funnel: non-finite enclosure", k));
            }
            try {
                x_next[i] = intersect(zh[i], B[i]);
            } catch (const std::domain_error&) {
                throw SoundnessError(fail_step("compute_funnel: inconsistent enclosures", k));
            }
            if (!x_next[i].subset_of(work[i])) {
                throw DivergenceError(fail_step("compute_funnel: enclosure left the working box", k));
            }
        }
        xbox = x_next;
        if ((k + 1) % sub == 0) {
            funnel.times.push_back(static_cast<double>((k + 1) / sub) * opt.dt_f);
            funnel.boxes.push_back(detail::to_box<N>(xbox));
        }
    }
    return funnel;
}

/// Falsification: samples x0 uniformly in the inlet and piecewise-constant
/// disturbances, integrates with RK4 at dt_f / substeps and compares with the
/// funnel at its grid times.
template <class ClosedLoop>
FunnelViolationReport verify_funnel_monte_carlo(const Funnel& f, const ClosedLoop& cl, const DisturbanceSet& ws,
                                                std::size_t n_samples, std::uint64_t seed,
                                                double segment_duration = 0.1, std::size_t substeps = 10) {
    constexpr std::size_t N = ClosedLoop::kStateDim;
    if (n_samples < 1) throw ContractViolation("verify_funnel_monte_carlo: n_samples must be >= 1");
    if (f.dim() != N) throw ContractViolation("verify_funnel_monte_carlo: dimension mismatch");
    const double h = f.dt_f / static_cast<double>(substeps);
    const std::size_t grid = f.boxes.size();

    FunnelViolationReport report;
    report.samples = n_samples;
    report.worst_margin = std::numeric_limits<double>::infinity();
    std::vector<double> xv(N);
    for (std::size_t s = 0; s < n_samples; ++s) {
        Rng rng(derive_seed(seed, {s, 0}));
        std::array<double, N> x;
        for (std::size_t i = 0; i < N; ++i) {
            const double lo = f.inlet().lower[i];
            const double hi = f.inlet().upper[i];
            x[i] = lo == hi ? lo : uniform(rng, lo, hi);
        }
        const DisturbanceSignal w = sample_disturbance(ws, f.duration(), segment_duration, derive_seed(seed, {s, 1}));
        bool violated = false;
        for (std::size_t g = 0; g < grid; ++g) {
            if (g > 0) {
                for (std::size_t sub = 0; sub < substeps; ++sub) {
                    const std::size_t step = (g - 1) * substeps + sub;
                    const double t = static_cast<double>(step) * h;
                    const auto& wk = w.at(t + 0.5 * h);
                    x = rk4_step<N>([&](const std::array<double, N>& y, double tt) { return closed_loop_field(cl, y, tt, wk); },
                                    x, t, h);
                }
            }
            for (std::size_t i = 0; i < N; ++i) xv[i] = x[i];
            const double m = f.boxes[g].margin(xv);
            report.worst_margin = std::min(report.worst_margin, m);
            if (m < 0.0) {
                ++report.violating_points;
                violated = true;
            }
        }
        if (violated) ++report.violating_samples;
    }
    return report;
}

struct FunnelLibraryOptions {
    FunnelOptions funnel;
    /// Starting inlet half-widths (one per state coordinate).
    std::vector<double> initial_half_widths;
    double growth = 1.05;
    int max_iterations = 40;
};

/// Computes one funnel per primitive with inlets centred at each nominal start
/// and a shared half-width vector grown until every outlet fits every inlet.
FunnelLibrary build_funnel_library(const PrimitiveLibrary& lib, const DisturbanceSet& ws,
                                   const FunnelLibraryOptions& options);

/// Degenerate funnels made of the nominal states (no-funnel ablation); keeps
/// the composability matrix of the certified library.
FunnelLibrary nominal_funnel_library(const PrimitiveLibrary& lib, const FunnelLibrary& certified);

/// Computes the funnel of one library primitive from a given inlet.
Funnel compute_primitive_funnel(const PrimitiveLibrary& lib, std::size_t id, const Box& inlet,
                                const DisturbanceSet& ws, const FunnelOptions& options);

/// Monte-Carlo falsification of one library funnel.
FunnelViolationReport verify_library_funnel(const PrimitiveLibrary& lib, const Funnel& f, const DisturbanceSet& ws,
                                            std::size_t n_samples, std::uint64_t seed, double segment_duration = 0.1);

}  // namespace funnelpac
