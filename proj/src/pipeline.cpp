#include "funnelpac/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "funnelpac/errors.hpp"
#include "funnelpac/io.hpp"
#include "funnelpac/parallel.hpp"
#include "funnelpac/rng.hpp"

namespace funnelpac {

namespace fs = std::filesystem;

CostEstimate estimate(const std::vector<double>& samples) {
    CostEstimate e;
    e.n = samples.size();
    if (e.n == 0) return e;
    double s = 0.0;
    for (double v : samples) s += v;
    e.mean = s / static_cast<double>(e.n);
    if (e.n > 1) {
        double ss = 0.0;
        for (double v : samples) ss += (v - e.mean) * (v - e.mean);
        e.standard_error = std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
    }
    return e;
}

namespace {

std::size_t sample_index(const std::vector<double>& p, std::uint64_t seed) {
    Rng rng(seed);
    const double u = uniform(rng, 0.0, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return i;
    }
    // Rounding left u above the total: take the last policy with mass.
    for (std::size_t i = p.size(); i-- > 0;) {
        if (p[i] > 0.0) return i;
    }
    throw ContractViolation("sample_index: posterior has no mass");
}

}  // namespace

DeploymentResult evaluate_deployment(const std::vector<Environment>& envs, const std::vector<std::vector<double>>& thetas,
                                     const std::vector<double>& posterior, const Architecture& arch,
                                     const PlanningContext& ctx, const DisturbanceSet& ws,
                                     const DeploymentOptions& options, std::uint64_t seed) {
    if (thetas.size() != posterior.size() || thetas.empty()) {
        throw ContractViolation("evaluate_deployment: posterior/policy count mismatch");
    }
    if (options.disturbance_draws < 1) throw ContractViolation("evaluate_deployment: disturbance_draws >= 1");
    const auto draws = static_cast<std::size_t>(options.disturbance_draws);
    const std::size_t n = envs.size();
    std::vector<double> funnel(n), undisturbed(n), disturbed(n * draws);
    const Box& x0box = ctx.initial_box;
    parallel_for(n, options.workers, [&](std::size_t l) {
        const std::size_t i = sample_index(posterior, derive_seed(seed, {l, 0}));
        const PolicyParams policy{arch, thetas[i]};
        funnel[l] = run_funnel_episode(envs[l], policy, ctx).cost.cost;
        undisturbed[l] = rollout_cost(envs[l], policy, ctx, x0box.center(), DisturbanceSignal::zero(ws.dim())).cost;
        double horizon = 0.0;
        for (const auto& p : ctx.primitives->primitives) horizon = std::max(horizon, p.duration());
        horizon *= static_cast<double>(horizon_of(envs[l]));
        for (std::size_t d = 0; d < draws; ++d) {
            Rng rng(derive_seed(seed, {l, d + 1, 0}));
            std::vector<double> x0(x0box.dim());
            for (std::size_t k = 0; k < x0.size(); ++k) {
                x0[k] = x0box.lower[k] == x0box.upper[k] ? x0box.lower[k] : uniform(rng, x0box.lower[k], x0box.upper[k]);
            }
            const auto w = sample_disturbance(ws, horizon, options.segment_duration, derive_seed(seed, {l, d + 1, 1}));
            disturbed[l * draws + d] = rollout_cost(envs[l], policy, ctx, x0, w).cost;
        }
    });
    return DeploymentResult{estimate(funnel), estimate(undisturbed), estimate(disturbed)};
}

namespace {

Json estimate_json(const CostEstimate& e) {
    return Json{{"mean", e.mean}, {"standard_error", e.standard_error}, {"n", e.n}};
}

}  // namespace

Json to_json(const EvaluationReport& r) {
    return Json{{"arm", r.arm},
                {"C_PAC", r.c_pac},
                {"C_S", r.c_s},
                {"funnel_cost", estimate_json(r.result.funnel)},
                {"cost_no_disturbance", estimate_json(r.result.undisturbed)},
                {"cost_with_disturbance", estimate_json(r.result.disturbed)}};
}

std::uint64_t dataset_seed(std::uint64_t root, const std::string& role) {
    if (role == "prior") return derive_seed(root, {10});
    if (role == "cert") return derive_seed(root, {11});
    if (role == "test") return derive_seed(root, {12});
    throw ContractViolation("unknown dataset role: " + role + " (expected prior, cert or test)");
}

std::vector<Environment> sample_dataset(EnvironmentKind kind, std::size_t count, std::uint64_t seed,
                                        const EnvironmentConfig& config) {
    std::vector<Environment> envs;
    envs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) envs.push_back(sample_environment(kind, derive_seed(seed, {i}), config));
    return envs;
}

namespace {

std::string path_in(const Config& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

std::string arm_file(const std::string& stem, const std::string& arm) { return stem + "_" + arm + ".json"; }

/// Config without the keys that do not influence artifact contents.
Json config_snapshot(const Config& c) {
    Json j = config_to_json(c);
    j.erase("workers");
    j.erase("out");
    return j;
}

class Stage {
public:
    Stage(const Config& c, std::string name) : c_(c), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}

    std::string manifest_name() const { return "manifest_" + name_ + ".json"; }

    std::string input(const std::string& name) {
        const std::string p = path_in(c_, name);
        if (!fs::exists(p)) throw ContractViolation("missing upstream artifact " + p);
        const std::string h = sha256_file(p);
        inputs_[name] = h;
        return h;
    }

    void write(const std::string& name, const std::string& type, Json doc) {
        doc["manifest"] = manifest_name();
        Json in = Json::object();
        for (const auto& [k, v] : inputs_) in[k] = v;
        doc["inputs"] = in;
        write_artifact(path_in(c_, name), type, std::move(doc));
        outputs_.push_back(name);
    }

    void finish() {
        Json in = Json::object();
        for (const auto& [k, v] : inputs_) in[k] = v;
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_artifact(path_in(c_, manifest_name()), "run_manifest",
                       Json{{"stage", name_},
                            {"config", config_to_json(c_)},
                            {"inputs", in},
                            {"outputs", outputs_},
                            {"seeds", {{"root", c_.seed}}},
                            {"wall_clock_seconds", secs}});
    }

private:
    const Config& c_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
    std::map<std::string, std::string> inputs_;
    std::vector<std::string> outputs_;
};

/// Every input hash recorded by an upstream artifact must still match the file on disk.
void verify_recorded_inputs(const Config& c, const Json& artifact, const std::string& artifact_name) {
    if (!artifact.contains("inputs")) return;
    for (const auto& [name, hash] : artifact.at("inputs").items()) {
        const std::string p = path_in(c, name);
        if (!fs::exists(p)) throw StaleArtifactError(artifact_name + " depends on missing " + name);
        if (sha256_file(p) != hash.get<std::string>()) {
            throw StaleArtifactError(artifact_name + " is stale: " + name + " changed since it was produced");
        }
    }
}

std::set<std::uint64_t> seed_set(const std::vector<Environment>& envs) {
    std::set<std::uint64_t> s;
    for (const auto& e : envs) s.insert(std::visit([](const auto& x) { return x.seed; }, e));
    return s;
}

void check_disjoint(const std::vector<Environment>& a, const std::vector<Environment>& b, const std::string& what) {
    const auto sa = seed_set(a);
    for (const auto& e : b) {
        if (sa.count(std::visit([](const auto& x) { return x.seed; }, e)) != 0) {
            throw ContractViolation("datasets overlap: " + what);
        }
    }
}

void check_kind(const std::vector<Environment>& envs, const LoadedLibrary& lib) {
    for (const auto& e : envs) {
        if (system_for(kind_of(e)) != lib.certified.kind) {
            throw ContractViolation("dataset environment kind does not match the library system");
        }
    }
}

}  // namespace

LoadedLibrary load_library(const std::string& run_dir) {
    const std::string p = (fs::path(run_dir) / "library.json").string();
    const Json doc = read_artifact(p, "funnel_library");
    LoadedLibrary out;
    out.library_config = config_from_json(doc.at("library_config"));
    out.primitives = build_primitive_library(out.library_config);
    out.certified = funnel_library_from_json(doc.at("funnel_library"));
    if (out.certified.size() != out.primitives.size()) throw StaleArtifactError(p + ": primitive count mismatch");
    out.nominal = nominal_funnel_library(out.primitives, out.certified);
    out.hash = sha256_file(p);
    return out;
}

std::vector<Environment> load_dataset(const std::string& path, std::string* hash) {
    const Json doc = read_artifact(path, "environment_dataset");
    std::vector<Environment> envs;
    for (const auto& e : doc.at("environments")) envs.push_back(environment_from_json(e));
    if (envs.size() != doc.at("count").get<std::size_t>()) throw StaleArtifactError(path + ": count mismatch");
    if (hash != nullptr) *hash = sha256_file(path);
    return envs;
}

PlanningContext planning_context(const LoadedLibrary& lib, const std::string& arm, double initial_box_fraction,
                                 int rollout_substeps) {
    if (arm != "funnel" && arm != "nominal") throw ContractViolation("arm must be funnel or nominal");
    PlanningContext ctx;
    ctx.primitives = &lib.primitives;
    ctx.certified = &lib.certified;
    ctx.funnels = arm == "funnel" ? &lib.certified : &lib.nominal;
    ctx.initial_box = initial_uncertainty_box(lib.primitives, lib.certified, initial_box_fraction);
    ctx.rollout_substeps = rollout_substeps;
    return ctx;
}

void cmd_build_library(const Config& c) {
    Stage stage(c, "build-library");
    const PrimitiveLibrary prims = build_primitive_library(c);
    const DisturbanceSet ws = disturbance_set(c);
    const FunnelLibrary fl = build_funnel_library(prims, ws, c.funnel_library);

    Json primitives = Json::array();
    for (const auto& p : prims.primitives) {
        primitives.push_back(Json{{"id", p.id},
                                  {"delta_x", p.delta_x()},
                                  {"delta_y", p.delta_y()},
                                  {"duration", p.duration()},
                                  {"steepness", p.geometry.steepness}});
    }
    std::vector<double> half;
    for (double w : fl.funnels.front().inlet().widths()) half.push_back(0.5 * w);
    stage.write("library.json", "funnel_library",
                Json{{"library_config", config_snapshot(c)},
                     {"primitives", primitives},
                     {"inlet_half_widths", half},
                     {"all_pairs_composable", fl.all_pairs_composable()},
                     {"funnel_library", to_json(fl)}});
    stage.input("library.json");

    std::vector<FunnelViolationReport> reports(fl.size());
    parallel_for(fl.size(), c.workers, [&](std::size_t j) {
        reports[j] = verify_library_funnel(prims, fl.funnels[j], ws, c.verify_samples, derive_seed(c.seed, {20, j}),
                                           c.verify_segment);
    });
    Json rep = Json::array();
    std::size_t violations = 0;
    for (std::size_t j = 0; j < reports.size(); ++j) {
        Json r = to_json(reports[j]);
        r["primitive_id"] = j;
        rep.push_back(r);
        violations += reports[j].violating_samples;
    }
    stage.write("verification.json", "verification_report", Json{{"reports", rep}, {"total_violations", violations}});
    stage.finish();
    if (violations > 0) {
        throw SoundnessError("Monte-Carlo verification found " + std::to_string(violations) + " violating samples");
    }
}

FunnelViolationReport cmd_verify_funnels(const Config& c, std::size_t samples) {
    Stage stage(c, "verify-funnels");
    stage.input("library.json");
    const LoadedLibrary lib = load_library(c.out);
    const DisturbanceSet ws = disturbance_set(lib.library_config);
    std::vector<FunnelViolationReport> reports(lib.certified.size());
    parallel_for(reports.size(), c.workers, [&](std::size_t j) {
        reports[j] = verify_library_funnel(lib.primitives, lib.certified.funnels[j], ws, samples,
                                           derive_seed(c.seed, {21, j}), lib.library_config.verify_segment);
    });
    FunnelViolationReport total;
    total.worst_margin = std::numeric_limits<double>::infinity();
    Json rep = Json::array();
    for (std::size_t j = 0; j < reports.size(); ++j) {
        Json r = to_json(reports[j]);
        r["primitive_id"] = j;
        rep.push_back(r);
        total.samples += reports[j].samples;
        total.violating_samples += reports[j].violating_samples;
        total.violating_points += reports[j].violating_points;
        total.worst_margin = std::min(total.worst_margin, reports[j].worst_margin);
    }
    stage.write("verify_funnels.json", "verification_report",
                Json{{"reports", rep}, {"total_violations", total.violating_samples}});
    stage.finish();
    return total;
}

void cmd_sample_envs(const Config& c, const std::string& role, std::size_t count, std::uint64_t seed) {
    Stage stage(c, "sample-envs-" + role);
    const auto envs = sample_dataset(c.environment, count, seed, c.env);
    Json list = Json::array();
    std::vector<std::uint64_t> seeds;
    for (const auto& e : envs) {
        list.push_back(to_json(e));
        seeds.push_back(std::visit([](const auto& x) { return x.seed; }, e));
    }
    stage.write("envs_" + role + ".json", "environment_dataset",
                Json{{"role", role},
                     {"kind", to_string(c.environment)},
                     {"root_seed", seed},
                     {"count", count},
                     {"env_seeds", seeds},
                     {"environments", list}});
    stage.finish();
}

void cmd_sample_all(const Config& c) {
    cmd_sample_envs(c, "prior", c.prior_env_count(), dataset_seed(c.seed, "prior"));
    cmd_sample_envs(c, "cert", c.cert_env_count(), dataset_seed(c.seed, "cert"));
    cmd_sample_envs(c, "test", c.test_envs, dataset_seed(c.seed, "test"));
}

void cmd_train_prior(const Config& c) {
    Stage stage(c, "train-prior_" + c.arm);
    stage.input("library.json");
    stage.input("envs_prior.json");
    const LoadedLibrary lib = load_library(c.out);
    const auto envs = load_dataset(path_in(c, "envs_prior.json"));
    check_kind(envs, lib);
    if (fs::exists(path_in(c, "envs_cert.json"))) {
        check_disjoint(envs, load_dataset(path_in(c, "envs_cert.json")), "prior and certification sets");
    }
    const PlanningContext ctx = planning_context(lib, c.arm, c.initial_box_fraction, c.rollout_substeps);
    const Architecture arch = default_architecture(c.environment);
    const GaussianPolicyDist init =
        initial_prior(arch.parameter_count(), derive_seed(c.seed, {30}), c.init_std, c.init_sigma);
    TrainOptions opt = c.train;
    opt.workers = c.workers;
    const TrainResult r = train_prior(envs, arch, ctx, opt, derive_seed(c.seed, {31}), &init);
    stage.write(arm_file("prior", c.arm), "prior",
                Json{{"arm", c.arm},
                     {"architecture", to_json(arch)},
                     {"prior", to_json(r.prior)},
                     {"cost_log", r.cost_log},
                     {"train", config_snapshot(c).at("train")}});
    stage.finish();
}

void cmd_certify(const Config& c) {
    Stage stage(c, "certify_" + c.arm);
    const std::string prior_name = arm_file("prior", c.arm);
    stage.input(prior_name);
    stage.input("library.json");
    const std::string cert_hash = stage.input("envs_cert.json");
    const Json prior_doc = read_artifact(path_in(c, prior_name), "prior");
    verify_recorded_inputs(c, prior_doc, prior_name);
    const LoadedLibrary lib = load_library(c.out);
    const auto envs = load_dataset(path_in(c, "envs_cert.json"));
    check_kind(envs, lib);
    check_disjoint(load_dataset(path_in(c, "envs_prior.json")), envs, "prior and certification sets");
    const Architecture arch = architecture_from_json(prior_doc.at("architecture"));
    const GaussianPolicyDist prior = gaussian_from_json(prior_doc.at("prior"));
    const PlanningContext ctx = planning_context(lib, c.arm, c.initial_box_fraction, c.rollout_substeps);

    const CostMatrix cm = build_cost_matrix(prior, c.m_policies, envs, arch, ctx, derive_seed(c.seed, {40}), c.workers);
    PosteriorResult pr = optimize_posterior(cm, c.delta);
    pr.certificate.posterior_ref = arm_file("posterior", c.arm);
    pr.certificate.dataset_hash = cert_hash;

    stage.write(arm_file("cost_matrix", c.arm), "cost_matrix", to_json(cm));
    Json policies = Json::array();
    for (std::size_t i = 0; i < cm.m(); ++i) {
        policies.push_back(Json{{"policy", to_json(PolicyParams{arch, cm.thetas[i]})},
                                {"probability", pr.posterior.p[i]}});
    }
    stage.write(arm_file("posterior", c.arm), "posterior",
                Json{{"arm", c.arm}, {"posterior", to_json(pr.posterior)}, {"policies", policies}});
    stage.write(arm_file("certificate", c.arm), "certificate",
                Json{{"arm", c.arm}, {"certificate", to_json(pr.certificate)}});
    stage.finish();
}

EvaluationReport cmd_evaluate(const Config& c) {
    Stage stage(c, "evaluate_" + c.arm);
    const std::string cert_name = arm_file("certificate", c.arm);
    const std::string post_name = arm_file("posterior", c.arm);
    stage.input(cert_name);
    stage.input(post_name);
    stage.input("library.json");
    stage.input("envs_test.json");
    const Json cert_doc = read_artifact(path_in(c, cert_name), "certificate");
    verify_recorded_inputs(c, cert_doc, cert_name);
    const Json post_doc = read_artifact(path_in(c, post_name), "posterior");
    verify_recorded_inputs(c, post_doc, post_name);
    const PacCertificate cert = certificate_from_json(cert_doc.at("certificate"));
    if (sha256_file(path_in(c, "envs_cert.json")) != cert.dataset_hash) {
        throw StaleArtifactError(cert_name + " was issued for a different certification set");
    }

    const LoadedLibrary lib = load_library(c.out);
    const auto envs = load_dataset(path_in(c, "envs_test.json"));
    check_kind(envs, lib);
    check_disjoint(load_dataset(path_in(c, "envs_cert.json")), envs, "certification and test sets");
    check_disjoint(load_dataset(path_in(c, "envs_prior.json")), envs, "prior and test sets");
    const PlanningContext ctx = planning_context(lib, c.arm, c.initial_box_fraction, c.rollout_substeps);

    std::vector<std::vector<double>> thetas;
    std::vector<double> p;
    Architecture arch;
    for (const auto& entry : post_doc.at("policies")) {
        const PolicyParams policy = policy_from_json(entry.at("policy"));
        arch = policy.architecture;
        thetas.push_back(policy.theta);
        p.push_back(entry.at("probability").get<double>());
    }
    DeploymentOptions opt{c.disturbance_draws, c.disturbance_segment, c.workers};
    EvaluationReport report;
    report.arm = c.arm;
    report.c_pac = cert.c_pac;
    report.c_s = cert.c_s;
    report.result = evaluate_deployment(envs, thetas, p, arch, ctx, disturbance_set(lib.library_config), opt,
                                        derive_seed(c.seed, {50}));
    stage.write(arm_file("report", c.arm), "evaluation_report", to_json(report));
    stage.finish();
    return report;
}

void cmd_plot_data(const Config& c) {
    Stage stage(c, "plot-data");
    stage.input("library.json");
    const LoadedLibrary lib = load_library(c.out);
    const fs::path dir = fs::path(c.out) / "plots";
    fs::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(dir / name);
        if (!f) throw Error("cannot write " + (dir / name).string());
        f << std::setprecision(17);
        return f;
    };
    for (const auto& fn : lib.certified.funnels) {
        auto f = open("funnel_" + std::to_string(fn.primitive_id) + ".csv");
        f << "t";
        for (std::size_t i = 0; i < fn.dim(); ++i) f << ",lower_" << i;
        for (std::size_t i = 0; i < fn.dim(); ++i) f << ",upper_" << i;
        f << '\n';
        for (std::size_t g = 0; g < fn.boxes.size(); ++g) {
            f << fn.times[g];
            for (double v : fn.boxes[g].lower) f << ',' << v;
            for (double v : fn.boxes[g].upper) f << ',' << v;
            f << '\n';
        }
    }
    for (const std::string arm : {"funnel", "nominal"}) {
        const std::string prior_name = arm_file("prior", arm);
        if (fs::exists(path_in(c, prior_name))) {
            stage.input(prior_name);
            const Json doc = read_artifact(path_in(c, prior_name), "prior");
            auto f = open("training_" + arm + ".csv");
            f << "iteration,cost\n";
            const auto log = doc.at("cost_log").get<std::vector<double>>();
            for (std::size_t i = 0; i < log.size(); ++i) f << i << ',' << log[i] << '\n';
        }
        const std::string report_name = arm_file("report", arm);
        if (fs::exists(path_in(c, report_name))) {
            stage.input(report_name);
            const Json doc = read_artifact(path_in(c, report_name), "evaluation_report");
            auto f = open("bars_" + arm + ".csv");
            f << "bound,no_dist,dist\n";
            f << doc.at("C_PAC").get<double>() << ',' << doc.at("cost_no_disturbance").at("mean").get<double>() << ','
              << doc.at("cost_with_disturbance").at("mean").get<double>() << '\n';
        }
    }
    stage.finish();
}

}  // namespace funnelpac
