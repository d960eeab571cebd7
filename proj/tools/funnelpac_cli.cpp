// funnelpac command-line pipeline.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "funnelpac/config.hpp"
#include "funnelpac/errors.hpp"
#include "funnelpac/pipeline.hpp"

using namespace funnelpac;

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out;
    std::optional<std::string> arm;
    std::optional<std::string> environment;
};

Config resolve(const Flags& f) {
    Config c = f.config.empty() ? Config{} : load_config(f.config);
    if (f.seed) c.seed = *f.seed;
    if (f.workers) c.workers = *f.workers;
    if (f.out) c.out = *f.out;
    if (f.arm) c.arm = *f.arm;
    if (f.environment) c.environment = environment_kind_from_string(*f.environment);
    if (c.workers < 1) throw ContractViolation("--workers must be >= 1");
    return c;
}

void print_estimate(const char* name, const CostEstimate& e) {
    std::printf("  %-22s %.6f  (se %.6f, n %zu)\n", name, e.mean, e.standard_error, e.n);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Funnel-library motion planning with PAC-Bayes certificates"};
    app.require_subcommand(1);
    app.fallthrough();
    Flags flags;
    app.add_option("--config", flags.config, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", flags.seed, "Root seed");
    app.add_option("--workers", flags.workers, "Worker threads");
    app.add_option("--out", flags.out, "Run directory");
    app.add_option("--arm", flags.arm, "Cost arm")->check(CLI::IsMember({"funnel", "nominal"}));
    app.add_option("--env", flags.environment, "Environment kind")->check(CLI::IsMember({"highway", "obstacle_field"}));

    auto* build = app.add_subcommand("build-library", "Compute primitives, funnels, composability and MC report");
    std::string role = "all";
    std::optional<std::size_t> count;
    auto* sample = app.add_subcommand("sample-envs", "Sample environment datasets");
    sample->add_option("--role", role, "prior, cert, test or all")->check(CLI::IsMember({"prior", "cert", "test", "all"}));
    sample->add_option("--count", count, "Number of environments (single role only)");
    auto* train = app.add_subcommand("train-prior", "Train the Gaussian prior with ES");
    auto* certify = app.add_subcommand("certify", "Build the cost matrix and optimize the PAC-Bayes posterior");
    auto* evaluate = app.add_subcommand("evaluate", "Deploy posterior policies on the test set");
    auto* plot = app.add_subcommand("plot-data", "Emit CSV files for plotting");
    std::optional<std::size_t> samples;
    auto* verify = app.add_subcommand("verify-funnels", "Monte-Carlo falsification of the stored funnels");
    verify->add_option("--samples", samples, "Samples per funnel");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
    }

    try {
        const Config c = resolve(flags);
        if (build->parsed()) {
            cmd_build_library(c);
            std::printf("library written to %s\n", c.out.c_str());
        } else if (sample->parsed()) {
            if (role == "all") {
                if (count) throw ContractViolation("--count needs a single --role");
                cmd_sample_all(c);
            } else {
                std::size_t n = role == "prior" ? c.prior_env_count() : role == "cert" ? c.cert_env_count() : c.test_envs;
                if (count) n = *count;
                cmd_sample_envs(c, role, n, dataset_seed(c.seed, role));
            }
        } else if (train->parsed()) {
            cmd_train_prior(c);
        } else if (certify->parsed()) {
            cmd_certify(c);
            const Json doc = read_artifact(c.out + "/certificate_" + c.arm + ".json", "certificate");
            std::cout << doc.at("certificate").dump(1) << '\n';
        } else if (evaluate->parsed()) {
            const EvaluationReport r = cmd_evaluate(c);
            std::printf("arm %s\n  %-22s %.6f\n", r.arm.c_str(), "PAC-Bayes bound", r.c_pac);
            print_estimate("funnel cost", r.result.funnel);
            print_estimate("cost (no disturbance)", r.result.undisturbed);
            print_estimate("cost (disturbance)", r.result.disturbed);
        } else if (plot->parsed()) {
            cmd_plot_data(c);
        } else if (verify->parsed()) {
            const auto rep = cmd_verify_funnels(c, samples.value_or(c.verify_samples));
            std::printf("samples %zu violating %zu worst margin %.3e\n", rep.samples, rep.violating_samples,
                        rep.worst_margin);
            if (rep.violating_samples > 0) return static_cast<int>(ExitCode::kSoundnessFailure);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(ExitCode::kRuntime);
    }
    return 0;
}
