#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "funnelpac/config.hpp"
#include "funnelpac/errors.hpp"
#include "funnelpac/io.hpp"
#include "funnelpac/pipeline.hpp"

using namespace funnelpac;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("funnelpac_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("sha256 test vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("artifact envelope") {
    const auto dir = scratch("envelope");
    const std::string path = (dir / "sub" / "a.json").string();
    write_artifact(path, "thing", Json{{"x", 0.1}});
    const Json doc = read_artifact(path, "thing");
    CHECK(doc.at("x").get<double>() == 0.1);
    CHECK(doc.at("schema_version").get<int>() == kSchemaVersion);
    CHECK_THROWS_AS(read_artifact(path, "other"), ContractViolation);
    CHECK_THROWS_AS(read_artifact((dir / "none.json").string(), "thing"), ContractViolation);

    Json old = doc;
    old["schema_version"] = kSchemaVersion + 1;
    std::ofstream(path) << old.dump();
    CHECK_THROWS_AS(read_artifact(path, "thing"), StaleArtifactError);
    std::ofstream(path) << "{ not json";
    CHECK_THROWS_AS(read_artifact(path, "thing"), Error);
    CHECK(sha256_file(path) == sha256_hex("{ not json"));
}

TEST_CASE("funnel library round trip is exact") {
    const auto& lib = fixtures::surrogate().certified;
    const Json j = to_json(lib);
    const FunnelLibrary back = funnel_library_from_json(Json::parse(j.dump()));
    REQUIRE(back.size() == lib.size());
    CHECK(back.composability == lib.composability);
    for (std::size_t f = 0; f < lib.size(); ++f) {
        CHECK(back.funnels[f].times == lib.funnels[f].times);
        CHECK(back.funnels[f].offset == lib.funnels[f].offset);
        for (std::size_t k = 0; k < lib.funnels[f].boxes.size(); ++k) {
            CHECK(back.funnels[f].boxes[k].lower == lib.funnels[f].boxes[k].lower);
            CHECK(back.funnels[f].boxes[k].upper == lib.funnels[f].boxes[k].upper);
        }
    }
}

TEST_CASE("learning artifacts round trip") {
    const auto prior = initial_prior(30, 2, 0.3, 0.2);
    const auto pb = gaussian_from_json(Json::parse(to_json(prior).dump()));
    CHECK(pb.mu == prior.mu);
    CHECK(pb.log_sigma == prior.log_sigma);

    const auto polb = policy_from_json(Json::parse(to_json(PolicyParams{Architecture{{2, 3, 4, 1}}, std::vector<double>(30, 0.5)}).dump()));
    CHECK(polb.architecture.widths == std::vector<int>{2, 3, 4, 1});
    CHECK(polb.theta.size() == 30);

    CostMatrix cm;
    cm.entries = {{0.1, 0.2}, {0.3, 1.0}};
    cm.thetas = {{1.0}, {2.0}};
    cm.env_seeds = {5, 6};
    const auto cmb = cost_matrix_from_json(Json::parse(to_json(cm).dump()));
    CHECK(cmb.entries == cm.entries);
    CHECK(cmb.thetas == cm.thetas);
    CHECK(cmb.env_seeds == cm.env_seeds);

    const auto res = optimize_posterior(std::vector<double>{0.2, 0.5, 0.3}, 500, 0.05);
    PacCertificate cert = res.certificate;
    cert.dataset_hash = "abc";
    cert.posterior_ref = "posterior.json";
    const auto cb = certificate_from_json(Json::parse(to_json(cert).dump()));
    CHECK(cb.c_pac == cert.c_pac);
    CHECK(cb.c_s == cert.c_s);
    CHECK(cb.kl == cert.kl);
    CHECK(cb.n == cert.n);
    CHECK(cb.dataset_hash == "abc");
    const auto postb = posterior_from_json(Json::parse(to_json(res.posterior).dump()));
    CHECK(postb.p == res.posterior.p);

    const CostRecord rec = CostRecord::make(4, 10, FailureKind::kBoundary);
    const auto recb = cost_record_from_json(to_json(rec));
    CHECK(recb.k == 4);
    CHECK(recb.failure == FailureKind::kBoundary);
}

TEST_CASE("config overlay and validation") {
    const Config base;
    const Config c = config_from_json(Json::parse(R"({"seed": 9, "certify": {"delta": 0.05}, "highway": {"lane_count": 4}})"));
    CHECK(c.seed == 9);
    CHECK(c.delta == 0.05);
    CHECK(c.env.highway.lane_count == 4);
    CHECK(c.m_policies == base.m_policies);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"certify": {"delta": 1.5}})")), ContractViolation);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"arm": "other"})")), ContractViolation);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"seed": "x"})")), ContractViolation);
    const Config again = config_from_json(config_to_json(c));
    CHECK(config_to_json(again) == config_to_json(c));
    CHECK(base.prior_env_count() + base.cert_env_count() == base.train_envs);
}

TEST_CASE("dataset seeds and sampling") {
    CHECK(dataset_seed(1, "prior") != dataset_seed(1, "cert"));
    CHECK(dataset_seed(1, "cert") != dataset_seed(1, "test"));
    const auto a = sample_dataset(EnvironmentKind::kHighway, 5, dataset_seed(1, "prior"), {});
    const auto b = sample_dataset(EnvironmentKind::kHighway, 5, dataset_seed(1, "prior"), {});
    const auto c = sample_dataset(EnvironmentKind::kHighway, 5, dataset_seed(1, "cert"), {});
    CHECK(a.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(to_json(a[i]) == to_json(b[i]));
        for (std::size_t k = 0; k < 5; ++k) {
            CHECK(std::get<HighwayEnvironment>(a[i]).seed != std::get<HighwayEnvironment>(c[k]).seed);
        }
    }
}

TEST_CASE("cost estimates") {
    const auto e = estimate({0.0, 1.0, 0.0, 1.0});
    CHECK(e.mean == 0.5);
    CHECK(e.n == 4);
    // sample variance 1/3
    CHECK(e.standard_error == doctest::Approx(std::sqrt((1.0 / 3.0) / 4.0)));
}

}
