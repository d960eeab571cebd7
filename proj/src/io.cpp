#include "funnelpac/io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "funnelpac/errors.hpp"

namespace funnelpac {

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256: digest failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

std::string sha256_file(const std::string& path) { return sha256_hex(slurp(path)); }

void write_artifact(const std::string& path, const std::string& type, Json doc) {
    doc["schema_version"] = kSchemaVersion;
    doc["type"] = type;
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp);
        out << doc.dump(1) << '\n';
        if (!out) throw Error("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, p);
}

Json read_artifact(const std::string& path, const std::string& type) {
    if (!std::filesystem::exists(path)) throw ContractViolation("missing artifact " + path);
    Json doc;
    try {
        doc = Json::parse(slurp(path));
    } catch (const Json::parse_error& e) {
        throw Error("malformed artifact " + path + ": " + e.what());
    }
    if (doc.value("schema_version", -1) != kSchemaVersion) {
        throw StaleArtifactError(path + ": unsupported schema_version");
    }
    if (doc.value("type", std::string()) != type) {
        throw ContractViolation(path + ": expected artifact type " + type);
    }
    return doc;
}

Json to_json(const Box& b) { return Json{{"lower", b.lower}, {"upper", b.upper}}; }

Box box_from_json(const Json& j) {
    return Box{j.at("lower").get<std::vector<double>>(), j.at("upper").get<std::vector<double>>()};
}

Json to_json(const Funnel& f) {
    Json lower = Json::array(), upper = Json::array();
    for (const auto& b : f.boxes) {
        lower.push_back(b.lower);
        upper.push_back(b.upper);
    }
    return Json{{"primitive_id", f.primitive_id}, {"kind", to_string(f.kind)}, {"dt_f", f.dt_f},
                {"offset", f.offset},             {"times", f.times},          {"lower", lower},
                {"upper", upper}};
}

Funnel funnel_from_json(const Json& j) {
    Funnel f;
    f.primitive_id = j.at("primitive_id").get<std::size_t>();
    f.kind = system_kind_from_string(j.at("kind").get<std::string>());
    f.dt_f = j.at("dt_f").get<double>();
    f.offset = j.at("offset").get<std::vector<double>>();
    f.times = j.at("times").get<std::vector<double>>();
    const auto& lo = j.at("lower");
    const auto& hi = j.at("upper");
    if (lo.size() != f.times.size() || hi.size() != f.times.size()) {
        throw ContractViolation("funnel: lower/upper/times lengths differ");
    }
    for (std::size_t g = 0; g < f.times.size(); ++g) {
        f.boxes.push_back(Box{lo[g].get<std::vector<double>>(), hi[g].get<std::vector<double>>()});
    }
    return f;
}

Json to_json(const FunnelLibrary& lib) {
    Json funnels = Json::array();
    for (const auto& f : lib.funnels) funnels.push_back(to_json(f));
    return Json{{"kind", to_string(lib.kind)}, {"funnels", funnels}, {"composability", lib.composability}};
}

FunnelLibrary funnel_library_from_json(const Json& j) {
    FunnelLibrary lib;
    lib.kind = system_kind_from_string(j.at("kind").get<std::string>());
    for (const auto& f : j.at("funnels")) lib.funnels.push_back(funnel_from_json(f));
    lib.composability = j.at("composability").get<std::vector<std::vector<bool>>>();
    if (lib.composability.size() != lib.funnels.size()) throw ContractViolation("funnel library: matrix size");
    return lib;
}

Json to_json(const FunnelViolationReport& r) {
    return Json{{"samples", r.samples},
                {"violating_samples", r.violating_samples},
                {"violating_points", r.violating_points},
                {"worst_margin", r.worst_margin}};
}

Json to_json(const HighwayConfig& c) {
    return Json{{"lane_count", c.lane_count},
                {"lane_width", c.lane_width},
                {"horizon", c.horizon},
                {"interval", c.interval},
                {"vehicle_count", c.vehicle_count},
                {"offset_min", c.offset_min},
                {"offset_max", c.offset_max},
                {"speed_min", c.speed_min},
                {"speed_max", c.speed_max},
                {"vehicle_length", c.vehicle_length},
                {"vehicle_width", c.vehicle_width},
                {"ego_lane", c.ego_lane},
                {"observed_vehicles", c.observed_vehicles},
                {"scale_x", c.scale_x},
                {"scale_y", c.scale_y}};
}

Json to_json(const ObstacleFieldConfig& c) {
    return Json{{"obstacle_count", c.obstacle_count},
                {"radius_min", c.radius_min},
                {"radius_max", c.radius_max},
                {"forward_min", c.forward_min},
                {"forward_max", c.forward_max},
                {"lateral_min", c.lateral_min},
                {"lateral_max", c.lateral_max},
                {"horizon", c.horizon},
                {"interval", c.interval},
                {"robot_radius", c.robot_radius},
                {"rays", c.rays},
                {"ray_range", c.ray_range}};
}

namespace {

template <class T>
void maybe(const Json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

void update_from_json(const Json& j, HighwayConfig& c) {
    maybe(j, "lane_count", c.lane_count);
    maybe(j, "lane_width", c.lane_width);
    maybe(j, "horizon", c.horizon);
    maybe(j, "interval", c.interval);
    maybe(j, "vehicle_count", c.vehicle_count);
    maybe(j, "offset_min", c.offset_min);
    maybe(j, "offset_max", c.offset_max);
    maybe(j, "speed_min", c.speed_min);
    maybe(j, "speed_max", c.speed_max);
    maybe(j, "vehicle_length", c.vehicle_length);
    maybe(j, "vehicle_width", c.vehicle_width);
    maybe(j, "ego_lane", c.ego_lane);
    maybe(j, "observed_vehicles", c.observed_vehicles);
    maybe(j, "scale_x", c.scale_x);
    maybe(j, "scale_y", c.scale_y);
}

void update_from_json(const Json& j, ObstacleFieldConfig& c) {
    maybe(j, "obstacle_count", c.obstacle_count);
    maybe(j, "radius_min", c.radius_min);
    maybe(j, "radius_max", c.radius_max);
    maybe(j, "forward_min", c.forward_min);
    maybe(j, "forward_max", c.forward_max);
    maybe(j, "lateral_min", c.lateral_min);
    maybe(j, "lateral_max", c.lateral_max);
    maybe(j, "horizon", c.horizon);
    maybe(j, "interval", c.interval);
    maybe(j, "robot_radius", c.robot_radius);
    maybe(j, "rays", c.rays);
    maybe(j, "ray_range", c.ray_range);
}

Json to_json(const Environment& env) {
    if (const auto* h = std::get_if<HighwayEnvironment>(&env)) {
        Json vehicles = Json::array();
        for (const auto& v : h->vehicles) {
            vehicles.push_back(Json{{"lane", v.lane},
                                    {"offset", v.offset},
                                    {"speeds", v.speeds},
                                    {"length", v.length},
                                    {"width", v.width}});
        }
        return Json{{"kind", "highway"}, {"seed", h->seed}, {"config", to_json(h->config)}, {"vehicles", vehicles}};
    }
    const auto& f = std::get<ObstacleFieldEnvironment>(env);
    Json obstacles = Json::array();
    for (const auto& d : f.obstacles) obstacles.push_back(Json::array({d.x, d.y, d.r}));
    return Json{{"kind", "obstacle_field"}, {"seed", f.seed}, {"config", to_json(f.config)}, {"obstacles", obstacles}};
}

Environment environment_from_json(const Json& j) {
    const auto kind = environment_kind_from_string(j.at("kind").get<std::string>());
    if (kind == EnvironmentKind::kHighway) {
        HighwayEnvironment h;
        h.seed = j.at("seed").get<std::uint64_t>();
        update_from_json(j.at("config"), h.config);
        for (const auto& v : j.at("vehicles")) {
            Vehicle x;
            x.lane = v.at("lane").get<int>();
            x.offset = v.at("offset").get<double>();
            x.speeds = v.at("speeds").get<std::vector<double>>();
            x.length = v.at("length").get<double>();
            x.width = v.at("width").get<double>();
            h.vehicles.push_back(std::move(x));
        }
        return h;
    }
    ObstacleFieldEnvironment f;
    f.seed = j.at("seed").get<std::uint64_t>();
    update_from_json(j.at("config"), f.config);
    for (const auto& d : j.at("obstacles")) {
        f.obstacles.push_back(Disc{d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>()});
    }
    return f;
}

Json to_json(const CostRecord& r) {
    return Json{{"k", r.k}, {"K", r.K}, {"cost", r.cost}, {"failure", to_string(r.failure)}};
}

CostRecord cost_record_from_json(const Json& j) {
    return CostRecord::make(j.at("k").get<int>(), j.at("K").get<int>(),
                            failure_kind_from_string(j.at("failure").get<std::string>()));
}

Json to_json(const Architecture& a) {
    return Json{{"widths", a.widths}, {"hidden_activation", "tanh"}, {"output_activation", "linear"},
                {"parameter_count", a.parameter_count()}};
}

Architecture architecture_from_json(const Json& j) { return Architecture{j.at("widths").get<std::vector<int>>()}; }

Json to_json(const PolicyParams& p) { return Json{{"architecture", to_json(p.architecture)}, {"theta", p.theta}}; }

PolicyParams policy_from_json(const Json& j) {
    PolicyParams p{architecture_from_json(j.at("architecture")), j.at("theta").get<std::vector<double>>()};
    p.validate();
    return p;
}

Json to_json(const GaussianPolicyDist& d) { return Json{{"mu", d.mu}, {"log_sigma", d.log_sigma}}; }

GaussianPolicyDist gaussian_from_json(const Json& j) {
    GaussianPolicyDist d{j.at("mu").get<std::vector<double>>(), j.at("log_sigma").get<std::vector<double>>()};
    d.validate();
    return d;
}

Json to_json(const CostMatrix& c) {
    return Json{{"entries", c.entries}, {"thetas", c.thetas}, {"env_seeds", c.env_seeds}, {"row_means", c.row_means()}};
}

CostMatrix cost_matrix_from_json(const Json& j) {
    CostMatrix c;
    c.entries = j.at("entries").get<std::vector<std::vector<double>>>();
    c.thetas = j.at("thetas").get<std::vector<std::vector<double>>>();
    c.env_seeds = j.at("env_seeds").get<std::vector<std::uint64_t>>();
    return c;
}

Json to_json(const DiscretePosterior& p) { return Json{{"p", p.p}, {"p0", p.p0}}; }

DiscretePosterior posterior_from_json(const Json& j) {
    return DiscretePosterior{j.at("p").get<std::vector<double>>(), j.at("p0").get<std::vector<double>>()};
}

Json to_json(const PacCertificate& c) {
    return Json{{"C_S", c.c_s},        {"kl", c.kl},         {"R", c.r},
                {"C_PAC", c.c_pac},    {"delta", c.delta},   {"N", c.n},
                {"m", c.m},            {"lambda", c.lambda}, {"posterior_ref", c.posterior_ref},
                {"dataset_hash", c.dataset_hash}};
}

PacCertificate certificate_from_json(const Json& j) {
    PacCertificate c;
    c.c_s = j.at("C_S").get<double>();
    c.kl = j.at("kl").get<double>();
    c.r = j.at("R").get<double>();
    c.c_pac = j.at("C_PAC").get<double>();
    c.delta = j.at("delta").get<double>();
    c.n = j.at("N").get<std::size_t>();
    c.m = j.at("m").get<std::size_t>();
    c.lambda = j.at("lambda").get<double>();
    c.posterior_ref = j.at("posterior_ref").get<std::string>();
    c.dataset_hash = j.at("dataset_hash").get<std::string>();
    return c;
}

}  // namespace funnelpac
