#pragma once

// Artifact persistence: JSON documents with a schema version, and SHA-256
// content hashes used for stale-artifact detection.

#include <string>

#include <json.hpp>

#include "funnelpac/environments.hpp"
#include "funnelpac/learning.hpp"
#include "funnelpac/policy.hpp"
#include "funnelpac/reachability.hpp"

namespace funnelpac {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

/// Writes doc (with schema_version and artifact type added) atomically via a temporary file.
void write_artifact(const std::string& path, const std::string& type, Json doc);
/// Reads and checks schema_version and type.
Json read_artifact(const std::string& path, const std::string& type);

Json to_json(const Box& b);
Box box_from_json(const Json& j);
Json to_json(const Funnel& f);
Funnel funnel_from_json(const Json& j);
Json to_json(const FunnelLibrary& lib);
FunnelLibrary funnel_library_from_json(const Json& j);
Json to_json(const FunnelViolationReport& r);

Json to_json(const HighwayConfig& c);
Json to_json(const ObstacleFieldConfig& c);
void update_from_json(const Json& j, HighwayConfig& c);
void update_from_json(const Json& j, ObstacleFieldConfig& c);
Json to_json(const Environment& env);
Environment environment_from_json(const Json& j);

Json to_json(const CostRecord& r);
CostRecord cost_record_from_json(const Json& j);

Json to_json(const Architecture& a);
Architecture architecture_from_json(const Json& j);
Json to_json(const PolicyParams& p);
PolicyParams policy_from_json(const Json& j);
Json to_json(const GaussianPolicyDist& d);
GaussianPolicyDist gaussian_from_json(const Json& j);
Json to_json(const CostMatrix& c);
CostMatrix cost_matrix_from_json(const Json& j);
Json to_json(const DiscretePosterior& p);
DiscretePosterior posterior_from_json(const Json& j);
Json to_json(const PacCertificate& c);
PacCertificate certificate_from_json(const Json& j);

}  // namespace funnelpac
