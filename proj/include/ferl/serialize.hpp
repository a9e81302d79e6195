#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "ferl/fcm.hpp"
#include "ferl/policy.hpp"

namespace ferl {

nlohmann::json cluster_model_to_json(const ClusterModel& model);
ClusterModel cluster_model_from_json(const nlohmann::json& j);

nlohmann::json policy_to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& j);

void save_json(const nlohmann::json& j, const std::string& path);
nlohmann::json load_json(const std::string& path);  // throws MissingArtifact

// FNV-1a over bytes; used for manifest identity and cache keys, not security.
std::uint64_t fnv1a(const std::string& bytes);
std::string hash_hex(const std::string& bytes);
std::string file_hash_hex(const std::string& path);

}  // namespace ferl
