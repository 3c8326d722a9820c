#pragma once

#include "rfrl/model_class.hpp"
#include "rfrl/types.hpp"

#include <json.hpp>

#include <string>

namespace rfrl {

using nlohmann::json;

/// Row-major nested-array encoding for matrices; schema keys follow the
/// on-disk fixture format: "H", "S", "K", "initial_state", "kernels" and,
/// when factorized, "d", "phi", "mu".
json matrix_to_json(const Mat& m);
Mat matrix_from_json(const json& j);

json to_json(const EpisodicMdp& mdp);
EpisodicMdp mdp_from_json(const json& j);

json to_json(const Policy& policy);
Policy policy_from_json(const json& j);

json to_json(const RewardFunction& reward);
RewardFunction reward_from_json(const json& j);

/// Model classes wrap candidate embeddings in "phis"/"mus" arrays, each
/// candidate holding per-step "phi"/"mu" tables.
json to_json(const ModelClass& mc);
ModelClass model_class_from_json(const json& j);

/// Writes via a temporary file in the same directory plus rename, so readers
/// never observe a partially written file.
void atomic_write_text(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

}  // namespace rfrl
