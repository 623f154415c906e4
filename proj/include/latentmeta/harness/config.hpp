#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "latentmeta/loop/train_config.hpp"

namespace latentmeta::harness {

/// Flat JSON object, one key per TrainConfig field. Absent keys keep their
/// defaults; unknown keys, wrong types and out-of-range values raise
/// ConfigError naming the key.
loop::TrainConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const loop::TrainConfig& cfg);

/// An empty (or whitespace-only) file yields the defaults.
loop::TrainConfig load_config(const std::filesystem::path& path);
void save_config(const loop::TrainConfig& cfg, const std::filesystem::path& path);

/// Applies "key=value" overrides (value parsed as JSON, else as a string).
loop::TrainConfig apply_overrides(const loop::TrainConfig& cfg, const std::vector<std::string>& overrides);

/// Every recognised key in declaration order.
std::vector<std::string> config_keys();

/// FNV-1a of the canonical JSON dump.
std::string config_hash(const loop::TrainConfig& cfg);

}  // namespace latentmeta::harness
