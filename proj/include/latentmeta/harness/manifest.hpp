#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>

#include "latentmeta/loop/train_config.hpp"

namespace latentmeta::harness {

/// Code revision baked in at configure time ("unknown" outside a checkout).
std::string code_revision();

/// Everything needed to reproduce a run.
struct RunManifest {
  loop::TrainConfig config;
  std::string revision;
  std::string start_time;  // UTC, ISO 8601
  std::string family;
  std::string command;
  std::filesystem::path run_dir;
  std::filesystem::path metrics_path;
  std::filesystem::path checkpoint_dir;

  static RunManifest create(const loop::TrainConfig& cfg, const std::filesystem::path& run_dir, std::string command);
  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);
};

/// Root for run directories: $LATENTMETA_OUT, else ./runs.
std::filesystem::path output_root();

}  // namespace latentmeta::harness
