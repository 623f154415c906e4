#include "latentmeta/harness/manifest.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/harness/config.hpp"

#ifndef LATENTMETA_REVISION
#define LATENTMETA_REVISION "unknown"
#endif

namespace latentmeta::harness {

std::string code_revision() { return LATENTMETA_REVISION; }

RunManifest RunManifest::create(const loop::TrainConfig& cfg, const std::filesystem::path& run_dir,
                                std::string command) {
  RunManifest m;
  m.config = cfg;
  m.revision = code_revision();
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  m.start_time = buf;
  m.family = cfg.family;
  m.command = std::move(command);
  m.run_dir = run_dir;
  m.metrics_path = run_dir / "metrics.csv";
  m.checkpoint_dir = run_dir / "checkpoints";
  return m;
}

nlohmann::json RunManifest::to_json() const {
  return {{"config", config_to_json(config)},
          {"revision", revision},
          {"start_time", start_time},
          {"family", family},
          {"command", command},
          {"seeds",
           {{"seed", config.seed}, {"train_task_seed", config.train_task_seed}, {"eval_task_seed", config.eval_task_seed}}},
          {"run_dir", run_dir.string()},
          {"metrics", metrics_path.string()},
          {"checkpoints", checkpoint_dir.string()}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.config = config_from_json(j.at("config"));
  m.revision = j.at("revision").get<std::string>();
  m.start_time = j.at("start_time").get<std::string>();
  m.family = j.at("family").get<std::string>();
  m.command = j.at("command").get<std::string>();
  m.run_dir = j.at("run_dir").get<std::string>();
  m.metrics_path = j.at("metrics").get<std::string>();
  m.checkpoint_dir = j.at("checkpoints").get<std::string>();
  return m;
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return from_json(nlohmann::json::parse(in));
}

std::filesystem::path output_root() {
  if (const char* env = std::getenv("LATENTMETA_OUT"); env && *env) return env;
  return "runs";
}

}  // namespace latentmeta::harness
