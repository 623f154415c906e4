#include "latentmeta/harness/checkpoint.hpp"

#include <fstream>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/harness/config.hpp"

namespace latentmeta::harness {

namespace fs = std::filesystem;

void write_checkpoint(loop::MetaTrainer& t, const fs::path& dir, bool with_replay) {
  fs::path tmp = dir;
  tmp += ".tmp";
  fs::remove_all(tmp);
  t.save(tmp, with_replay);
  nlohmann::json m;
  m["format"] = kCheckpointFormat;
  m["stage"] = static_cast<int>(t.stage());
  m["iteration"] = t.iteration();
  m["env_steps"] = t.env_steps();
  m["model_architecture"] = model::architecture_hash(*t.model());
  m["agent_architecture"] = model::architecture_hash(*t.agent().networks());
  m["has_replay"] = with_replay;
  m["config"] = config_to_json(t.config());
  std::ofstream(tmp / "manifest.json") << m.dump(2) << '\n';
  fs::path old = dir;
  old += ".old";
  fs::remove_all(old);
  if (fs::exists(dir)) fs::rename(dir, old);
  fs::rename(tmp, dir);
  fs::remove_all(old);
}

CheckpointInfo read_checkpoint_info(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ConfigError("no checkpoint manifest in " + dir.string());
  const auto m = nlohmann::json::parse(in);
  CheckpointInfo info;
  info.format = m.at("format").get<int>();
  if (info.format != kCheckpointFormat) {
    throw ConfigError("checkpoint format " + std::to_string(info.format) + " is not supported (expected " +
                      std::to_string(kCheckpointFormat) + ")");
  }
  info.stage = m.at("stage").get<int>();
  info.iteration = m.at("iteration").get<int>();
  info.env_steps = m.at("env_steps").get<std::int64_t>();
  info.model_architecture = m.at("model_architecture").get<std::string>();
  info.agent_architecture = m.at("agent_architecture").get<std::string>();
  info.has_replay = m.at("has_replay").get<bool>();
  info.config = config_from_json(m.at("config"));
  return info;
}

std::unique_ptr<loop::MetaTrainer> load_checkpoint(const fs::path& dir) {
  const auto info = read_checkpoint_info(dir);
  auto trainer = std::make_unique<loop::MetaTrainer>(info.config, static_cast<loop::Stage>(info.stage));
  if (model::architecture_hash(*trainer->model()) != info.model_architecture ||
      model::architecture_hash(*trainer->agent().networks()) != info.agent_architecture) {
    throw ConfigError("checkpoint architecture does not match its config");
  }
  trainer->load(dir);
  return trainer;
}

}  // namespace latentmeta::harness
