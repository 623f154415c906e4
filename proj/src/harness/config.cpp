#include "latentmeta/harness/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/loop/meta_loop.hpp"

namespace latentmeta::harness {

using nlohmann::json;
using loop::TrainConfig;

namespace {

struct Field {
  std::string key;
  std::function<json(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const json&)> set;
};

template <typename T>
Field field(std::string key, T TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return json(c.*member); },
          [member, key](TrainConfig& c, const json& v) {
            try {
              c.*member = v.get<T>();
            } catch (const json::exception&) {
              throw ConfigError("config key '" + key + "' has the wrong type");
            }
          }};
}

template <typename T>
Field env_field(std::string key, T envs::EnvConfig::*member) {
  return {key, [member](const TrainConfig& c) { return json(c.env.*member); },
          [member, key](TrainConfig& c, const json& v) {
            try {
              c.env.*member = v.get<T>();
            } catch (const json::exception&) {
              throw ConfigError("config key '" + key + "' has the wrong type");
            }
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      field("family", &TrainConfig::family),
      env_field("image_size", &envs::EnvConfig::image_size),
      env_field("horizon", &envs::EnvConfig::horizon),
      env_field("veltrack_targets", &envs::EnvConfig::veltrack_targets),
      env_field("lgss_state_dim", &envs::EnvConfig::lgss_state_dim),
      env_field("lgss_action_dim", &envs::EnvConfig::lgss_action_dim),
      env_field("lgss_memoryless", &envs::EnvConfig::lgss_memoryless),
      field("num_train_tasks", &TrainConfig::num_train_tasks),
      field("num_eval_tasks", &TrainConfig::num_eval_tasks),
      field("train_task_seed", &TrainConfig::train_task_seed),
      field("eval_task_seed", &TrainConfig::eval_task_seed),
      field("episodes_per_trial", &TrainConfig::episodes_per_trial),
      field("warmstart_trajectories", &TrainConfig::warmstart_trajectories),
      field("warmstart_model_steps", &TrainConfig::warmstart_model_steps),
      field("collect_tasks_per_iter", &TrainConfig::collect_tasks_per_iter),
      field("rollouts_per_task", &TrainConfig::rollouts_per_task),
      field("train_steps_per_epoch", &TrainConfig::train_steps_per_epoch),
      field("agent_updates_per_step", &TrainConfig::agent_updates_per_step),
      field("tasks_per_update", &TrainConfig::tasks_per_update),
      field("model_batch_size", &TrainConfig::model_batch_size),
      field("actor_batch_size", &TrainConfig::actor_batch_size),
      field("critic_batch_size", &TrainConfig::critic_batch_size),
      field("replay_capacity", &TrainConfig::replay_capacity),
      field("env_step_budget", &TrainConfig::env_step_budget),
      field("eval_every", &TrainConfig::eval_every),
      field("eval_repetitions", &TrainConfig::eval_repetitions),
      field("checkpoint_every", &TrainConfig::checkpoint_every),
      field("model_lr", &TrainConfig::model_lr),
      field("actor_lr", &TrainConfig::actor_lr),
      field("critic_lr", &TrainConfig::critic_lr),
      field("alpha_lr", &TrainConfig::alpha_lr),
      field("gamma", &TrainConfig::gamma),
      field("terminal_at_horizon", &TrainConfig::terminal_at_horizon),
      field("tau", &TrainConfig::tau),
      field("initial_alpha", &TrainConfig::initial_alpha),
      field("divergence_factor", &TrainConfig::divergence_factor),
      field("precision", &TrainConfig::precision),
      field("latent_dim", &TrainConfig::latent_dim),
      field("model_hidden", &TrainConfig::model_hidden),
      field("conv_filters", &TrainConfig::conv_filters),
      field("vector_encoder_hidden", &TrainConfig::vector_encoder_hidden),
      field("agent_hidden", &TrainConfig::agent_hidden),
      field("decoder_var_floor", &TrainConfig::decoder_var_floor),
      field("image_decoder_var", &TrainConfig::image_decoder_var),
      field("mc_samples", &TrainConfig::mc_samples),
      field("belief_input", &TrainConfig::belief_input),
      field("reward_evidence", &TrainConfig::reward_evidence),
      field("shared_batch", &TrainConfig::shared_batch),
      field("eval_action_mode", &TrainConfig::eval_action_mode),
      field("stage2_fresh_fraction", &TrainConfig::stage2_fresh_fraction),
      field("stage2_init", &TrainConfig::stage2_init),
      field("stage2_env_step_budget", &TrainConfig::stage2_env_step_budget),
      field("stage2_pretrain_steps", &TrainConfig::stage2_pretrain_steps),
      field("seed", &TrainConfig::seed),
  };
  return f;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

}  // namespace

TrainConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  TrainConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto* f = find_field(it.key());
    if (!f) throw ConfigError("unknown config key '" + it.key() + "'");
    f->set(c, it.value());
  }
  loop::validate(c);
  return c;
}

json config_to_json(const TrainConfig& cfg) {
  json j = json::object();
  for (const auto& f : fields()) j[f.key] = f.get(cfg);
  return j;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const auto text = ss.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return config_from_json(json::object());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void save_config(const TrainConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path.string());
  out << config_to_json(cfg).dump(2) << '\n';
}

TrainConfig apply_overrides(const TrainConfig& cfg, const std::vector<std::string>& overrides) {
  auto j = config_to_json(cfg);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw UsageError("override '" + o + "' is not key=value");
    const auto key = o.substr(0, eq);
    const auto text = o.substr(eq + 1);
    if (!find_field(key)) throw ConfigError("unknown config key '" + key + "'");
    try {
      j[key] = json::parse(text);
    } catch (const json::parse_error&) {
      j[key] = text;
    }
  }
  return config_from_json(j);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> k;
  for (const auto& f : fields()) k.push_back(f.key);
  return k;
}

std::string config_hash(const TrainConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : config_to_json(cfg).dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace latentmeta::harness
