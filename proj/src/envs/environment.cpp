#include "latentmeta/envs/environment.hpp"

#include <cmath>
#include <string>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/envs/buttonpanel.hpp"
#include "latentmeta/envs/lgss_env.hpp"
#include "latentmeta/envs/pointnav.hpp"
#include "latentmeta/envs/veltrack.hpp"

namespace latentmeta::envs {

Environment::Environment(Task task, EnvConfig config)
    : task_(std::move(task)), config_(std::move(config)), horizon_(resolved_horizon(task_.family, config_)) {
  validate_task(task_);
  if (horizon_ < 2) throw ConfigError("horizon must be >= 2");
}

Observation Environment::reset(std::uint64_t seed) {
  rng_ = Rng(mix_seed(task_.seed, seed));
  reset_state(rng_);
  t_ = 1;
  done_ = false;
  started_ = true;
  return render();
}

StepResult Environment::step(std::span<const double> action) {
  if (!started_) throw UsageError("step() called before reset()");
  if (done_) throw UsageError("step() called after the episode finished");
  if (static_cast<int>(action.size()) != action_dim()) {
    throw UsageError("action has " + std::to_string(action.size()) + " components, expected " +
                     std::to_string(action_dim()));
  }
  for (double a : action) {
    if (!std::isfinite(a) || std::abs(a) > 1.0) throw UsageError("action component outside [-1, 1]");
  }
  StepResult out;
  advance(action, rng_, out);
  ++t_;
  out.done = (t_ == horizon_);
  done_ = out.done;
  const bool sparse = phase_ == RewardPhase::kTest && is_sparse_family(task_.family);
  out.reward = sparse ? out.sparse_reward : out.shaped_reward;
  out.obs = render();
  out.info["t"] = t_;
  return out;
}

std::unique_ptr<Environment> make_environment(const Task& task, const EnvConfig& config) {
  switch (task.family) {
    case Family::kPointNav2d: return std::make_unique<pointnav::PointNavEnv>(task, config);
    case Family::kButtonPanel: return std::make_unique<buttonpanel::ButtonPanelEnv>(task, config);
    case Family::kVelTrack: return std::make_unique<veltrack::VelTrackEnv>(task, config);
    case Family::kLgssDiagnostic: return std::make_unique<lgss::LgssEnv>(task, config);
  }
  throw ConfigError("unknown family");
}

std::vector<std::int64_t> family_obs_shape(Family family, const EnvConfig& config) {
  switch (family) {
    case Family::kPointNav2d:
    case Family::kButtonPanel: return {1, config.image_size, config.image_size};
    case Family::kVelTrack: return {1};
    case Family::kLgssDiagnostic: return {config.lgss_state_dim - 1};
  }
  return {};
}

int family_action_dim(Family family, const EnvConfig& config) {
  switch (family) {
    case Family::kPointNav2d:
    case Family::kButtonPanel: return 2;
    case Family::kVelTrack: return 1;
    case Family::kLgssDiagnostic: return config.lgss_action_dim;
  }
  return 0;
}

int family_state_dim(Family family, const EnvConfig& config) {
  switch (family) {
    case Family::kPointNav2d:
    case Family::kButtonPanel: return 2;
    case Family::kVelTrack: return 1;
    case Family::kLgssDiagnostic: return config.lgss_state_dim;
  }
  return 0;
}

}  // namespace latentmeta::envs
