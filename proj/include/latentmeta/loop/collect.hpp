#pragma once

#include <cstdint>
#include <vector>

#include "latentmeta/agent/sac.hpp"
#include "latentmeta/envs/environment.hpp"
#include "latentmeta/loop/trajectory.hpp"
#include "latentmeta/model/latent_model.hpp"

namespace latentmeta::loop {

struct CollectOptions {
  int episodes = 1;
  envs::EnvConfig env;
  envs::RewardPhase phase = envs::RewardPhase::kTrain;
  /// Reward fed to the posterior in the train phase. In the test phase the
  /// posterior gets whatever the environment reports.
  RewardChannel evidence = RewardChannel::kShaped;
  agent::ActionMode action_mode = agent::ActionMode::kSample;
  agent::BeliefInput belief_input = agent::BeliefInput::kMeanLogVar;
  /// Uniform actions in [-1, 1]^d instead of the agent.
  bool random_policy = false;
  /// Record predictive reward moments and belief entropy per timestep.
  bool diagnostics = false;
  int diagnostic_samples = 16;
};

struct TrialResult {
  int task_id = -1;
  int episodes = 0;
  int horizon = 0;
  std::vector<double> shaped_return;  // per episode
  std::vector<double> sparse_return;  // per episode
  /// 1-based timestep within the episode of the first positive sparse
  /// reward, or -1.
  std::vector<int> first_success;
  std::vector<double> reward_pred_mean;  // per timestep, diagnostics only
  std::vector<double> reward_pred_var;
  std::vector<double> belief_entropy;
  double wall_clock_s = 0.0;

  bool success(int episode) const { return first_success.at(static_cast<std::size_t>(episode)) > 0; }
};

struct CollectedTrial {
  Trajectory trajectory;
  TrialResult result;
};

/// Runs one trial: `episodes` consecutive episodes of the same task with the
/// belief carried across episode boundaries. Parameters are never modified.
/// Deterministic in `seed`. `agent` may be null only with random_policy.
CollectedTrial collect_trial(const envs::Task& task, model::LatentModelImpl& model, agent::SacAgent* agent,
                             const CollectOptions& options, std::uint64_t seed);

/// Gaussian entropy of a diagonal belief, summed over dims.
double belief_entropy(const model::BeliefState& b);

}  // namespace latentmeta::loop
