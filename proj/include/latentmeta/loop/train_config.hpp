#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latentmeta/envs/task.hpp"

namespace latentmeta::loop {

/// Everything a run depends on. Defaults follow the reference settings at
/// desk scale; the harness maps it to and from a JSON config file.
struct TrainConfig {
  // Environment.
  std::string family = "pointnav2d";
  envs::EnvConfig env;
  int num_train_tasks = 30;
  int num_eval_tasks = 10;
  std::uint64_t train_task_seed = 1;
  std::uint64_t eval_task_seed = 2;
  int episodes_per_trial = 2;

  // Schedule.
  int warmstart_trajectories = 60;
  int warmstart_model_steps = 5000;
  int collect_tasks_per_iter = 20;
  int rollouts_per_task = 1;
  int train_steps_per_epoch = 640;
  /// Agent updates per model update, each on a fresh critic batch.
  int agent_updates_per_step = 1;
  int tasks_per_update = 20;
  /// Batch sizes count timesteps (model) and transitions (actor, critic).
  int model_batch_size = 512;
  int actor_batch_size = 512;
  int critic_batch_size = 512;
  std::int64_t replay_capacity = 100000;
  std::int64_t env_step_budget = 200000;
  int eval_every = 10;
  int eval_repetitions = 3;
  int checkpoint_every = 10;

  // Optimization.
  double model_lr = 1e-4;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double alpha_lr = 3e-4;
  double gamma = 0.99;
  double tau = 0.005;
  double initial_alpha = 1.0;
  /// Cut bootstrapping at the end of a trial; false treats it as a time limit.
  bool terminal_at_horizon = false;
  /// Abort when the model loss exceeds this multiple of its first value.
  double divergence_factor = 10.0;
  std::string precision = "float32";

  // Architecture.
  int latent_dim = 64;
  std::vector<std::int64_t> model_hidden = {32, 32};
  std::vector<std::int64_t> conv_filters = {16, 32, 64, 64};
  int vector_encoder_hidden = 32;
  std::vector<std::int64_t> agent_hidden = {256, 256};
  double decoder_var_floor = 1e-3;
  /// Fixed per-pixel variance of the image decoder; 0 learns it.
  double image_decoder_var = 0.01;
  int mc_samples = 1;
  std::string belief_input = "mean_logvar";

  // Inference and reward channels.
  bool reward_evidence = true;
  bool shared_batch = true;
  std::string eval_action_mode = "sample";

  // Sparse stage.
  double stage2_fresh_fraction = 0.5;
  /// What the sparse-stage learner copies from the shaped run: fresh, model, all.
  std::string stage2_init = "model";
  /// 0 means env_step_budget.
  std::int64_t stage2_env_step_budget = 0;
  int stage2_pretrain_steps = 0;

  std::uint64_t seed = 0;

  bool operator==(const TrainConfig&) const = default;
};

}  // namespace latentmeta::loop
