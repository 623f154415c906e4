#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "latentmeta/agent/sac.hpp"
#include "latentmeta/core/random.hpp"
#include "latentmeta/envs/task.hpp"
#include "latentmeta/loop/collect.hpp"
#include "latentmeta/loop/metrics.hpp"
#include "latentmeta/loop/replay.hpp"
#include "latentmeta/loop/train_config.hpp"
#include "latentmeta/model/latent_model.hpp"

namespace latentmeta::loop {

/// Stage 1 learns from shaped rewards; stage 2 infers from sparse rewards
/// while reconstructing (and valuing) the shaped ones.
enum class Stage { kShaped = 1, kSparse = 2 };

/// Throws ConfigError naming the first invalid field.
void validate(const TrainConfig& cfg);

model::ModelConfig model_config(const TrainConfig& cfg);
agent::SacConfig sac_config(const TrainConfig& cfg);
torch::Dtype config_dtype(const TrainConfig& cfg);
int trial_length(const TrainConfig& cfg);

struct EpochStats {
  int steps = 0;
  double model_loss = 0.0;  // per timestep
  double obs_log_lik = 0.0;
  double reward_log_lik = 0.0;
  double kl = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;
};

struct MetricsRow {
  int stage = 1;
  int iteration = 0;
  std::int64_t env_steps = 0;
  std::int64_t model_updates = 0;
  std::int64_t agent_updates = 0;
  EpochStats train;
  std::optional<EvalSummary> eval;
};

/// Meta-training state: latent model, agent, optimizers, per-task replay
/// and every random stream. One serialized writer.
class MetaTrainer {
 public:
  explicit MetaTrainer(TrainConfig cfg, Stage stage = Stage::kShaped);

  const TrainConfig& config() const { return cfg_; }
  Stage stage() const { return stage_; }
  model::LatentModel& model() { return model_; }
  torch::optim::Adam& model_optimizer() { return *model_opt_; }
  agent::SacAgent& agent() { return *agent_; }
  ReplayBufferSet& buffers() { return buffers_; }
  /// Stage-1 trajectories replayed by the sparse stage (empty in stage 1).
  ReplayBufferSet& prior_buffers() { return prior_; }
  const std::vector<envs::Task>& train_tasks() const { return train_tasks_; }
  const std::vector<envs::Task>& eval_tasks() const { return eval_tasks_; }
  int iteration() const { return iteration_; }
  std::int64_t env_steps() const { return env_steps_; }
  std::int64_t step_budget() const;
  bool finished() const { return env_steps_ >= step_budget(); }
  bool warmstarted() const { return warmstarted_; }

  RewardChannel evidence_channel() const;
  CollectOptions collect_options(bool training) const;

  /// Stage 1: random-policy trials spread over the training tasks, then
  /// model-only updates. Stage 2: joint updates on the stage-1 replay.
  EpochStats warmstart();
  /// collect_tasks_per_iter tasks x rollouts_per_task trials with the agent.
  void collect();
  /// train_steps_per_epoch joint model and agent updates.
  EpochStats train_epoch();
  EpochStats train_steps(int steps, bool model_only);
  /// Pure execution; parameters and trainer random streams are untouched.
  std::vector<TrialResult> meta_test(const std::vector<envs::Task>& tasks, int repetitions,
                                     std::vector<Trajectory>* trajectories = nullptr);
  /// One outer iteration: collect, train, maybe evaluate.
  MetricsRow iterate();
  /// Initial evaluation row after warmstart.
  MetricsRow warmstart_row(const EpochStats& stats);

  /// Copies stage-1 replay and, per stage2_init, the stage-1 parameters.
  void seed_from(MetaTrainer& shaped, const std::filesystem::path& prior_replay);

  void save(const std::filesystem::path& dir, bool with_replay) const;
  void load(const std::filesystem::path& dir);

 private:
  std::vector<const Trajectory*> sample_sequences(const std::vector<int>& tasks, int per_task);
  std::vector<int> sample_task_ids();
  void check_divergence(double loss_per_step);
  EvalSummary evaluate();

  TrainConfig cfg_;
  Stage stage_;
  envs::Family family_;
  std::vector<envs::Task> train_tasks_;
  std::vector<envs::Task> eval_tasks_;
  model::LatentModel model_{nullptr};
  std::unique_ptr<torch::optim::Adam> model_opt_;
  std::unique_ptr<agent::SacAgent> agent_;
  ReplayBufferSet buffers_;
  ReplayBufferSet prior_;
  std::filesystem::path prior_path_;
  Rng rng_;
  torch::Generator gen_;
  int iteration_ = 0;
  std::int64_t env_steps_ = 0;
  std::int64_t model_updates_ = 0;
  std::int64_t agent_updates_ = 0;
  std::int64_t trials_collected_ = 0;
  double initial_loss_ = 0.0;
  bool have_initial_loss_ = false;
  bool warmstarted_ = false;
};

/// Evaluates trials of veltrack tasks with several targets; steps-to-track
/// per switch (see steps_to_track) alongside the raw trial results.
struct TrackingResult {
  TrialResult trial;
  Trajectory trajectory;
  std::vector<int> switch_times;
  std::vector<int> steps_to_track;
  std::vector<double> tracking_error;  // per timestep
};
std::vector<TrackingResult> nonstationary_eval(MetaTrainer& trainer, const std::vector<envs::Task>& tasks,
                                               int repetitions);

}  // namespace latentmeta::loop
