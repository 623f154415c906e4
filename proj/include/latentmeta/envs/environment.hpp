#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "latentmeta/core/random.hpp"
#include "latentmeta/envs/task.hpp"

namespace latentmeta::envs {

/// Either a C x H x W image with values in [0, 1] or a flat proprio vector.
/// Never carries task parameters.
struct Observation {
  std::vector<float> values;
  std::vector<std::int64_t> shape;

  bool is_image() const { return shape.size() == 3; }
  bool operator==(const Observation&) const = default;
};

/// Which reward is reported in StepResult::reward. Sparse families report
/// the sparse channel in the test phase; everything else reports shaped.
enum class RewardPhase { kTrain, kTest };

struct StepResult {
  Observation obs;
  double reward = 0.0;
  double shaped_reward = 0.0;
  double sparse_reward = 0.0;
  bool done = false;
  std::map<std::string, double> info;
};

/// Fixed-horizon POMDP instance for one task.
///
/// An episode has `horizon()` timesteps: reset() yields the first
/// observation and each step() yields the next one, so `horizon() - 1`
/// actions are executed and the step producing timestep `horizon()`
/// reports done.
class Environment {
 public:
  Environment(Task task, EnvConfig config);
  virtual ~Environment() = default;

  Observation reset(std::uint64_t seed);
  StepResult step(std::span<const double> action);

  const Task& task() const { return task_; }
  int horizon() const { return horizon_; }
  int timestep() const { return t_; }
  bool done() const { return done_; }
  void set_phase(RewardPhase phase) { phase_ = phase; }
  RewardPhase phase() const { return phase_; }

  virtual int action_dim() const = 0;
  virtual std::vector<std::int64_t> obs_shape() const = 0;
  /// Physical state (agent position, velocity, ...), for diagnostics only.
  virtual std::vector<double> state() const = 0;
  /// Reward evidence available at reset. Zero except for lgss-diagnostic.
  virtual double initial_reward() const { return 0.0; }
  virtual Observation render() const = 0;

 protected:
  virtual void reset_state(Rng& rng) = 0;
  /// Advances the physical state and fills the reward channels.
  virtual void advance(std::span<const double> action, Rng& rng, StepResult& out) = 0;

  const EnvConfig& config() const { return config_; }

 private:
  Task task_;
  EnvConfig config_;
  int horizon_;
  int t_ = 0;
  bool done_ = true;
  bool started_ = false;
  RewardPhase phase_ = RewardPhase::kTrain;
  Rng rng_;
};

std::unique_ptr<Environment> make_environment(const Task& task, const EnvConfig& config);

/// Observation shape and action dimension of a family under `config`.
std::vector<std::int64_t> family_obs_shape(Family family, const EnvConfig& config);
int family_action_dim(Family family, const EnvConfig& config);
int family_state_dim(Family family, const EnvConfig& config);

}  // namespace latentmeta::envs
