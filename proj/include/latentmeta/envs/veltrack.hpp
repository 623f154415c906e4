#pragma once

#include <vector>

#include "latentmeta/envs/environment.hpp"

namespace latentmeta::envs::veltrack {

// First-order velocity response v' = v + kResponse * (kMaxSpeed * a - v).
inline constexpr double kResponse = 0.5;
inline constexpr double kMaxSpeed = 3.0;
inline constexpr double kMinTarget = 0.0;
inline constexpr double kMaxTarget = 2.5;
inline constexpr double kControlCost = 0.01;
/// Tracking band used for success and steps-to-track.
inline constexpr double kBand = 0.2;

struct State {
  double velocity = 0.0;
};

int num_targets(const Task& task);
/// Target active at 1-based timestep t.
double target_at(const Task& task, int t);
/// 1-based timesteps at which each target becomes active.
std::vector<int> switch_times(const Task& task);

/// -|v - v*| - 0.01 * ||a||_2.
double shaped_reward(const State& s, double action_norm, double target);
/// 1 when |v - v*| <= kBand.
double sparse_reward(const State& s, double target);

class VelTrackEnv final : public Environment {
 public:
  VelTrackEnv(Task task, EnvConfig config) : Environment(std::move(task), std::move(config)) {}

  int action_dim() const override { return 1; }
  std::vector<std::int64_t> obs_shape() const override { return {1}; }
  std::vector<double> state() const override { return {s_.velocity}; }
  Observation render() const override;

  void set_velocity(double v) { s_.velocity = v; }

 protected:
  void reset_state(Rng& rng) override;
  void advance(std::span<const double> action, Rng& rng, StepResult& out) override;

 private:
  State s_;
};

}  // namespace latentmeta::envs::veltrack
