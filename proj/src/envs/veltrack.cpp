#include "latentmeta/envs/veltrack.hpp"

#include <cmath>

namespace latentmeta::envs::veltrack {

int num_targets(const Task& task) { return static_cast<int>(task.params[0]); }

double target_at(const Task& task, int t) {
  const int m = num_targets(task);
  int active = 0;
  for (int k = 0; k < m; ++k) {
    if (t >= static_cast<int>(task.params[1 + m + k])) active = k;
  }
  return task.params[1 + active];
}

std::vector<int> switch_times(const Task& task) {
  const int m = num_targets(task);
  std::vector<int> out;
  for (int k = 0; k < m; ++k) out.push_back(static_cast<int>(task.params[1 + m + k]));
  return out;
}

double shaped_reward(const State& s, double action_norm, double target) {
  return -std::abs(s.velocity - target) - kControlCost * action_norm;
}

double sparse_reward(const State& s, double target) {
  return std::abs(s.velocity - target) <= kBand ? 1.0 : 0.0;
}

Observation VelTrackEnv::render() const {
  return Observation{{static_cast<float>(s_.velocity)}, {1}};
}

void VelTrackEnv::reset_state(Rng&) { s_ = State{}; }

void VelTrackEnv::advance(std::span<const double> action, Rng&, StepResult& out) {
  s_.velocity += kResponse * (kMaxSpeed * action[0] - s_.velocity);
  const double target = target_at(task(), timestep() + 1);
  out.shaped_reward = shaped_reward(s_, std::abs(action[0]), target);
  out.sparse_reward = sparse_reward(s_, target);
  out.info["velocity"] = s_.velocity;
  out.info["target"] = target;
  out.info["error"] = std::abs(s_.velocity - target);
}

}  // namespace latentmeta::envs::veltrack
