#pragma once

#include <array>

#include "latentmeta/envs/environment.hpp"

namespace latentmeta::envs {

/// Reach-style shaped reward -(d^2 + log(d + 1e-5)); peaks at d = 0.
double reach_shaped_reward(double distance);

namespace pointnav {

// Arena [-1, 1]^2, start at the semicircle center (origin), goals on the
// upper semicircle. Goal radius is 10% of the arena half-width.
inline constexpr double kArenaHalfWidth = 1.0;
inline constexpr double kSemicircleRadius = 0.7;
inline constexpr double kGoalRadius = 0.1;
inline constexpr double kStepScale = 0.1;
inline constexpr double kMarkerRadius = 0.08;

struct State {
  double x = 0.0;
  double y = 0.0;
};

std::array<double, 2> goal_of(const Task& task);
double distance_to_goal(const State& s, const Task& task);
double shaped_reward(const State& s, const Task& task);
/// Closed ball: d <= kGoalRadius counts as reached.
double sparse_reward(const State& s, const Task& task);
/// Goal is never drawn; only the agent marker and the static arc.
Observation render_obs(const State& s, int image_size);

class PointNavEnv final : public Environment {
 public:
  PointNavEnv(Task task, EnvConfig config) : Environment(std::move(task), std::move(config)) {}

  int action_dim() const override { return 2; }
  std::vector<std::int64_t> obs_shape() const override;
  std::vector<double> state() const override { return {s_.x, s_.y}; }
  Observation render() const override;

  const State& agent() const { return s_; }

 protected:
  void reset_state(Rng& rng) override;
  void advance(std::span<const double> action, Rng& rng, StepResult& out) override;

 private:
  State s_;
};

}  // namespace pointnav
}  // namespace latentmeta::envs
