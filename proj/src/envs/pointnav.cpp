#include "latentmeta/envs/pointnav.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "latentmeta/envs/render.hpp"

namespace latentmeta::envs {

double reach_shaped_reward(double distance) {
  return -(distance * distance + std::log(distance + 1e-5));
}

namespace pointnav {

std::array<double, 2> goal_of(const Task& task) { return {task.params[1], task.params[2]}; }

double distance_to_goal(const State& s, const Task& task) {
  const auto g = goal_of(task);
  return std::hypot(s.x - g[0], s.y - g[1]);
}

double shaped_reward(const State& s, const Task& task) {
  return reach_shaped_reward(distance_to_goal(s, task));
}

double sparse_reward(const State& s, const Task& task) {
  return distance_to_goal(s, task) <= kGoalRadius ? 1.0 : 0.0;
}

Observation render_obs(const State& s, int image_size) {
  Canvas canvas(image_size, kArenaHalfWidth);
  canvas.arc(0.0, 0.0, kSemicircleRadius, 0.0, std::numbers::pi, 0.25f);
  canvas.disk(s.x, s.y, kMarkerRadius, 1.0f);
  return canvas.finish();
}

std::vector<std::int64_t> PointNavEnv::obs_shape() const {
  return {1, config().image_size, config().image_size};
}

Observation PointNavEnv::render() const { return render_obs(s_, config().image_size); }

void PointNavEnv::reset_state(Rng&) { s_ = State{}; }

void PointNavEnv::advance(std::span<const double> action, Rng&, StepResult& out) {
  s_.x = std::clamp(s_.x + kStepScale * action[0], -kArenaHalfWidth, kArenaHalfWidth);
  s_.y = std::clamp(s_.y + kStepScale * action[1], -kArenaHalfWidth, kArenaHalfWidth);
  const double d = distance_to_goal(s_, task());
  out.shaped_reward = reach_shaped_reward(d);
  out.sparse_reward = d <= kGoalRadius ? 1.0 : 0.0;
  out.info["distance"] = d;
  out.info["x"] = s_.x;
  out.info["y"] = s_.y;
}

}  // namespace pointnav
}  // namespace latentmeta::envs
