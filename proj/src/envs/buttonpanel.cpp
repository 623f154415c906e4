#include "latentmeta/envs/buttonpanel.hpp"

#include <algorithm>
#include <cmath>

#include "latentmeta/envs/pointnav.hpp"
#include "latentmeta/envs/render.hpp"

namespace latentmeta::envs::buttonpanel {

namespace {
int correct_button(const Task& task) { return static_cast<int>(task.params[0]); }
}  // namespace

std::array<double, 2> button_position(const Task& task, int button) {
  const double x0 = -0.5 * kButtonSpacing * (kNumButtons - 1);
  return {x0 + kButtonSpacing * button + task.params[1], kPanelY + task.params[2]};
}

int pressed_button(const State& s, const Task& task) {
  for (int b = 0; b < kNumButtons; ++b) {
    const auto p = button_position(task, b);
    if (std::hypot(s.x - p[0], s.y - p[1]) <= kPressRadius) return b;
  }
  return -1;
}

double shaped_reward(const State& s, const Task& task) {
  const auto p = button_position(task, correct_button(task));
  return reach_shaped_reward(std::hypot(s.x - p[0], s.y - p[1]));
}

double sparse_reward(const State& s, const Task& task) {
  return pressed_button(s, task) == correct_button(task) ? 1.0 : 0.0;
}

Observation render_obs(const State& s, const Task& task, int image_size) {
  Canvas canvas(image_size, kArenaHalfWidth);
  const auto left = button_position(task, 0);
  const auto right = button_position(task, kNumButtons - 1);
  canvas.rect(left[0] - 0.2, left[1] - 0.15, right[0] + 0.2, right[1] + 0.15, 0.2f);
  for (int b = 0; b < kNumButtons; ++b) {
    const auto p = button_position(task, b);
    canvas.disk(p[0], p[1], 0.08, 0.5f);
  }
  canvas.disk(s.x, s.y, 0.08, 1.0f);
  return canvas.finish();
}

std::vector<std::int64_t> ButtonPanelEnv::obs_shape() const {
  return {1, config().image_size, config().image_size};
}

Observation ButtonPanelEnv::render() const { return render_obs(s_, task(), config().image_size); }

void ButtonPanelEnv::reset_state(Rng&) { s_ = State{}; }

void ButtonPanelEnv::advance(std::span<const double> action, Rng&, StepResult& out) {
  s_.x = std::clamp(s_.x + kStepScale * action[0], -kArenaHalfWidth, kArenaHalfWidth);
  s_.y = std::clamp(s_.y + kStepScale * action[1], -kArenaHalfWidth, kArenaHalfWidth);
  out.shaped_reward = shaped_reward(s_, task());
  out.sparse_reward = sparse_reward(s_, task());
  out.info["pressed"] = pressed_button(s_, task());
  out.info["x"] = s_.x;
  out.info["y"] = s_.y;
}

}  // namespace latentmeta::envs::buttonpanel
