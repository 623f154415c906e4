#pragma once

#include <array>

#include "latentmeta/envs/environment.hpp"

namespace latentmeta::envs::buttonpanel {

// K buttons on a horizontal line; each task picks the correct button and
// shifts the whole panel by an offset in [-kMaxOffset, kMaxOffset]^2.
inline constexpr int kNumButtons = 4;
inline constexpr double kButtonSpacing = 0.4;
inline constexpr double kPanelY = 0.5;
inline constexpr double kMaxOffset = 0.1;
inline constexpr double kPressRadius = 0.1;
inline constexpr double kStepScale = 0.1;
inline constexpr double kHomeX = 0.0;
inline constexpr double kHomeY = -0.5;
inline constexpr double kArenaHalfWidth = 1.0;

struct State {
  double x = kHomeX;
  double y = kHomeY;
};

std::array<double, 2> button_position(const Task& task, int button);
/// Index of the button within press radius of the effector, or -1.
int pressed_button(const State& s, const Task& task);
double shaped_reward(const State& s, const Task& task);
double sparse_reward(const State& s, const Task& task);
/// All buttons drawn identically; depends on the panel offset but never
/// on which button is correct.
Observation render_obs(const State& s, const Task& task, int image_size);

class ButtonPanelEnv final : public Environment {
 public:
  ButtonPanelEnv(Task task, EnvConfig config) : Environment(std::move(task), std::move(config)) {}

  int action_dim() const override { return 2; }
  std::vector<std::int64_t> obs_shape() const override;
  std::vector<double> state() const override { return {s_.x, s_.y}; }
  Observation render() const override;

 protected:
  void reset_state(Rng& rng) override;
  void advance(std::span<const double> action, Rng& rng, StepResult& out) override;

 private:
  State s_;
};

}  // namespace latentmeta::envs::buttonpanel
