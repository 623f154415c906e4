#pragma once

#include <torch/torch.h>

#include <iosfwd>
#include <string>
#include <vector>

#include "latentmeta/agent/sac.hpp"
#include "latentmeta/model/latent_model.hpp"

namespace latentmeta::loop {

enum class RewardChannel { kShaped, kSparse };

RewardChannel parse_channel(const std::string& name);
std::string to_string(RewardChannel channel);

/// One trial (1 or more episodes of `horizon` timesteps) under one task.
/// Row t (0-based) is timestep t+1; `actions[t]` is the action executed
/// after observing row t and is zero on the last timestep of each episode.
struct Trajectory {
  int task_id = -1;
  int episodes = 1;
  int horizon = 0;
  torch::Tensor obs;      // [N, ...] uint8 (images, value*255) or float32
  torch::Tensor actions;  // [N, d] float32
  torch::Tensor shaped;   // [N] float32
  torch::Tensor sparse;   // [N] float32
  torch::Tensor states;   // [N, s] float64, physical state for diagnostics

  std::int64_t length() const { return obs.defined() ? obs.size(0) : 0; }
  bool episode_first(std::int64_t t) const { return t % horizon == 0; }
  bool episode_last(std::int64_t t) const { return t % horizon == horizon - 1; }

  /// Observations as float in [0, 1] (images) or raw (vectors).
  torch::Tensor obs_float() const;
  /// [N, d + 1]: row t = (a_{t-1}, 1 if t starts a later episode).
  torch::Tensor prev_action_input() const;
  const torch::Tensor& reward(RewardChannel channel) const {
    return channel == RewardChannel::kShaped ? shaped : sparse;
  }
};

/// Stacks trajectories of equal length into a model batch.
model::SequenceBatch make_sequence_batch(const std::vector<const Trajectory*>& trajs, RewardChannel evidence,
                                         RewardChannel target);

/// Decision-point transitions inside a trial of `episodes` x `horizon` steps.
/// A transition starts at every timestep that executes an action and ends
/// at the next one; the last timestep of an inner episode is folded into
/// the transition that reaches it (its reward is kept, its belief skipped),
/// and the final timestep of the trial is terminal.
struct TransitionLayout {
  torch::Tensor from;    // [M] int64
  torch::Tensor to;      // [M] int64 (next decision point, or last step if terminal)
  torch::Tensor reward;  // [M] int64 timestep whose reward is collected
  torch::Tensor done;    // [M] float32
};
TransitionLayout transition_layout(int episodes, int horizon);

/// Flattens per-timestep belief features [B, N, F] into SAC transitions.
/// With terminal false the end of the trial is treated as a time limit and
/// every transition bootstraps.
agent::TransitionBatch make_transitions(const torch::Tensor& features, const std::vector<const Trajectory*>& trajs,
                                        RewardChannel reward, bool terminal = true);

/// Line-delimited records: t, obs_ref, action, reward, shaped_reward, done, task_id.
void write_trajectory_log(std::ostream& os, const Trajectory& traj, RewardChannel reward, const std::string& ref);

}  // namespace latentmeta::loop
