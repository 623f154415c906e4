#pragma once

#include <vector>

#include "latentmeta/envs/task.hpp"
#include "latentmeta/loop/collect.hpp"

namespace latentmeta::loop {

/// Angular span (radians) of the goal semicircle examined during episode
/// `episode` of a pointnav trial, up to and including its first success.
/// Visited positions within one goal radius of the arc count; the span is
/// max - min of their angles plus the angular width of one goal disk, or 0
/// if the arc was never approached.
double arc_coverage(const Trajectory& traj, int episode);

/// Euclidean path length of the agent during one episode (2-D families).
double path_length(const Trajectory& traj, int episode);

/// Steps after each target switch until the velocity first enters the
/// tracking band, or -1 if it does not before the next switch (or the end).
/// Entry k corresponds to the k-th target (k = 0 is the initial one).
std::vector<int> steps_to_track(const Trajectory& traj, const envs::Task& task);

/// Every switch after the first target tracked within `max_steps`.
bool tracked_all_switches(const std::vector<int>& steps, int max_steps);

struct EvalSummary {
  int trials = 0;
  std::vector<double> shaped_return;  // mean per episode
  std::vector<double> sparse_return;
  std::vector<double> success_rate;
};

EvalSummary summarize(const std::vector<TrialResult>& results);

}  // namespace latentmeta::loop
