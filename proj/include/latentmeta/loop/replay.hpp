#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <vector>

#include "latentmeta/core/random.hpp"
#include "latentmeta/loop/trajectory.hpp"

namespace latentmeta::loop {

/// Whole-trajectory ring buffer for one task, capped by timesteps.
/// Oldest trajectories are evicted first; trajectories are never split.
class ReplayBuffer {
 public:
  ReplayBuffer(int task_id, std::int64_t capacity_steps);

  void add(Trajectory traj);
  const Trajectory& sample(Rng& rng) const;

  int task_id() const { return task_id_; }
  std::int64_t capacity() const { return capacity_; }
  std::int64_t num_steps() const { return steps_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  const std::deque<Trajectory>& trajectories() const { return data_; }

 private:
  int task_id_;
  std::int64_t capacity_;
  std::int64_t steps_ = 0;
  std::deque<Trajectory> data_;
};

/// One buffer per training task. Adding a trajectory tagged with a task that
/// has no buffer throws.
class ReplayBufferSet {
 public:
  ReplayBufferSet() = default;
  ReplayBufferSet(int num_tasks, std::int64_t capacity_steps);

  void add(Trajectory traj);
  ReplayBuffer& at(int task_id);
  const ReplayBuffer& at(int task_id) const;
  int num_tasks() const { return static_cast<int>(buffers_.size()); }
  std::int64_t total_steps() const;
  /// Task ids whose buffer holds at least one trajectory.
  std::vector<int> nonempty_tasks() const;

  void save(const std::filesystem::path& file) const;
  /// Replaces the contents with the archive at `file`.
  void load(const std::filesystem::path& file);

 private:
  std::vector<ReplayBuffer> buffers_;
};

}  // namespace latentmeta::loop
