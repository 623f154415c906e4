#include "latentmeta/loop/replay.hpp"

#include <string>

#include "latentmeta/core/errors.hpp"

namespace latentmeta::loop {

ReplayBuffer::ReplayBuffer(int task_id, std::int64_t capacity_steps) : task_id_(task_id), capacity_(capacity_steps) {
  if (capacity_steps < 1) throw ConfigError("replay capacity must be positive");
}

void ReplayBuffer::add(Trajectory traj) {
  if (traj.task_id != task_id_) {
    throw UsageError("trajectory for task " + std::to_string(traj.task_id) + " added to buffer of task " +
                     std::to_string(task_id_));
  }
  const auto n = traj.length();
  if (n < 1) throw UsageError("empty trajectory");
  if (n > capacity_) throw UsageError("trajectory longer than replay capacity");
  while (steps_ + n > capacity_) {
    steps_ -= data_.front().length();
    data_.pop_front();
  }
  steps_ += n;
  data_.push_back(std::move(traj));
}

const Trajectory& ReplayBuffer::sample(Rng& rng) const {
  if (data_.empty()) throw UsageError("sampling from empty replay buffer of task " + std::to_string(task_id_));
  return data_[static_cast<std::size_t>(rng.index(static_cast<std::int64_t>(data_.size())))];
}

ReplayBufferSet::ReplayBufferSet(int num_tasks, std::int64_t capacity_steps) {
  for (int i = 0; i < num_tasks; ++i) buffers_.emplace_back(i, capacity_steps);
}

void ReplayBufferSet::add(Trajectory traj) { at(traj.task_id).add(std::move(traj)); }

ReplayBuffer& ReplayBufferSet::at(int task_id) {
  if (task_id < 0 || task_id >= num_tasks()) throw UsageError("no replay buffer for task " + std::to_string(task_id));
  return buffers_[static_cast<std::size_t>(task_id)];
}

const ReplayBuffer& ReplayBufferSet::at(int task_id) const {
  if (task_id < 0 || task_id >= num_tasks()) throw UsageError("no replay buffer for task " + std::to_string(task_id));
  return buffers_[static_cast<std::size_t>(task_id)];
}

std::int64_t ReplayBufferSet::total_steps() const {
  std::int64_t s = 0;
  for (const auto& b : buffers_) s += b.num_steps();
  return s;
}

std::vector<int> ReplayBufferSet::nonempty_tasks() const {
  std::vector<int> out;
  for (const auto& b : buffers_)
    if (!b.empty()) out.push_back(b.task_id());
  return out;
}

void ReplayBufferSet::save(const std::filesystem::path& file) const {
  torch::serialize::OutputArchive ar;
  std::vector<std::int64_t> meta{static_cast<std::int64_t>(buffers_.size()),
                                 buffers_.empty() ? 0 : buffers_.front().capacity()};
  ar.write("meta", torch::tensor(meta, torch::kInt64));
  for (const auto& b : buffers_) {
    const std::string pre = "b" + std::to_string(b.task_id());
    ar.write(pre + "/count", torch::tensor(static_cast<std::int64_t>(b.size())));
    std::int64_t j = 0;
    for (const auto& t : b.trajectories()) {
      const std::string p = pre + "/t" + std::to_string(j++) + "/";
      ar.write(p + "shape", torch::tensor(std::vector<std::int64_t>{t.episodes, t.horizon}, torch::kInt64));
      ar.write(p + "obs", t.obs);
      ar.write(p + "actions", t.actions);
      ar.write(p + "shaped", t.shaped);
      ar.write(p + "sparse", t.sparse);
      ar.write(p + "states", t.states);
    }
  }
  ar.save_to(file.string());
}

void ReplayBufferSet::load(const std::filesystem::path& file) {
  torch::serialize::InputArchive ar;
  ar.load_from(file.string());
  torch::Tensor meta;
  ar.read("meta", meta);
  const int n = static_cast<int>(meta[0].item<std::int64_t>());
  *this = ReplayBufferSet(n, meta[1].item<std::int64_t>());
  for (int i = 0; i < n; ++i) {
    const std::string pre = "b" + std::to_string(i);
    torch::Tensor count;
    ar.read(pre + "/count", count);
    for (std::int64_t j = 0; j < count.item<std::int64_t>(); ++j) {
      const std::string p = pre + "/t" + std::to_string(j) + "/";
      Trajectory t;
      torch::Tensor shape;
      ar.read(p + "shape", shape);
      t.task_id = i;
      t.episodes = static_cast<int>(shape[0].item<std::int64_t>());
      t.horizon = static_cast<int>(shape[1].item<std::int64_t>());
      ar.read(p + "obs", t.obs);
      ar.read(p + "actions", t.actions);
      ar.read(p + "shaped", t.shaped);
      ar.read(p + "sparse", t.sparse);
      ar.read(p + "states", t.states);
      at(i).add(std::move(t));
    }
  }
}

}  // namespace latentmeta::loop
