#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "latentmeta/loop/meta_loop.hpp"

namespace latentmeta::harness {

inline constexpr int kCheckpointFormat = 1;

/// Contents of a checkpoint's manifest.json.
struct CheckpointInfo {
  int format = kCheckpointFormat;
  int stage = 1;
  int iteration = 0;
  std::int64_t env_steps = 0;
  std::string model_architecture;
  std::string agent_architecture;
  bool has_replay = false;
  loop::TrainConfig config;
};

/// Writes a checkpoint directory (parameter archives, optimizer and random
/// stream state, optional replay, manifest). The directory is replaced
/// atomically.
void write_checkpoint(loop::MetaTrainer& trainer, const std::filesystem::path& dir, bool with_replay);

CheckpointInfo read_checkpoint_info(const std::filesystem::path& dir);

/// Rebuilds the trainer from the checkpoint's own config snapshot. Throws
/// ConfigError on a format or architecture mismatch.
std::unique_ptr<loop::MetaTrainer> load_checkpoint(const std::filesystem::path& dir);

}  // namespace latentmeta::harness
