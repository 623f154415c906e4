#pragma once

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "latentmeta/loop/meta_loop.hpp"

namespace latentmeta::harness {

struct RunOptions {
  std::filesystem::path run_dir;
  /// Continue from run_dir/checkpoints/resume when present.
  bool resume = true;
  /// Stop after this many outer iterations in this invocation (< 0: no cap).
  int max_iterations = -1;
  std::string command = "train";
  std::ostream* log = nullptr;
};

/// Warmstart then alternate collection and training until the step budget,
/// appending metrics, writing periodic checkpoints and a resumable state
/// after every iteration. Returns the final checkpoint directory
/// (run_dir/checkpoints/final, with replay) or the resume directory when
/// stopped early.
std::filesystem::path meta_train(const loop::TrainConfig& cfg, const RunOptions& options);

/// Sparse-evidence stage seeded from a finished shaped run's checkpoint.
std::filesystem::path train_sparse_stage(const std::filesystem::path& shaped_checkpoint, const loop::TrainConfig& cfg,
                                         const RunOptions& options);

/// Per-trial results as JSON (returns, success, diagnostics, wall clock).
nlohmann::json trial_to_json(const loop::TrialResult& r);
nlohmann::json summary_to_json(const loop::EvalSummary& s);

}  // namespace latentmeta::harness
