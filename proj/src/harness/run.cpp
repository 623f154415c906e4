#include "latentmeta/harness/run.hpp"

#include <ostream>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/harness/checkpoint.hpp"
#include "latentmeta/harness/config.hpp"
#include "latentmeta/harness/manifest.hpp"
#include "latentmeta/harness/metrics_log.hpp"

namespace latentmeta::harness {

namespace fs = std::filesystem;

namespace {

void log_row(std::ostream* log, const loop::MetricsRow& row) {
  if (!log) return;
  *log << "stage " << row.stage << " iter " << row.iteration << " steps " << row.env_steps << " model_loss "
       << row.train.model_loss;
  if (row.eval) {
    *log << " eval_sparse";
    for (double v : row.eval->sparse_return) *log << ' ' << v;
    *log << " success";
    for (double v : row.eval->success_rate) *log << ' ' << v;
  }
  *log << std::endl;
}

/// Shared outer loop once the trainer is initialised or resumed.
fs::path drive(loop::MetaTrainer& trainer, const RunOptions& opt, MetricsWriter& metrics) {
  const fs::path ckpt = opt.run_dir / "checkpoints";
  const auto& cfg = trainer.config();
  int done_here = 0;
  while (!trainer.finished()) {
    if (opt.max_iterations >= 0 && done_here >= opt.max_iterations) return ckpt / "resume";
    auto row = trainer.iterate();
    ++done_here;
    metrics.append(row);
    log_row(opt.log, row);
    if (trainer.iteration() % cfg.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "iter_%06d", trainer.iteration());
      write_checkpoint(trainer, ckpt / name, false);
    }
    write_checkpoint(trainer, ckpt / "resume", true);
  }
  write_checkpoint(trainer, ckpt / "final", true);
  return ckpt / "final";
}

void check_same_config(const loop::TrainConfig& a, const loop::TrainConfig& b) {
  if (!(a == b)) throw ConfigError("run directory holds a checkpoint for a different config");
}

}  // namespace

fs::path meta_train(const loop::TrainConfig& cfg, const RunOptions& opt) {
  loop::validate(cfg);
  fs::create_directories(opt.run_dir);
  const fs::path resume = opt.run_dir / "checkpoints" / "resume";
  const fs::path final_dir = opt.run_dir / "checkpoints" / "final";
  const fs::path metrics_path = opt.run_dir / "metrics.csv";
  if (opt.resume && fs::exists(final_dir / "manifest.json")) {
    check_same_config(read_checkpoint_info(final_dir).config, cfg);
    return final_dir;
  }
  if (opt.resume && fs::exists(resume / "manifest.json")) {
    auto trainer = load_checkpoint(resume);
    check_same_config(trainer->config(), cfg);
    truncate_metrics(metrics_path, static_cast<int>(trainer->stage()), trainer->iteration());
    MetricsWriter metrics(metrics_path);
    return drive(*trainer, opt, metrics);
  }
  fs::remove_all(opt.run_dir / "checkpoints");
  fs::remove(metrics_path);
  save_config(cfg, opt.run_dir / "config.json");
  RunManifest::create(cfg, opt.run_dir, opt.command).write(opt.run_dir / "manifest.json");
  MetricsWriter metrics(metrics_path);
  loop::MetaTrainer trainer(cfg, loop::Stage::kShaped);
  auto row = trainer.warmstart_row(trainer.warmstart());
  metrics.append(row);
  log_row(opt.log, row);
  write_checkpoint(trainer, resume, true);
  return drive(trainer, opt, metrics);
}

fs::path train_sparse_stage(const fs::path& shaped_checkpoint, const loop::TrainConfig& cfg, const RunOptions& opt) {
  loop::validate(cfg);
  const auto info = read_checkpoint_info(shaped_checkpoint);
  if (info.stage != 1) throw ConfigError("sparse stage must start from a shaped-reward checkpoint");
  if (!info.has_replay) throw ConfigError("shaped checkpoint " + shaped_checkpoint.string() + " has no replay data");
  fs::create_directories(opt.run_dir);
  const fs::path resume = opt.run_dir / "checkpoints" / "resume";
  const fs::path final_dir = opt.run_dir / "checkpoints" / "final";
  const fs::path metrics_path = opt.run_dir / "metrics.csv";
  if (opt.resume && fs::exists(final_dir / "manifest.json")) {
    check_same_config(read_checkpoint_info(final_dir).config, cfg);
    return final_dir;
  }
  if (opt.resume && fs::exists(resume / "manifest.json")) {
    auto trainer = load_checkpoint(resume);
    check_same_config(trainer->config(), cfg);
    truncate_metrics(metrics_path, static_cast<int>(trainer->stage()), trainer->iteration());
    MetricsWriter metrics(metrics_path);
    return drive(*trainer, opt, metrics);
  }
  fs::remove_all(opt.run_dir / "checkpoints");
  fs::remove(metrics_path);
  save_config(cfg, opt.run_dir / "config.json");
  RunManifest::create(cfg, opt.run_dir, opt.command).write(opt.run_dir / "manifest.json");
  MetricsWriter metrics(metrics_path);
  auto shaped = load_checkpoint(shaped_checkpoint);
  loop::MetaTrainer trainer(cfg, loop::Stage::kSparse);
  trainer.seed_from(*shaped, fs::absolute(shaped_checkpoint / "replay.pt"));
  shaped.reset();
  auto row = trainer.warmstart_row(trainer.warmstart());
  metrics.append(row);
  log_row(opt.log, row);
  write_checkpoint(trainer, resume, true);
  return drive(trainer, opt, metrics);
}

nlohmann::json trial_to_json(const loop::TrialResult& r) {
  std::vector<bool> success;
  for (int e = 0; e < r.episodes; ++e) success.push_back(r.success(e));
  return {{"task_id", r.task_id},
          {"episodes", r.episodes},
          {"horizon", r.horizon},
          {"shaped_return", r.shaped_return},
          {"sparse_return", r.sparse_return},
          {"success", success},
          {"first_success", r.first_success},
          {"reward_pred_mean", r.reward_pred_mean},
          {"reward_pred_var", r.reward_pred_var},
          {"belief_entropy", r.belief_entropy},
          {"wall_clock_s", r.wall_clock_s}};
}

nlohmann::json summary_to_json(const loop::EvalSummary& s) {
  return {{"trials", s.trials},
          {"shaped_return", s.shaped_return},
          {"sparse_return", s.sparse_return},
          {"success_rate", s.success_rate}};
}

}  // namespace latentmeta::harness
