// Command-line front end: training, evaluation, plotting and oracle checks.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/harness/checkpoint.hpp"
#include "latentmeta/harness/config.hpp"
#include "latentmeta/harness/manifest.hpp"
#include "latentmeta/harness/plots.hpp"
#include "latentmeta/harness/run.hpp"
#include "latentmeta/loop/metrics.hpp"
#include "latentmeta/oracles/checks.hpp"

namespace fs = std::filesystem;
namespace lm = latentmeta;
using nlohmann::json;

namespace {

lm::loop::TrainConfig read_config(const std::string& path, const std::vector<std::string>& sets) {
  lm::loop::TrainConfig cfg = path.empty() ? lm::loop::TrainConfig{} : lm::harness::load_config(path);
  return lm::harness::apply_overrides(cfg, sets);
}

fs::path default_run_dir(const lm::loop::TrainConfig& cfg, const std::string& suffix) {
  return lm::harness::output_root() / (cfg.family + "-" + lm::harness::config_hash(cfg) + suffix);
}

void write_json(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw lm::UsageError("cannot write " + path);
  out << j.dump(2) << '\n';
}

int run_oracle_check(std::uint64_t seed) {
  const auto kl = lm::oracles::check_kl_monte_carlo(100, 100000, 3.0, seed);
  const auto kf = lm::oracles::check_kalman_dense(20, 3, 1e-10, seed + 1);
  std::cout << (kl.pass ? "PASS" : "FAIL") << "  gaussian_kl vs Monte Carlo: " << kl.detail << '\n';
  std::cout << (kf.pass ? "PASS" : "FAIL") << "  kalman_filter vs dense conditioning: " << kf.detail << '\n';
  return kl.pass && kf.pass ? 0 : static_cast<int>(lm::ExitCode::kValidation);
}

}  // namespace

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  CLI::App app{"Meta-RL with latent task inference: training, evaluation and diagnostics"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string run_dir;
  bool no_resume = false;
  int max_iterations = -1;

  auto* train = app.add_subcommand("train", "meta-train on shaped rewards");
  train->add_option("-c,--config", config_path, "JSON run config (absent keys take defaults)");
  train->add_option("-s,--set", sets, "override a config key, key=value");
  train->add_option("--run-dir", run_dir, "output directory (default $LATENTMETA_OUT/<family>-<hash>)");
  train->add_flag("--no-resume", no_resume, "start over even if a checkpoint exists");
  train->add_option("--max-iterations", max_iterations, "stop after N outer iterations");

  std::string shaped_ckpt;
  auto* sparse = app.add_subcommand("train-sparse", "sparse-evidence stage seeded from a shaped checkpoint");
  sparse->add_option("--shaped", shaped_ckpt, "checkpoint directory of the shaped run")->required();
  sparse->add_option("-c,--config", config_path, "JSON run config");
  sparse->add_option("-s,--set", sets, "override a config key, key=value");
  sparse->add_option("--run-dir", run_dir, "output directory");
  sparse->add_flag("--no-resume", no_resume, "start over even if a checkpoint exists");
  sparse->add_option("--max-iterations", max_iterations, "stop after N outer iterations");

  std::string checkpoint, out_path, traj_path;
  int repetitions = 3, num_tasks = 0;
  std::uint64_t task_seed = 0;
  bool has_task_seed = false;
  auto* eval = app.add_subcommand("eval", "meta-test a checkpoint on held-out tasks");
  eval->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  eval->add_option("--repetitions", repetitions, "trials per task")->check(CLI::PositiveNumber);
  eval->add_option("--tasks", num_tasks, "number of tasks (default: the config's eval tasks)");
  auto* seed_opt = eval->add_option("--task-seed", task_seed, "sample fresh tasks with this seed");
  eval->add_option("-o,--out", out_path, "results JSON (default stdout)");
  eval->add_option("--trajectories", traj_path, "write line-delimited trajectory records here");

  int targets = 3;
  auto* nonstat = app.add_subcommand("eval-nonstationary", "within-episode target switches on veltrack");
  nonstat->add_option("--checkpoint", checkpoint, "veltrack checkpoint directory")->required();
  nonstat->add_option("--targets", targets, "targets per episode")->check(CLI::PositiveNumber);
  nonstat->add_option("--tasks", num_tasks, "number of tasks (default 10)");
  nonstat->add_option("--repetitions", repetitions, "trials per task")->check(CLI::PositiveNumber);
  auto* ns_seed_opt = nonstat->add_option("--task-seed", task_seed, "task sampling seed");
  nonstat->add_option("-o,--out", out_path, "results JSON (default stdout)");

  std::vector<std::string> metrics_files;
  std::string results_file, plot_dir = "plots";
  double threshold = 0.8;
  auto* plot = app.add_subcommand("plot", "learning curves and per-trial diagnostics as SVG");
  plot->add_option("-m,--metrics", metrics_files, "metrics.csv files");
  plot->add_option("-r,--results", results_file, "eval results JSON for per-trial plots");
  plot->add_option("-o,--out", plot_dir, "output directory");
  plot->add_option("--threshold", threshold, "success threshold line");

  std::uint64_t oracle_seed = 1;
  auto* oracle = app.add_subcommand("oracle-check", "verify closed forms against independent references");
  oracle->add_option("--seed", oracle_seed, "seed for random cases");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(lm::ExitCode::kValidation);
  }
  has_task_seed = seed_opt->count() > 0 || ns_seed_opt->count() > 0;

  try {
    if (*train) {
      const auto cfg = read_config(config_path, sets);
      lm::harness::RunOptions opt;
      opt.run_dir = run_dir.empty() ? default_run_dir(cfg, "") : fs::path(run_dir);
      opt.resume = !no_resume;
      opt.max_iterations = max_iterations;
      opt.command = "train";
      opt.log = &std::cerr;
      std::cout << lm::harness::meta_train(cfg, opt).string() << '\n';
    } else if (*sparse) {
      const auto cfg = config_path.empty() && sets.empty()
                           ? lm::harness::read_checkpoint_info(shaped_ckpt).config
                           : read_config(config_path, sets);
      lm::harness::RunOptions opt;
      opt.run_dir = run_dir.empty() ? default_run_dir(cfg, "-sparse") : fs::path(run_dir);
      opt.resume = !no_resume;
      opt.max_iterations = max_iterations;
      opt.command = "train-sparse";
      opt.log = &std::cerr;
      std::cout << lm::harness::train_sparse_stage(shaped_ckpt, cfg, opt).string() << '\n';
    } else if (*eval) {
      auto trainer = lm::harness::load_checkpoint(checkpoint);
      const auto& cfg = trainer->config();
      auto tasks = trainer->eval_tasks();
      if (has_task_seed || num_tasks > 0) {
        if (has_task_seed && task_seed == cfg.train_task_seed)
          throw lm::ConfigError("--task-seed must differ from the training task seed");
        tasks = lm::envs::sample_tasks(lm::envs::parse_family(cfg.family), num_tasks > 0 ? num_tasks : cfg.num_eval_tasks,
                                       has_task_seed ? task_seed : cfg.eval_task_seed, cfg.env);
      }
      std::vector<lm::loop::Trajectory> trajs;
      const auto results = trainer->meta_test(tasks, repetitions, traj_path.empty() ? nullptr : &trajs);
      const auto channel = lm::envs::is_sparse_family(lm::envs::parse_family(cfg.family))
                               ? lm::loop::RewardChannel::kSparse
                               : lm::loop::RewardChannel::kShaped;
      json j;
      j["summary"] = lm::harness::summary_to_json(lm::loop::summarize(results));
      j["trials"] = json::array();
      for (std::size_t i = 0; i < results.size(); ++i) {
        auto t = lm::harness::trial_to_json(results[i]);
        if (!trajs.empty()) {
          const auto r = trajs[i].reward(channel).to(torch::kFloat64).contiguous();
          t["reward"] = std::vector<double>(r.data_ptr<double>(), r.data_ptr<double>() + r.numel());
        }
        j["trials"].push_back(t);
      }
      if (!traj_path.empty()) {
        std::ofstream out(traj_path);
        for (std::size_t i = 0; i < trajs.size(); ++i)
          lm::loop::write_trajectory_log(out, trajs[i], channel, "trial" + std::to_string(i));
      }
      write_json(out_path, j);
    } else if (*nonstat) {
      auto trainer = lm::harness::load_checkpoint(checkpoint);
      const auto& cfg = trainer->config();
      if (cfg.family != "veltrack") throw lm::ConfigError("eval-nonstationary needs a veltrack checkpoint");
      auto env = cfg.env;
      env.veltrack_targets = targets;
      const auto tasks = lm::envs::sample_tasks(lm::envs::Family::kVelTrack, num_tasks > 0 ? num_tasks : 10,
                                                has_task_seed ? task_seed : cfg.eval_task_seed, env);
      const auto res = lm::loop::nonstationary_eval(*trainer, tasks, repetitions);
      json j;
      int ok = 0;
      j["trials"] = json::array();
      for (const auto& r : res) {
        const bool tracked = lm::loop::tracked_all_switches(r.steps_to_track, 10);
        ok += tracked ? 1 : 0;
        auto t = lm::harness::trial_to_json(r.trial);
        t["switch_times"] = r.switch_times;
        t["steps_to_track"] = r.steps_to_track;
        t["tracking_error"] = r.tracking_error;
        t["tracked_all_switches"] = tracked;
        j["trials"].push_back(t);
      }
      j["tracked_fraction"] = res.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(res.size());
      write_json(out_path, j);
    } else if (*plot) {
      std::vector<fs::path> files(metrics_files.begin(), metrics_files.end());
      std::vector<fs::path> written;
      if (!files.empty()) written = lm::harness::emit_plots(files, plot_dir, threshold);
      if (!results_file.empty()) {
        auto more = lm::harness::emit_trial_plots(results_file, plot_dir);
        written.insert(written.end(), more.begin(), more.end());
      }
      if (files.empty() && results_file.empty()) throw lm::UsageError("plot needs --metrics or --results");
      for (const auto& w : written) std::cout << w.string() << '\n';
    } else if (*oracle) {
      return run_oracle_check(oracle_seed);
    }
  } catch (const lm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(lm::ExitCode::kValidation);
  }
  return 0;
}
