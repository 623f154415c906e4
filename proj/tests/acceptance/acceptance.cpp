// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if
// every selected criterion passes. Training runs are cached in --cache-dir.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/envs/environment.hpp"
#include "latentmeta/envs/pointnav.hpp"
#include "latentmeta/harness/checkpoint.hpp"
#include "latentmeta/harness/config.hpp"
#include "latentmeta/harness/run.hpp"
#include "latentmeta/loop/meta_loop.hpp"
#include "latentmeta/loop/metrics.hpp"
#include "latentmeta/oracles/checks.hpp"
#include "latentmeta/oracles/model_checks.hpp"

namespace fs = std::filesystem;
namespace lm = latentmeta;
using lm::loop::TrainConfig;

namespace {

// Criterion 1
constexpr int kKlPairs = 100;
constexpr int kKlSamples = 100000;
constexpr double kKlStdErrors = 3.0;
constexpr int kKalmanSystems = 20;
constexpr int kKalmanT = 3;
constexpr double kKalmanTol = 1e-10;
// Criterion 2
constexpr int kElboSystems = 5;
constexpr int kElboSamples = 100000;
constexpr double kElboTol = 1e-2;
constexpr int kPerturbations = 100;
constexpr int kPerturbSamples = 10000;
// Criterion 3
constexpr double kGradTol = 1e-4;
// Criteria 4-7
constexpr int kEvalTasks = 10;
constexpr int kEvalReps = 3;
constexpr double kSuccessThreshold = 0.8;
constexpr double kArcRatio = 2.0;
constexpr double kSingleTaskCeiling = 0.2;
constexpr double kNoAdaptBand = 0.10;
constexpr double kNoAdaptGap = 0.30;
constexpr int kTrackTargets = 3;
constexpr int kTrackMaxSteps = 10;
constexpr int kTrackTasks = 10;

constexpr std::uint64_t kOracleSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::ostream* g_log = nullptr;

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

TrainConfig nav_config(int train_tasks) {
  TrainConfig c;
  c.family = "pointnav2d";
  c.env.image_size = 16;
  c.num_train_tasks = train_tasks;
  c.num_eval_tasks = kEvalTasks;
  c.episodes_per_trial = 2;
  c.latent_dim = 16;
  c.model_hidden = {64, 64};
  c.conv_filters = {16, 32, 32};
  c.vector_encoder_hidden = 32;
  c.agent_hidden = {64, 64};
  c.warmstart_trajectories = 100;
  c.warmstart_model_steps = 2000;
  c.collect_tasks_per_iter = 10;
  c.tasks_per_update = 10;
  c.train_steps_per_epoch = 150;
  c.agent_updates_per_step = 4;
  c.model_batch_size = 400;
  c.critic_batch_size = 256;
  c.actor_batch_size = 256;
  c.model_lr = 1e-3;
  c.env_step_budget = 60000;
  c.stage2_env_step_budget = 30000;
  c.stage2_pretrain_steps = 500;
  c.eval_every = 5;
  c.checkpoint_every = 10;
  c.seed = 0;
  return c;
}

TrainConfig track_config() {
  TrainConfig c;
  c.family = "veltrack";
  c.env.veltrack_targets = kTrackTargets;
  c.num_train_tasks = 20;
  c.num_eval_tasks = kEvalTasks;
  c.episodes_per_trial = 1;
  c.latent_dim = 8;
  c.model_hidden = {64, 64};
  c.vector_encoder_hidden = 16;
  c.agent_hidden = {64, 64};
  c.warmstart_trajectories = 100;
  c.warmstart_model_steps = 10000;
  c.collect_tasks_per_iter = 10;
  c.tasks_per_update = 10;
  c.train_steps_per_epoch = 100;
  c.agent_updates_per_step = 8;
  c.model_batch_size = 500;
  c.critic_batch_size = 256;
  c.actor_batch_size = 256;
  c.model_lr = 1e-3;
  c.env_step_budget = 40000;
  c.eval_every = 5;
  c.checkpoint_every = 10;
  c.seed = 0;
  return c;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.env.image_size = 16;
  c.env.horizon = 5;
  c.num_train_tasks = 3;
  c.num_eval_tasks = 2;
  c.warmstart_trajectories = 6;
  c.warmstart_model_steps = 3;
  c.collect_tasks_per_iter = 2;
  c.train_steps_per_epoch = 3;
  c.tasks_per_update = 2;
  c.model_batch_size = 40;
  c.actor_batch_size = 8;
  c.critic_batch_size = 16;
  c.replay_capacity = 1000;
  c.env_step_budget = 120;
  c.stage2_env_step_budget = 40;
  c.stage2_pretrain_steps = 2;
  c.eval_every = 1;
  c.eval_repetitions = 2;
  c.checkpoint_every = 2;
  c.latent_dim = 4;
  c.model_hidden = {8};
  c.conv_filters = {4, 8};
  c.vector_encoder_hidden = 8;
  c.agent_hidden = {8};
  return c;
}

lm::harness::RunOptions run_options(const fs::path& dir, const std::string& command) {
  lm::harness::RunOptions o;
  o.run_dir = dir;
  o.command = command;
  o.log = g_log;
  return o;
}

/// Shaped stage then the sparse stage; both cached by config hash.
fs::path train_pipeline(const TrainConfig& cfg, const fs::path& cache, const std::string& name) {
  const auto tag = name + "-" + lm::harness::config_hash(cfg);
  if (g_log) *g_log << "[" << tag << "] shaped stage" << std::endl;
  const auto shaped = lm::harness::meta_train(cfg, run_options(cache / tag / "shaped", "train"));
  if (g_log) *g_log << "[" << tag << "] sparse stage" << std::endl;
  return lm::harness::train_sparse_stage(shaped, cfg, run_options(cache / tag / "sparse", "train-sparse"));
}

struct NavEval {
  std::vector<lm::loop::TrialResult> trials;
  std::vector<lm::loop::Trajectory> trajectories;
  lm::loop::EvalSummary summary;
  double arc_ep1 = 0.0;
};

NavEval evaluate_nav(const fs::path& ckpt) {
  auto trainer = lm::harness::load_checkpoint(ckpt);
  NavEval e;
  e.trials = trainer->meta_test(trainer->eval_tasks(), kEvalReps, &e.trajectories);
  e.summary = lm::loop::summarize(e.trials);
  for (const auto& t : e.trajectories) e.arc_ep1 += lm::loop::arc_coverage(t, 0);
  e.arc_ep1 /= static_cast<double>(e.trajectories.size());
  return e;
}

/// Heads straight for a uniformly drawn point of the goal arc and stays there.
double straight_to_random_goal_coverage(const std::vector<lm::envs::Task>& tasks, const lm::envs::EnvConfig& env,
                                        std::uint64_t seed) {
  namespace pn = lm::envs::pointnav;
  lm::Rng rng(seed);
  double total = 0.0;
  int count = 0;
  for (const auto& task : tasks) {
    for (int r = 0; r < kEvalReps; ++r) {
      const double ang = rng.uniform(0.0, std::numbers::pi);
      const double gx = pn::kSemicircleRadius * std::cos(ang);
      const double gy = pn::kSemicircleRadius * std::sin(ang);
      auto e = lm::envs::make_environment(task, env);
      e->reset(rng.next_u64());
      const int h = e->horizon();
      lm::loop::Trajectory traj;
      traj.episodes = 1;
      traj.horizon = h;
      traj.obs = torch::zeros({h, 1});
      traj.states = torch::zeros({h, 2}, torch::kDouble);
      traj.sparse = torch::zeros({h});
      auto record = [&](int t, double sparse) {
        const auto s = e->state();
        traj.states[t][0] = s[0];
        traj.states[t][1] = s[1];
        traj.sparse[t] = sparse;
      };
      record(0, 0.0);
      for (int t = 1; t < h; ++t) {
        const auto s = e->state();
        const double a[2] = {std::clamp((gx - s[0]) / pn::kStepScale, -1.0, 1.0),
                             std::clamp((gy - s[1]) / pn::kStepScale, -1.0, 1.0)};
        const auto out = e->step(a);
        record(t, out.sparse_reward);
      }
      total += lm::loop::arc_coverage(traj, 0);
      ++count;
    }
  }
  return total / count;
}

Outcome criterion1() {
  const auto kl = lm::oracles::check_kl_monte_carlo(kKlPairs, kKlSamples, kKlStdErrors, kOracleSeed);
  const auto kf = lm::oracles::check_kalman_dense(kKalmanSystems, kKalmanT, kKalmanTol, kOracleSeed + 1);
  return {kl.pass && kf.pass, "KL: " + kl.detail + "; Kalman: " + kf.detail};
}

Outcome criterion2() {
  const auto exact = lm::oracles::check_elbo_exact(kElboSystems, kElboSamples, kElboTol, kOracleSeed + 2);
  const auto bound = lm::oracles::check_elbo_bound(kPerturbations, kPerturbSamples, kOracleSeed + 3);
  return {exact.pass && bound.pass, exact.detail + "; " + bound.detail};
}

Outcome criterion3() {
  const auto g = lm::oracles::check_gradients(kGradTol, kOracleSeed + 4);
  return {g.elbo.pass && g.actor.pass && g.critic.pass, g.elbo.detail + "; " + g.actor.detail + "; " + g.critic.detail};
}

struct NavRuns {
  bool have_full = false;
  NavEval full;
};

Outcome criterion4(const fs::path& cache, NavRuns& runs) {
  const auto cfg = nav_config(20);
  runs.full = evaluate_nav(train_pipeline(cfg, cache, "nav20"));
  runs.have_full = true;
  const auto& s = runs.full.summary;
  const double baseline =
      straight_to_random_goal_coverage(lm::envs::sample_tasks(lm::envs::Family::kPointNav2d, kEvalTasks,
                                                              cfg.eval_task_seed, cfg.env),
                                       cfg.env, kOracleSeed + 5);
  const bool returns_up = s.sparse_return[1] > s.sparse_return[0];
  const bool success = s.success_rate[1] >= kSuccessThreshold;
  const bool explores = runs.full.arc_ep1 >= kArcRatio * baseline;
  return {returns_up && success && explores,
          "sparse return ep1 " + fmt(s.sparse_return[0]) + " ep2 " + fmt(s.sparse_return[1]) + "; success ep1 " +
              fmt(s.success_rate[0]) + " ep2 " + fmt(s.success_rate[1]) + " (need >= " + fmt(kSuccessThreshold) +
              "); ep1 arc coverage " + fmt(runs.full.arc_ep1) + " rad vs straight-to-random-goal " + fmt(baseline) +
              " (need ratio >= " + fmt(kArcRatio) + ")"};
}

Outcome criterion5(const fs::path& cache, NavRuns& runs) {
  if (!runs.have_full) criterion4(cache, runs);
  const auto single = evaluate_nav(train_pipeline(nav_config(1), cache, "nav1"));
  const double one = single.summary.success_rate[1];
  const double many = runs.full.summary.success_rate[1];
  return {one < kSingleTaskCeiling && many >= kSuccessThreshold,
          "held-out ep2 success with 1 training task " + fmt(one) + " (need < " + fmt(kSingleTaskCeiling) +
              "), with 20 tasks " + fmt(many) + " (need >= " + fmt(kSuccessThreshold) + ")"};
}

Outcome criterion6(const fs::path& cache, NavRuns& runs) {
  if (!runs.have_full) criterion4(cache, runs);
  auto cfg = nav_config(20);
  cfg.reward_evidence = false;
  const auto blind = evaluate_nav(train_pipeline(cfg, cache, "nav20-noreward"));
  const double e1 = blind.summary.success_rate[0];
  const double e2 = blind.summary.success_rate[1];
  const double full = runs.full.summary.success_rate[1];
  return {std::abs(e2 - e1) <= kNoAdaptBand && e2 <= full - kNoAdaptGap,
          "no-reward-evidence success ep1 " + fmt(e1) + " ep2 " + fmt(e2) + " (need |diff| <= " + fmt(kNoAdaptBand) +
              "); full model ep2 " + fmt(full) + " (need gap >= " + fmt(kNoAdaptGap) + ")"};
}

Outcome criterion7(const fs::path& cache) {
  const auto cfg = track_config();
  const auto tag = "track-" + lm::harness::config_hash(cfg);
  if (g_log) *g_log << "[" << tag << "] shaped stage" << std::endl;
  const auto ckpt = lm::harness::meta_train(cfg, run_options(cache / tag, "train"));
  auto trainer = lm::harness::load_checkpoint(ckpt);
  auto env = cfg.env;
  env.veltrack_targets = kTrackTargets;
  const auto tasks = lm::envs::sample_tasks(lm::envs::Family::kVelTrack, kTrackTasks, cfg.eval_task_seed, env);
  const auto res = lm::loop::nonstationary_eval(*trainer, tasks, kEvalReps);
  int ok = 0;
  double worst_mean = 0.0;
  for (const auto& r : res) {
    ok += lm::loop::tracked_all_switches(r.steps_to_track, kTrackMaxSteps) ? 1 : 0;
    for (std::size_t k = 1; k < r.steps_to_track.size(); ++k)
      worst_mean += r.steps_to_track[k] < 0 ? kTrackMaxSteps + 1 : r.steps_to_track[k];
  }
  const double frac = static_cast<double>(ok) / static_cast<double>(res.size());
  worst_mean /= static_cast<double>(res.size() * (kTrackTargets - 1));
  return {frac >= kSuccessThreshold,
          std::to_string(ok) + "/" + std::to_string(res.size()) + " episodes track every switch within " +
              std::to_string(kTrackMaxSteps) + " steps (need >= " + fmt(kSuccessThreshold) +
              "); mean steps after a switch " + fmt(worst_mean)};
}

double pinned_batch_loss(lm::loop::MetaTrainer& trainer) {
  std::vector<const lm::loop::Trajectory*> trajs;
  for (int id : trainer.buffers().nonempty_tasks()) trajs.push_back(&trainer.buffers().at(id).trajectories().front());
  auto batch = lm::loop::make_sequence_batch(trajs, trainer.evidence_channel(), lm::loop::RewardChannel::kShaped)
                   .to(torch::TensorOptions().dtype(lm::loop::config_dtype(trainer.config())));
  auto gen = lm::make_generator(12345);
  torch::NoGradGuard ng;
  return trainer.model()->elbo_loss(batch, gen).loss.item<double>();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion8(const fs::path& cache) {
  const auto cfg = tiny_config();
  std::vector<std::string> traces;
  fs::path final_a;
  for (const char* name : {"a", "b"}) {
    const auto dir = cache / "determinism" / name;
    fs::remove_all(dir);
    auto opt = run_options(dir / "shaped", "train");
    opt.resume = false;
    opt.log = nullptr;
    const auto shaped = lm::harness::meta_train(cfg, opt);
    auto sopt = run_options(dir / "sparse", "train-sparse");
    sopt.resume = false;
    sopt.log = nullptr;
    const auto sparse = lm::harness::train_sparse_stage(shaped, cfg, sopt);
    traces.push_back(read_file(dir / "shaped" / "metrics.csv") + read_file(dir / "sparse" / "metrics.csv"));
    if (final_a.empty()) final_a = sparse;
  }
  const bool traces_equal = !traces[0].empty() && traces[0] == traces[1];

  auto trainer = lm::harness::load_checkpoint(final_a);
  const double before = pinned_batch_loss(*trainer);
  const auto copy = cache / "determinism" / "copy";
  lm::harness::write_checkpoint(*trainer, copy, true);
  auto reloaded = lm::harness::load_checkpoint(copy);
  const double after = pinned_batch_loss(*reloaded);
  const bool bits_equal = std::memcmp(&before, &after, sizeof(double)) == 0;
  std::ostringstream os;
  os.precision(17);
  os << "metric traces " << (traces_equal ? "identical" : "DIFFER") << " (" << traces[0].size()
     << " bytes); pinned batch loss " << before << " before save, " << after << " after load";
  return {traces_equal && bits_equal, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  CLI::App app{"Acceptance criteria"};
  std::string cache = "acceptance_runs";
  std::vector<int> only;
  bool quiet = false;
  app.add_option("--cache-dir", cache, "where training runs are cached");
  app.add_option("--only", only, "run only these criteria");
  app.add_flag("-q,--quiet", quiet, "no training progress on stderr");
  CLI11_PARSE(app, argc, argv);
  if (!quiet) g_log = &std::cerr;
  fs::create_directories(cache);

  const std::set<int> selected = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8} : std::set<int>(only.begin(), only.end());
  const std::vector<std::string> names = {"",
                                          "oracle suite",
                                          "ELBO exactness and bound",
                                          "gradient checks",
                                          "2D navigation adaptation",
                                          "generalization ablation",
                                          "reward-channel ablation",
                                          "nonstationary tracking",
                                          "determinism and persistence"};
  NavRuns runs;
  bool all = true;
  for (int k : selected) {
    if (k < 1 || k > 8) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      switch (k) {
        case 1: o = criterion1(); break;
        case 2: o = criterion2(); break;
        case 3: o = criterion3(); break;
        case 4: o = criterion4(cache, runs); break;
        case 5: o = criterion5(cache, runs); break;
        case 6: o = criterion6(cache, runs); break;
        case 7: o = criterion7(cache); break;
        case 8: o = criterion8(cache); break;
      }
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << k << " " << (o.pass ? "PASS" : "FAIL") << "  " << names[k] << ": " << o.detail
              << " [" << fmt(secs, 3) << " s]" << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
