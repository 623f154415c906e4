#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/envs/pointnav.hpp"
#include "latentmeta/loop/collect.hpp"
#include "latentmeta/loop/meta_loop.hpp"
#include "latentmeta/loop/metrics.hpp"
#include "latentmeta/loop/replay.hpp"
#include "latentmeta/loop/trajectory.hpp"
#include "tiny_config.hpp"

namespace fs = std::filesystem;
namespace lm = latentmeta;
using namespace latentmeta::loop;

namespace {

Trajectory blank(int task_id, int episodes, int horizon, std::int64_t action_dim = 2) {
  const std::int64_t n = episodes * horizon;
  Trajectory t;
  t.task_id = task_id;
  t.episodes = episodes;
  t.horizon = horizon;
  t.obs = torch::zeros({n, 3});
  t.actions = torch::zeros({n, action_dim});
  t.shaped = torch::arange(n).to(torch::kFloat32);
  t.sparse = torch::zeros({n});
  t.states = torch::zeros({n, 2}, torch::kDouble);
  return t;
}

std::vector<torch::Tensor> snapshot(torch::nn::Module& m) {
  std::vector<torch::Tensor> out;
  for (const auto& p : m.parameters()) out.push_back(p.detach().clone());
  return out;
}

bool same(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!torch::equal(a[i], b[i])) return false;
  return true;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("latentmeta_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Trajectory, TransitionLayoutAcrossEpisodes) {
  const auto l = transition_layout(2, 4);
  auto vec = [](const torch::Tensor& t) {
    auto c = t.to(torch::kDouble).contiguous();
    return std::vector<double>(c.data_ptr<double>(), c.data_ptr<double>() + c.numel());
  };
  EXPECT_EQ(vec(l.from), (std::vector<double>{0, 1, 2, 4, 5, 6}));
  EXPECT_EQ(vec(l.to), (std::vector<double>{1, 2, 4, 5, 6, 7}));
  EXPECT_EQ(vec(l.reward), (std::vector<double>{1, 2, 3, 5, 6, 7}));
  EXPECT_EQ(vec(l.done), (std::vector<double>{0, 0, 0, 0, 0, 1}));
}

TEST(Trajectory, SingleEpisodeEndsTerminal) {
  const auto l = transition_layout(1, 3);
  EXPECT_EQ(l.from.size(0), 2);
  EXPECT_EQ(l.to[1].item<std::int64_t>(), 2);
  EXPECT_EQ(l.done[1].item<float>(), 1.0f);
}

TEST(Trajectory, PrevActionBoundaryFlag) {
  auto t = blank(0, 2, 40);
  t.actions = torch::arange(160).reshape({80, 2}).to(torch::kFloat32);
  t.actions[39].zero_();
  const auto p = t.prev_action_input();
  ASSERT_EQ(p.sizes(), (torch::IntArrayRef{80, 3}));
  for (int row = 0; row < 80; ++row) EXPECT_EQ(p[row][2].item<float>(), row == 40 ? 1.0f : 0.0f) << row;
  EXPECT_TRUE(torch::equal(p[0], torch::zeros({3})));
  EXPECT_TRUE(torch::equal(p.slice(0, 1).narrow(1, 0, 2), t.actions.slice(0, 0, 79)));
}

TEST(Trajectory, TransitionsCollectChosenChannel) {
  auto t = blank(0, 2, 3);
  t.sparse[4] = 1.0f;
  auto features = torch::arange(6).to(torch::kFloat32).view({1, 6, 1});
  const std::vector<const Trajectory*> one{&t};
  auto shaped = make_transitions(features, one, RewardChannel::kShaped);
  auto sparse = make_transitions(features, one, RewardChannel::kSparse);
  EXPECT_TRUE(torch::equal(shaped.reward, torch::tensor({1.0f, 2.0f, 4.0f, 5.0f})));
  EXPECT_TRUE(torch::equal(sparse.reward, torch::tensor({0.0f, 0.0f, 1.0f, 0.0f})));
  EXPECT_TRUE(torch::equal(shaped.next_feature.squeeze(-1), torch::tensor({1.0f, 3.0f, 4.0f, 5.0f})));
  EXPECT_TRUE(torch::equal(shaped.done, torch::tensor({0.0f, 0.0f, 0.0f, 1.0f})));
}

TEST(Trajectory, TimeLimitTransitionsBootstrap) {
  auto t = blank(0, 2, 3);
  auto features = torch::arange(6).to(torch::kFloat32).view({1, 6, 1});
  const std::vector<const Trajectory*> one{&t};
  auto open = make_transitions(features, one, RewardChannel::kShaped, false);
  EXPECT_TRUE(torch::equal(open.done, torch::zeros({4})));
  EXPECT_TRUE(torch::equal(open.next_feature, make_transitions(features, one, RewardChannel::kShaped).next_feature));
}

TEST(Replay, EvictsOldestWholeTrajectories) {
  ReplayBuffer buf(1, 25);
  for (int i = 0; i < 3; ++i) {
    auto t = blank(1, 1, 10);
    t.shaped.fill_(static_cast<float>(i));
    buf.add(t);
  }
  EXPECT_EQ(buf.size(), 2u);
  EXPECT_EQ(buf.num_steps(), 20);
  EXPECT_EQ(buf.trajectories().front().shaped[0].item<float>(), 1.0f);
  EXPECT_THROW(buf.add(blank(2, 1, 10)), lm::UsageError);
  EXPECT_THROW(buf.add(blank(1, 3, 10)), lm::UsageError);
}

TEST(Replay, SetRoutesByTaskAndRoundTrips) {
  ReplayBufferSet set(3, 100);
  set.add(blank(0, 2, 5));
  set.add(blank(2, 2, 5));
  set.add(blank(2, 2, 5));
  EXPECT_EQ(set.nonempty_tasks(), (std::vector<int>{0, 2}));
  EXPECT_EQ(set.total_steps(), 30);
  EXPECT_THROW(set.add(blank(3, 1, 5)), lm::UsageError);
  const auto dir = scratch("replay");
  fs::create_directories(dir);
  set.save(dir / "replay.pt");
  ReplayBufferSet back;
  back.load(dir / "replay.pt");
  ASSERT_EQ(back.num_tasks(), 3);
  EXPECT_EQ(back.at(2).size(), 2u);
  EXPECT_TRUE(torch::equal(back.at(2).trajectories()[1].shaped, set.at(2).trajectories()[1].shaped));
  EXPECT_EQ(back.at(2).trajectories()[1].horizon, 5);
  fs::remove_all(dir);
}

TEST(Metrics, ArcCoverageAlongTheSemicircle) {
  namespace pn = lm::envs::pointnav;
  auto t = blank(0, 1, 6);
  for (int i = 0; i < 5; ++i) {
    const double a = i * std::numbers::pi / 8.0;
    t.states[i][0] = pn::kSemicircleRadius * std::cos(a);
    t.states[i][1] = pn::kSemicircleRadius * std::sin(a);
  }
  const double disk = 2.0 * std::asin(pn::kGoalRadius / pn::kSemicircleRadius);
  EXPECT_NEAR(arc_coverage(t, 0), std::numbers::pi / 2.0 + disk, 1e-9);
  t.sparse[2] = 1.0f;
  EXPECT_NEAR(arc_coverage(t, 0), std::numbers::pi / 4.0 + disk, 1e-9);
  EXPECT_EQ(arc_coverage(blank(0, 1, 6), 0), 0.0);
  EXPECT_THROW(arc_coverage(t, 1), lm::UsageError);
}

TEST(Metrics, StepsToTrackPerSwitch) {
  lm::envs::Task task;
  task.family = lm::envs::Family::kVelTrack;
  task.params = {2, 1.0, 2.0, 1, 4};
  auto t = blank(0, 1, 6, 1);
  const double v[] = {0.0, 0.9, 1.0, 1.5, 1.9, 2.1};
  for (int i = 0; i < 6; ++i) t.states[i][0] = v[i];
  EXPECT_EQ(steps_to_track(t, task), (std::vector<int>{1, 1}));
  EXPECT_TRUE(tracked_all_switches({1, 1}, 10));
  EXPECT_FALSE(tracked_all_switches({1, -1}, 10));
  EXPECT_FALSE(tracked_all_switches({1, 11}, 10));
}

TEST(Metrics, SummaryAveragesPerEpisode) {
  TrialResult a, b;
  a.episodes = b.episodes = 2;
  a.shaped_return = {1, 2};
  b.shaped_return = {3, 4};
  a.sparse_return = {0, 1};
  b.sparse_return = {0, 0};
  a.first_success = {-1, 3};
  b.first_success = {-1, -1};
  const auto s = summarize({a, b});
  EXPECT_EQ(s.trials, 2);
  EXPECT_EQ(s.shaped_return, (std::vector<double>{2, 3}));
  EXPECT_EQ(s.success_rate, (std::vector<double>{0, 0.5}));
}

TEST(MetaLoop, ValidationNamesTheKey) {
  auto c = lm::testing::tiny_config();
  c.tau = 0.0;
  try {
    validate(c);
    FAIL() << "expected ConfigError";
  } catch (const lm::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'tau'"), std::string::npos);
  }
  c = lm::testing::tiny_config();
  c.eval_task_seed = c.train_task_seed;
  EXPECT_THROW(validate(c), lm::ConfigError);
}

TEST(MetaLoop, CollectTrialIsDeterministic) {
  MetaTrainer trainer(lm::testing::tiny_config());
  const auto opts = trainer.collect_options(true);
  auto a = collect_trial(trainer.train_tasks()[0], *trainer.model(), &trainer.agent(), opts, 77);
  auto b = collect_trial(trainer.train_tasks()[0], *trainer.model(), &trainer.agent(), opts, 77);
  EXPECT_TRUE(torch::equal(a.trajectory.obs, b.trajectory.obs));
  EXPECT_TRUE(torch::equal(a.trajectory.actions, b.trajectory.actions));
  EXPECT_EQ(a.trajectory.length(), 10);
  EXPECT_EQ(a.trajectory.obs.scalar_type(), torch::kUInt8);
  EXPECT_TRUE(torch::equal(a.trajectory.actions[4], torch::zeros({2})));
}

TEST(MetaLoop, WarmstartCollectsAcrossTasks) {
  auto c = lm::testing::tiny_config();
  MetaTrainer trainer(c);
  trainer.warmstart();
  EXPECT_EQ(trainer.env_steps(), 60);
  for (int i = 0; i < c.num_train_tasks; ++i) EXPECT_EQ(trainer.buffers().at(i).size(), 2u);
  EXPECT_TRUE(trainer.warmstarted());
}

TEST(MetaLoop, ZeroTrainStepsChangeNothing) {
  MetaTrainer trainer(lm::testing::tiny_config());
  trainer.warmstart();
  const auto model = snapshot(*trainer.model());
  const auto agent = snapshot(*trainer.agent().networks());
  trainer.train_steps(0, false);
  EXPECT_TRUE(same(model, snapshot(*trainer.model())));
  EXPECT_TRUE(same(agent, snapshot(*trainer.agent().networks())));
}

TEST(MetaLoop, MetaTestIsPureExecution) {
  auto c = lm::testing::tiny_config();
  MetaTrainer a(c), b(c);
  a.warmstart();
  b.warmstart();
  const auto model = snapshot(*b.model());
  const auto agent = snapshot(*b.agent().networks());
  const auto results = b.meta_test(b.eval_tasks(), 2);
  EXPECT_EQ(results.size(), 4u);
  EXPECT_TRUE(same(model, snapshot(*b.model())));
  EXPECT_TRUE(same(agent, snapshot(*b.agent().networks())));
  a.train_steps(2, false);
  b.train_steps(2, false);
  EXPECT_TRUE(same(snapshot(*a.model()), snapshot(*b.model())));
  EXPECT_TRUE(same(snapshot(*a.agent().networks()), snapshot(*b.agent().networks())));
}

TEST(MetaLoop, AgentUpdatesLeaveModelGradientsAlone) {
  auto c = lm::testing::tiny_config();
  MetaTrainer a(c), b(c);
  a.warmstart();
  b.warmstart();
  a.train_steps(1, true);
  b.train_steps(1, false);
  auto pa = a.model()->parameters();
  auto pb = b.model()->parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_TRUE(torch::equal(pa[i], pb[i]));
    ASSERT_TRUE(pa[i].grad().defined());
    EXPECT_TRUE(torch::equal(pa[i].grad(), pb[i].grad()));
  }
}

TEST(MetaLoop, DivergenceGuardAborts) {
  auto c = lm::testing::tiny_config();
  c.model_lr = 10.0;
  c.divergence_factor = 1.0001;
  c.warmstart_model_steps = 0;
  MetaTrainer trainer(c);
  trainer.warmstart();
  EXPECT_THROW(trainer.train_steps(200, true), lm::Error);
}

TEST(MetaLoop, ResumeReproducesUninterruptedRun) {
  auto c = lm::testing::tiny_config();
  MetaTrainer straight(c);
  straight.warmstart();
  straight.iterate();
  const auto row = straight.iterate();

  const auto dir = scratch("resume");
  {
    MetaTrainer first(c);
    first.warmstart();
    first.iterate();
    first.save(dir, true);
  }
  MetaTrainer resumed(c);
  resumed.load(dir);
  const auto row2 = resumed.iterate();
  EXPECT_EQ(row.env_steps, row2.env_steps);
  EXPECT_EQ(row.train.model_loss, row2.train.model_loss);
  EXPECT_EQ(row.train.critic_loss, row2.train.critic_loss);
  ASSERT_TRUE(row.eval && row2.eval);
  EXPECT_EQ(row.eval->shaped_return, row2.eval->shaped_return);
  EXPECT_TRUE(same(snapshot(*straight.model()), snapshot(*resumed.model())));
  EXPECT_TRUE(same(snapshot(*straight.agent().networks()), snapshot(*resumed.agent().networks())));
  fs::remove_all(dir);
}

TEST(MetaLoop, SparseStageRequiresMatchingTasks) {
  auto c = lm::testing::tiny_config();
  MetaTrainer shaped(c);
  shaped.warmstart();
  auto other = c;
  other.train_task_seed = 99;
  MetaTrainer sparse(other, Stage::kSparse);
  EXPECT_THROW(sparse.seed_from(shaped, ""), lm::ConfigError);
  MetaTrainer ok(c, Stage::kSparse);
  ok.seed_from(shaped, "");
  EXPECT_EQ(ok.prior_buffers().total_steps(), shaped.buffers().total_steps());
  EXPECT_EQ(ok.evidence_channel(), RewardChannel::kSparse);
  EXPECT_TRUE(same(snapshot(*ok.model()), snapshot(*shaped.model())));
}
