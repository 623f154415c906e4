#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/harness/checkpoint.hpp"
#include "latentmeta/harness/config.hpp"
#include "latentmeta/harness/manifest.hpp"
#include "latentmeta/harness/metrics_log.hpp"
#include "latentmeta/harness/plots.hpp"
#include "latentmeta/harness/run.hpp"
#include "tiny_config.hpp"

namespace fs = std::filesystem;
namespace lm = latentmeta;
using namespace latentmeta::harness;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("latentmeta_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

lm::loop::MetricsRow row(int iteration, bool with_eval) {
  lm::loop::MetricsRow r;
  r.iteration = iteration;
  r.env_steps = 100 * iteration;
  r.train.model_loss = 0.1 + iteration;
  if (with_eval) {
    lm::loop::EvalSummary e;
    e.trials = 3;
    e.shaped_return = {-1.5, -0.25};
    e.sparse_return = {0.0, 1.0 / 3.0};
    e.success_rate = {0.0, 2.0 / 3.0};
    r.eval = e;
  }
  return r;
}

}  // namespace

TEST(Config, EmptyFileGivesDefaults) {
  const auto dir = scratch("empty");
  std::ofstream(dir / "c.json") << "  \n";
  EXPECT_TRUE(load_config(dir / "c.json") == lm::loop::TrainConfig{});
  fs::remove_all(dir);
}

TEST(Config, RoundTripAndOverrides) {
  const auto dir = scratch("roundtrip");
  auto c = lm::testing::tiny_config();
  c.precision = "float64";
  save_config(c, dir / "c.json");
  EXPECT_TRUE(load_config(dir / "c.json") == c);
  const auto o = apply_overrides(c, {"latent_dim=7", "family=veltrack", "model_hidden=[3,4]"});
  EXPECT_EQ(o.latent_dim, 7);
  EXPECT_EQ(o.family, "veltrack");
  EXPECT_EQ(o.model_hidden, (std::vector<std::int64_t>{3, 4}));
  EXPECT_EQ(config_hash(c), config_hash(load_config(dir / "c.json")));
  EXPECT_NE(config_hash(c), config_hash(o));
  fs::remove_all(dir);
}

TEST(Config, UnknownKeyAndBadValueNameTheKey) {
  auto message = [](const json& j) {
    try {
      config_from_json(j);
    } catch (const lm::ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message(json{{"latnet_dim", 3}}).find("latnet_dim"), std::string::npos);
  EXPECT_NE(message(json{{"latent_dim", "three"}}).find("latent_dim"), std::string::npos);
  EXPECT_NE(message(json{{"gamma", 1.5}}).find("gamma"), std::string::npos);
  EXPECT_NE(message(json{{"family", "mujoco"}}).find("mujoco"), std::string::npos);
}

TEST(Config, KeysCoverSerializedFields) {
  const auto j = config_to_json(lm::loop::TrainConfig{});
  EXPECT_EQ(j.size(), config_keys().size());
  for (const auto& k : config_keys()) EXPECT_TRUE(j.contains(k)) << k;
}

TEST(Metrics, WriteReadTruncate) {
  const auto dir = scratch("metrics");
  const auto path = dir / "metrics.csv";
  {
    MetricsWriter w(path);
    w.append(row(0, true));
    w.append(row(1, false));
    w.append(row(2, true));
  }
  EXPECT_EQ(slurp(path).rfind(kMetricsSchema, 0), 0u);
  auto t = read_metrics(path);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.columns, metrics_columns());
  EXPECT_EQ(t.column("model_loss")[2], 2.1);
  EXPECT_EQ(t.column("eval_success_ep2")[0], 2.0 / 3.0);
  EXPECT_TRUE(std::isnan(t.column("eval_success_ep2")[1]));
  EXPECT_THROW(t.column("nope"), lm::UsageError);
  truncate_metrics(path, 1, 1);
  EXPECT_EQ(read_metrics(path).rows.size(), 2u);
  {
    MetricsWriter w(path);
    w.append(row(2, true));
  }
  EXPECT_EQ(read_metrics(path).rows.size(), 3u);
  std::ofstream(dir / "foreign.csv") << "a,b\n1,2\n";
  EXPECT_THROW(read_metrics(dir / "foreign.csv"), lm::ConfigError);
  fs::remove_all(dir);
}

TEST(Plots, SingleRowAndNoEval) {
  const auto dir = scratch("plots");
  {
    MetricsWriter w(dir / "one.csv");
    w.append(row(0, true));
  }
  const auto files = emit_plots({dir / "one.csv"}, dir / "out");
  ASSERT_EQ(files.size(), 2u);
  for (const auto& f : files) {
    const auto s = slurp(f);
    EXPECT_EQ(s.rfind("<svg", 0), 0u);
    EXPECT_EQ(s.find("nan"), std::string::npos);
  }
  {
    MetricsWriter w(dir / "none.csv");
    w.append(row(0, false));
  }
  EXPECT_TRUE(emit_plots({dir / "none.csv"}, dir / "out2").empty());
  fs::remove_all(dir);
}

TEST(Plots, DeterministicBytes) {
  Chart c{"t", "x", "y", {{"a", {0, 1, 2}, {0.5, NAN, 1.0}, false}, {"b", {0, 2}, {0.8, 0.8}, true}}};
  EXPECT_EQ(render_svg(c), render_svg(c));
  EXPECT_NE(render_svg(c).find("stroke-dasharray"), std::string::npos);
}

TEST(Manifest, RoundTrip) {
  const auto dir = scratch("manifest");
  auto m = RunManifest::create(lm::testing::tiny_config(), dir, "train");
  m.write(dir / "manifest.json");
  const auto back = RunManifest::read(dir / "manifest.json");
  EXPECT_TRUE(back.config == m.config);
  EXPECT_EQ(back.revision, code_revision());
  EXPECT_EQ(back.start_time, m.start_time);
  EXPECT_EQ(back.family, "pointnav2d");
  fs::remove_all(dir);
}

TEST(Run, TrainsResumesAndReusesFinal) {
  const auto dir = scratch("run");
  auto c = lm::testing::tiny_config();
  RunOptions opt;
  opt.run_dir = dir / "a";
  opt.max_iterations = 1;
  const auto partial = meta_train(c, opt);
  EXPECT_EQ(partial.filename(), "resume");
  opt.max_iterations = -1;
  const auto final_dir = meta_train(c, opt);
  EXPECT_EQ(final_dir.filename(), "final");
  EXPECT_TRUE(read_checkpoint_info(final_dir).has_replay);

  RunOptions straight;
  straight.run_dir = dir / "b";
  meta_train(c, straight);
  EXPECT_EQ(slurp(dir / "a" / "metrics.csv"), slurp(dir / "b" / "metrics.csv"));

  auto other = c;
  other.latent_dim = 5;
  EXPECT_THROW(meta_train(other, opt), lm::ConfigError);

  auto trainer = load_checkpoint(final_dir);
  EXPECT_TRUE(trainer->config() == c);
  EXPECT_TRUE(trainer->finished());

  RunOptions sparse;
  sparse.run_dir = dir / "sparse";
  auto sc = c;
  sc.stage2_env_step_budget = 20;
  const auto sparse_final = train_sparse_stage(final_dir, sc, sparse);
  EXPECT_EQ(read_checkpoint_info(sparse_final).stage, 2);
  EXPECT_THROW(train_sparse_stage(dir / "a" / "checkpoints" / "iter_000001", sc, sparse), lm::ConfigError);
  fs::remove_all(dir);
}
