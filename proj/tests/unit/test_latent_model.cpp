#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/core/random.hpp"
#include "latentmeta/envs/lgss_env.hpp"
#include "latentmeta/model/latent_model.hpp"
#include "latentmeta/model/lgss_heads.hpp"
#include "latentmeta/oracles/kalman.hpp"
#include "latentmeta/oracles/model_checks.hpp"

namespace lm = latentmeta;
using namespace latentmeta::model;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.obs_kind = ObsKind::kVector;
  c.obs_shape = {2};
  c.action_dim = 1;
  c.latent_dim = 3;
  c.hidden = {8};
  c.vector_encoder_hidden = 4;
  return c;
}

SequenceBatch random_batch(const ModelConfig& c, std::int64_t B, std::int64_t T, std::uint64_t seed) {
  auto gen = lm::make_generator(seed);
  auto obs_shape = std::vector<std::int64_t>{B, T};
  obs_shape.insert(obs_shape.end(), c.obs_shape.begin(), c.obs_shape.end());
  return {torch::randn(obs_shape, gen), torch::randn({B, T}, gen), torch::randn({B, T}, gen),
          torch::randn({B, T, c.action_input_dim()}, gen)};
}

void zero_output(std::shared_ptr<ConditionalGaussian> head) {
  auto mlp = std::dynamic_pointer_cast<MlpGaussian>(head);
  ASSERT_TRUE(mlp);
  torch::NoGradGuard ng;
  mlp->net()->output_layer()->weight.zero_();
  mlp->net()->output_layer()->bias.zero_();
}

}  // namespace

TEST(LatentModel, ZeroedPosteriorHeadsGiveStandardBelief) {
  torch::manual_seed(0);
  LatentModel net(tiny_config());
  zero_output(net->components().initial_posterior);
  zero_output(net->components().step_posterior);
  auto gen = lm::make_generator(1);
  auto b = net->infer_initial(torch::randn({5, 2}, gen), torch::randn({5}, gen), gen);
  EXPECT_TRUE(torch::equal(b.mean, torch::zeros({5, 3})));
  EXPECT_TRUE(torch::equal(b.log_var, torch::zeros({5, 3})));
  auto b2 = net->infer_step(b, torch::randn({5, 2}, gen), torch::randn({5}, gen), torch::randn({5, 2}, gen), gen);
  EXPECT_TRUE(torch::equal(b2.mean, torch::zeros({5, 3})));
  EXPECT_TRUE(torch::equal(b2.log_var, torch::zeros({5, 3})));
}

TEST(LatentModel, DeterministicGivenSeeds) {
  auto run = [] {
    torch::manual_seed(3);
    LatentModel net(tiny_config());
    auto batch = random_batch(net->config(), 2, 4, 5);
    auto gen = lm::make_generator(9);
    return net->elbo_loss(batch, gen).loss.item<double>();
  };
  const double a = run();
  const double b = run();
  EXPECT_EQ(a, b);
}

TEST(LatentModel, PixelObservationsRoundTripShapes) {
  torch::manual_seed(0);
  ModelConfig c;
  c.obs_shape = {1, 16, 16};
  c.conv_filters = {4, 8};
  c.latent_dim = 4;
  c.hidden = {8};
  LatentModel net(c);
  auto batch = random_batch(c, 2, 3, 1);
  batch.obs = batch.obs.sigmoid();
  auto gen = lm::make_generator(2);
  auto terms = net->elbo_loss(batch, gen);
  EXPECT_EQ(terms.post_mean.sizes(), (torch::IntArrayRef{2, 3, 4}));
  EXPECT_TRUE(std::isfinite(terms.loss.item<double>()));
  EXPECT_EQ(net->decode_obs(torch::zeros({2, 4})).mean.sizes(), (torch::IntArrayRef{2, 256}));
}

TEST(LatentModel, AnalyticLgssPosteriorMatchesKalman) {
  lm::envs::EnvConfig env;
  env.lgss_memoryless = true;
  const auto tasks = lm::envs::sample_tasks(lm::envs::Family::kLgssDiagnostic, 3, 11, env);
  for (const auto& task : tasks) {
    const auto sys = lm::envs::lgss::decode(task);
    LatentModel net(lgss_model_config(sys), make_lgss_components(sys));
    const int p = sys.obs_dim(), m = sys.action_dim();
    lm::Rng rng(task.seed);
    std::vector<Eigen::VectorXd> ys, as;
    for (int t = 0; t < 4; ++t) {
      Eigen::VectorXd y(p + 1);
      for (int i = 0; i <= p; ++i) y(i) = rng.normal();
      ys.push_back(y);
      if (t > 0) as.push_back(Eigen::VectorXd::Constant(m, rng.uniform(-1.0, 1.0)));
    }
    const auto kf = lm::oracles::kalman_filter(lm::oracles::from_env_system(sys), ys, as);
    auto tensor = [](const Eigen::VectorXd& v, int len) {
      auto t = torch::empty({1, len}, torch::kDouble);
      for (int i = 0; i < len; ++i) t[0][i] = v(i);
      return t;
    };
    auto eps = torch::zeros({1, sys.state_dim()}, torch::kDouble);
    auto b = net->infer_initial(tensor(ys[0], p), torch::full({1}, ys[0](p), torch::kDouble), eps);
    for (std::size_t t = 0; t < ys.size(); ++t) {
      if (t > 0) {
        auto a = torch::zeros({1, m + 1}, torch::kDouble);
        for (int i = 0; i < m; ++i) a[0][i] = as[t - 1](i);
        b = net->infer_step(b, tensor(ys[t], p), torch::full({1}, ys[t](p), torch::kDouble), a, eps);
      }
      for (int i = 0; i < sys.state_dim(); ++i) {
        EXPECT_NEAR(b.mean[0][i].item<double>(), kf.means[t](i), 1e-8);
        EXPECT_NEAR(b.log_var.exp()[0][i].item<double>(), kf.covs[t](i, i), 1e-8);
      }
    }
  }
}

TEST(LatentModel, ExactPosteriorElboIsLogLikelihood) {
  lm::envs::EnvConfig env;
  env.lgss_memoryless = true;
  const auto task = lm::envs::sample_tasks(lm::envs::Family::kLgssDiagnostic, 1, 4, env).front();
  const auto e = lm::oracles::lgss_elbo(task, 4000, 7);
  EXPECT_LT(std::abs(e.elbo - e.exact_log_lik), 4.0 * e.std_error);
  EXPECT_GT(e.std_error, 0.0);
}

TEST(LatentModel, PerturbedPosteriorStaysBelowLogLikelihood) {
  const auto task = lm::envs::sample_tasks(lm::envs::Family::kLgssDiagnostic, 1, 4).front();
  const auto e = lm::oracles::lgss_elbo(task, 2000, 7, 0.3, 0.5);
  EXPECT_LT(e.elbo + 3.0 * e.std_error, e.exact_log_lik);
}

TEST(LatentModel, LinearDynamicsMean) {
  const auto task = lm::envs::sample_tasks(lm::envs::Family::kLgssDiagnostic, 1, 2).front();
  const auto sys = lm::envs::lgss::decode(task);
  LatentModel net(lgss_model_config(sys), make_lgss_components(sys));
  Eigen::VectorXd z(3), a(1);
  z << 0.5, -1.0, 2.0;
  a << 0.25;
  const Eigen::VectorXd want = sys.A * z + sys.B * a;
  auto zt = torch::tensor({0.5, -1.0, 2.0}, torch::kDouble).unsqueeze(0);
  auto at = torch::tensor({0.25}, torch::kDouble).unsqueeze(0);
  auto prior = net->dynamics_predict(zt, at);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(prior.mean[0][i].item<double>(), want(i), 1e-12);
    EXPECT_NEAR(prior.var()[0][i].item<double>(), sys.q(i), 1e-12);
  }
}

TEST(LatentModel, UnitGaussianLogDensityAtMean) {
  lm::DiagGaussian g{torch::full({1, 1}, 1.5, torch::kDouble), torch::zeros({1, 1}, torch::kDouble)};
  EXPECT_NEAR(g.log_prob(torch::full({1, 1}, 1.5, torch::kDouble)).item<double>(), -0.9189385332046727, 1e-12);
}

TEST(LatentModel, DecoderVarianceFloor) {
  torch::manual_seed(0);
  auto c = tiny_config();
  c.decoder_var_floor = 0.05;
  LatentModel net(c);
  auto dec = std::dynamic_pointer_cast<MlpGaussian>(net->components().obs_decoder);
  ASSERT_TRUE(dec);
  {
    torch::NoGradGuard ng;
    dec->net()->output_layer()->weight.zero_();
    dec->net()->output_layer()->bias.fill_(-50.0);
  }
  auto px = net->decode_obs(torch::randn({4, 3}));
  EXPECT_GE(px.var().min().item<double>(), 0.05 * (1.0 - 1e-6));
  EXPECT_TRUE(torch::isfinite(px.log_prob(torch::zeros({4, 2}))).all().item<bool>());
}

TEST(LatentModel, SingleStepHasNoTransitionKl) {
  torch::manual_seed(0);
  LatentModel net(tiny_config());
  auto gen = lm::make_generator(1);
  auto terms = net->elbo_loss(random_batch(net->config(), 3, 1, 2), gen);
  EXPECT_EQ(terms.kl_step.item<double>(), 0.0);
  EXPECT_GE(terms.kl_initial.item<double>(), 0.0);
}

TEST(LatentModel, FilteringIsCausal) {
  torch::manual_seed(0);
  LatentModel net(tiny_config());
  auto batch = random_batch(net->config(), 2, 4, 3);
  auto eps = torch::randn({2, 4, 3});
  auto before = net->elbo_loss(batch, eps);
  auto changed = batch;
  changed.obs = batch.obs.clone();
  changed.obs.select(1, 2).add_(1.0);
  changed.evidence = batch.evidence.clone();
  changed.evidence.select(1, 3).add_(1.0);
  auto after = net->elbo_loss(changed, eps);
  EXPECT_TRUE(torch::equal(before.post_mean.slice(1, 0, 2), after.post_mean.slice(1, 0, 2)));
  EXPECT_TRUE(torch::equal(before.post_log_var.slice(1, 0, 2), after.post_log_var.slice(1, 0, 2)));
  EXPECT_FALSE(torch::equal(before.post_mean.select(1, 2), after.post_mean.select(1, 2)));
}

TEST(LatentModel, EvidenceAndTargetChannelsAreSeparate) {
  torch::manual_seed(0);
  LatentModel net(tiny_config());
  auto batch = random_batch(net->config(), 2, 3, 4);
  auto eps = torch::randn({2, 3, 3});
  auto base = net->elbo_loss(batch, eps);

  auto new_target = batch;
  new_target.target = batch.target + 1.0;
  auto t = net->elbo_loss(new_target, eps);
  EXPECT_TRUE(torch::equal(base.post_mean, t.post_mean));
  EXPECT_NE(base.reward_log_lik.item<double>(), t.reward_log_lik.item<double>());

  auto new_evidence = batch;
  new_evidence.evidence = batch.evidence + 1.0;
  auto e = net->elbo_loss(new_evidence, eps);
  EXPECT_FALSE(torch::equal(base.post_mean, e.post_mean));
}

TEST(LatentModel, RewardFreeEvidenceIgnoresRewards) {
  torch::manual_seed(0);
  auto c = tiny_config();
  c.reward_evidence = false;
  LatentModel net(c);
  auto batch = random_batch(c, 2, 3, 4);
  auto eps = torch::randn({2, 3, 3});
  auto base = net->elbo_loss(batch, eps);
  auto shifted = batch;
  shifted.evidence = batch.evidence * 7.0 + 3.0;
  EXPECT_TRUE(torch::equal(base.post_mean, net->elbo_loss(shifted, eps).post_mean));
}

TEST(LatentModel, MisalignedBatchIsUsageError) {
  torch::manual_seed(0);
  LatentModel net(tiny_config());
  auto batch = random_batch(net->config(), 2, 3, 4);
  batch.evidence = batch.evidence.slice(1, 0, 2);
  auto gen = lm::make_generator(0);
  EXPECT_THROW(net->elbo_loss(batch, gen), lm::UsageError);
  auto batch2 = random_batch(net->config(), 2, 3, 4);
  batch2.prev_action = batch2.prev_action.slice(1, 0, 2);
  EXPECT_THROW(net->elbo_loss(batch2, gen), lm::UsageError);
}

TEST(LatentModel, ArchitectureHashTracksShapes) {
  LatentModel a(tiny_config());
  LatentModel b(tiny_config());
  auto c = tiny_config();
  c.latent_dim = 4;
  LatentModel d(c);
  EXPECT_EQ(architecture_hash(*a), architecture_hash(*b));
  EXPECT_NE(architecture_hash(*a), architecture_hash(*d));
  EXPECT_THROW(copy_state(*a, *d), lm::ConfigError);
  copy_state(*a, *b);
  auto pa = a->parameters(), pb = b->parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_TRUE(torch::equal(pa[i], pb[i]));
}

TEST(LatentModel, ElboGradientMatchesFiniteDifferences) {
  const auto report = lm::oracles::check_gradients(1e-4, 5);
  EXPECT_TRUE(report.elbo.pass) << report.elbo.detail;
}
