#include "latentmeta/oracles/model_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "latentmeta/agent/sac.hpp"
#include "latentmeta/core/errors.hpp"
#include "latentmeta/envs/lgss_env.hpp"
#include "latentmeta/model/latent_model.hpp"
#include "latentmeta/model/lgss_heads.hpp"
#include "latentmeta/oracles/finite_diff.hpp"
#include "latentmeta/oracles/kalman.hpp"

namespace latentmeta::oracles {

namespace {

class ShiftedPosterior : public model::ConditionalGaussian {
 public:
  ShiftedPosterior(std::shared_ptr<model::ConditionalGaussian> base, double mean_shift, double log_var_shift)
      : base_(std::move(base)), mean_shift_(mean_shift), log_var_shift_(log_var_shift) {
    register_module("base", base_);
  }
  DiagGaussian forward(const torch::Tensor& input) override {
    auto q = base_->forward(input);
    return {q.mean + mean_shift_, q.log_var + log_var_shift_};
  }

 private:
  std::shared_ptr<model::ConditionalGaussian> base_;
  double mean_shift_;
  double log_var_shift_;
};

torch::Tensor flat_grad(const std::vector<torch::Tensor>& params) {
  std::vector<torch::Tensor> g;
  for (const auto& p : params) {
    g.push_back(p.grad().defined() ? p.grad().detach().reshape(-1) : torch::zeros({p.numel()}, p.options()));
  }
  return torch::cat(g).to(torch::kDouble);
}

Eigen::VectorXd to_eigen(const torch::Tensor& t) {
  auto c = t.to(torch::kDouble).contiguous();
  return Eigen::Map<const Eigen::VectorXd>(c.data_ptr<double>(), c.numel());
}

void assign(const std::vector<torch::Tensor>& params, const Eigen::VectorXd& x) {
  torch::NoGradGuard ng;
  Eigen::Index k = 0;
  for (const auto& p : params) {
    auto flat = torch::from_blob(const_cast<double*>(x.data()) + k, {p.numel()}, torch::kDouble).clone();
    p.copy_(flat.view(p.sizes()).to(p.dtype()));
    k += p.numel();
  }
}

std::string describe(const std::string& what, const CheckResult& r, double tol) {
  std::ostringstream os;
  os << what << ": " << r.cases << " partials, max relative error " << r.worst << ", tolerance " << tol;
  return os.str();
}

}  // namespace

CheckResult check_gradient(const std::vector<torch::Tensor>& params, const std::function<torch::Tensor()>& loss,
                           double tol, double h, double floor) {
  for (const auto& p : params) {
    if (p.scalar_type() != torch::kDouble) throw UsageError("gradient checks need double-precision parameters");
    if (p.grad().defined()) p.mutable_grad().zero_();
  }
  loss().backward();
  const Eigen::VectorXd analytic = to_eigen(flat_grad(params));
  std::vector<torch::Tensor> flat;
  for (const auto& p : params) flat.push_back(p.detach().reshape(-1));
  const Eigen::VectorXd x0 = to_eigen(torch::cat(flat));
  auto f = [&](const Eigen::VectorXd& x) {
    assign(params, x);
    torch::NoGradGuard ng;
    return loss().item<double>();
  };
  const Eigen::VectorXd numeric = finite_diff_grad(f, x0, h);
  assign(params, x0);
  CheckResult r;
  r.cases = static_cast<int>(x0.size());
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    const double denom = std::max({std::abs(analytic(i)), std::abs(numeric(i)), floor});
    const double err = std::abs(analytic(i) - numeric(i)) / denom;
    r.worst = std::max(r.worst, err);
    if (!(err < tol)) ++r.failures;
  }
  r.pass = r.failures == 0 && r.cases > 0;
  return r;
}

ElboEstimate lgss_elbo(const envs::Task& task, int samples, std::uint64_t seed, double mean_shift,
                       double log_var_shift) {
  if (samples < 2) throw UsageError("lgss_elbo needs at least two samples");
  const auto sys = envs::lgss::decode(task);
  const int n = sys.state_dim();
  const int m = sys.action_dim();
  const int p = sys.obs_dim();
  const int T = envs::default_horizon(envs::Family::kLgssDiagnostic);
  Rng rng(mix_seed(seed, 1));

  std::vector<Eigen::VectorXd> ys, as;
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s(i) = rng.normal();
  for (int t = 0; t < T; ++t) {
    if (t > 0) {
      Eigen::VectorXd a(m);
      for (int i = 0; i < m; ++i) a(i) = rng.uniform(-1.0, 1.0);
      s = sys.A * s + sys.B * a;
      for (int i = 0; i < n; ++i) s(i) += std::sqrt(sys.q(i)) * rng.normal();
      as.push_back(a);
    }
    Eigen::VectorXd y = sys.C * s;
    for (int i = 0; i < y.size(); ++i) y(i) += std::sqrt(sys.r(i)) * rng.normal();
    ys.push_back(y);
  }

  auto obs = torch::empty({1, T, p}, torch::kDouble);
  auto rew = torch::empty({1, T}, torch::kDouble);
  auto prev = torch::zeros({1, T, m + 1}, torch::kDouble);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < p; ++i) obs[0][t][i] = ys[t](i);
    rew[0][t] = ys[t](p);
    if (t > 0)
      for (int i = 0; i < m; ++i) prev[0][t][i] = as[t - 1](i);
  }

  auto parts = model::make_lgss_components(sys);
  if (mean_shift != 0.0 || log_var_shift != 0.0) {
    parts.initial_posterior = std::make_shared<ShiftedPosterior>(parts.initial_posterior, mean_shift, log_var_shift);
    parts.step_posterior = std::make_shared<ShiftedPosterior>(parts.step_posterior, mean_shift, log_var_shift);
  }
  model::LatentModel net(model::lgss_model_config(sys), parts);
  torch::NoGradGuard ng;
  auto gen = make_generator(mix_seed(seed, 2));

  const int chunk = std::min(samples, 1000);
  double sum = 0.0, sum_sq = 0.0;
  int done = 0;
  while (done < samples) {
    const int b = std::min(chunk, samples - done);
    model::SequenceBatch batch{obs.expand({b, T, p}), rew.expand({b, T}), rew.expand({b, T}),
                               prev.expand({b, T, m + 1})};
    auto eps = torch::randn({b, T, n}, gen, torch::kDouble);
    auto terms = net->elbo_loss(batch, eps);
    // Per-sequence ELBO from the per-sequence pieces of the summed loss.
    auto px_ll = net->decode_obs(terms.samples.reshape({b * T, n})).log_prob(obs.expand({b, T, p}).reshape({b * T, p}));
    auto pr_ll = net->decode_reward(terms.samples.reshape({b * T, n})).log_prob(rew.expand({b, T}).reshape({b * T, 1}));
    auto log_lik = (px_ll + pr_ll).view({b, T}).sum(1);
    DiagGaussian q1{terms.post_mean.select(1, 0), terms.post_log_var.select(1, 0)};
    auto kl = kl_divergence(q1, DiagGaussian::standard({b, n}, q1.mean.options()));
    if (T > 1) {
      auto prior = net->dynamics_predict(terms.samples.slice(1, 0, T - 1), batch.prev_action.slice(1, 1, T));
      DiagGaussian rest{terms.post_mean.slice(1, 1, T), terms.post_log_var.slice(1, 1, T)};
      kl = kl + kl_divergence(rest, prior).sum(1);
    }
    auto per_seq = log_lik - kl;
    const double total = per_seq.sum().item<double>();
    const double gap = std::abs(total + terms.loss.item<double>());
    if (gap > 1e-6 * std::max(1.0, std::abs(total))) {
      throw NumericFault("per-sequence ELBO pieces do not add up to elbo_loss");
    }
    sum += total;
    sum_sq += per_seq.pow(2).sum().item<double>();
    done += b;
  }
  ElboEstimate out;
  out.elbo = sum / samples;
  const double var = std::max(0.0, sum_sq / samples - out.elbo * out.elbo);
  out.std_error = std::sqrt(var * samples / (samples - 1.0) / samples);
  out.exact_log_lik = kalman_filter(from_env_system(sys), ys, as).log_likelihood;
  return out;
}

CheckResult check_elbo_exact(int systems, int samples, double tol, std::uint64_t seed) {
  envs::EnvConfig env;
  env.lgss_memoryless = true;
  const auto tasks = envs::sample_tasks(envs::Family::kLgssDiagnostic, systems, seed, env);
  CheckResult r;
  r.cases = systems;
  double worst_se = 0.0;
  for (int k = 0; k < systems; ++k) {
    const auto e = lgss_elbo(tasks[k], samples, mix_seed(seed, 100 + k));
    const double err = std::abs(e.elbo - e.exact_log_lik);
    r.worst = std::max(r.worst, err);
    worst_se = std::max(worst_se, e.std_error);
    if (!(err <= tol)) ++r.failures;
  }
  r.pass = r.failures == 0;
  std::ostringstream os;
  os << systems << " memoryless systems, " << samples << " samples each, worst |ELBO - log p| " << r.worst
     << " (largest standard error " << worst_se << "), tolerance " << tol;
  r.detail = os.str();
  return r;
}

CheckResult check_elbo_bound(int perturbations, int samples, std::uint64_t seed) {
  const auto tasks = envs::sample_tasks(envs::Family::kLgssDiagnostic, perturbations, seed);
  Rng rng(mix_seed(seed, 1));
  CheckResult r;
  r.cases = perturbations;
  r.worst = -std::numeric_limits<double>::infinity();
  double min_gap_se = std::numeric_limits<double>::infinity();
  for (int k = 0; k < perturbations; ++k) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double mean_shift = sign * rng.uniform(0.1, 0.5);
    const double log_var_shift = rng.uniform(-1.0, 1.0);
    const auto e = lgss_elbo(tasks[k], samples, mix_seed(seed, 100 + k), mean_shift, log_var_shift);
    const double excess = e.elbo - e.exact_log_lik;
    r.worst = std::max(r.worst, excess);
    min_gap_se = std::min(min_gap_se, -excess / e.std_error);
    if (!(excess < 0.0)) ++r.failures;
  }
  r.pass = r.failures == 0;
  std::ostringstream os;
  os << perturbations << " perturbed posteriors, " << samples << " samples each, max ELBO - log p " << r.worst
     << " (closest " << min_gap_se << " SE below), " << r.failures << " above";
  r.detail = os.str();
  return r;
}

GradientReport check_gradients(double tol, std::uint64_t seed) {
  torch::manual_seed(seed);
  auto gen = make_generator(seed);
  auto dbl = torch::TensorOptions().dtype(torch::kDouble);
  GradientReport out;

  model::ModelConfig mc;
  mc.obs_kind = model::ObsKind::kVector;
  mc.obs_shape = {2};
  mc.action_dim = 1;
  mc.latent_dim = 3;
  mc.hidden = {4};
  mc.vector_encoder_hidden = 3;
  model::LatentModel net(mc);
  net->to(torch::kDouble);
  const std::int64_t B = 2, T = 2;
  model::SequenceBatch batch{torch::randn({B, T, 2}, gen, dbl), torch::randn({B, T}, gen, dbl),
                             torch::randn({B, T}, gen, dbl), torch::randn({B, T, 2}, gen, dbl)};
  auto eps = torch::randn({B, T, 3}, gen, dbl);
  out.elbo = check_gradient(net->parameters(), [&] { return net->elbo_loss(batch, eps).loss; }, tol);
  out.elbo.detail = describe("ELBO", out.elbo, tol);

  agent::SacConfig sc;
  sc.feature_dim = 6;
  sc.action_dim = 2;
  sc.hidden = {4};
  sc.initial_alpha = 0.5;
  agent::SacAgent sac(sc);
  sac.to(torch::kDouble);
  const std::int64_t N = 4;
  auto feature = torch::randn({N, 6}, gen, dbl);
  auto actor_eps = torch::randn({N, 2}, gen, dbl);
  out.actor = check_gradient(sac.networks()->actor->parameters(),
                             [&] { return sac.actor_loss(feature, actor_eps); }, tol);
  out.actor.detail = describe("actor", out.actor, tol);

  agent::TransitionBatch tb{feature, torch::rand({N, 2}, gen, dbl) * 1.8 - 0.9, torch::randn({N}, gen, dbl),
                            torch::randn({N, 6}, gen, dbl), torch::tensor({0.0, 0.0, 1.0, 0.0}, dbl)};
  auto next_eps = torch::randn({N, 2}, gen, dbl);
  std::vector<torch::Tensor> critic = sac.networks()->q1->parameters();
  for (auto& p : sac.networks()->q2->parameters()) critic.push_back(p);
  out.critic = check_gradient(critic, [&] { return sac.critic_loss(tb, next_eps); }, tol);
  out.critic.detail = describe("critic", out.critic, tol);
  return out;
}

}  // namespace latentmeta::oracles
