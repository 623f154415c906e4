#include "latentmeta/agent/sac.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "latentmeta/core/errors.hpp"

namespace latentmeta::agent {

torch::Tensor belief_feature(const model::BeliefState& b, BeliefInput input) {
  return input == BeliefInput::kMeanLogVar ? b.feature() : b.sample;
}

std::int64_t belief_feature_dim(std::int64_t latent_dim, BeliefInput input) {
  return input == BeliefInput::kMeanLogVar ? 2 * latent_dim : latent_dim;
}

double SacConfig::resolved_target_entropy() const {
  return std::isnan(target_entropy) ? -static_cast<double>(action_dim) : target_entropy;
}

TransitionBatch TransitionBatch::index(const torch::Tensor& idx) const {
  return {feature.index_select(0, idx), action.index_select(0, idx), reward.index_select(0, idx),
          next_feature.index_select(0, idx), done.index_select(0, idx)};
}

namespace {

void hard_copy(torch::nn::Module& dst, const torch::nn::Module& src) {
  torch::NoGradGuard ng;
  auto d = dst.parameters();
  auto s = src.parameters();
  for (std::size_t i = 0; i < d.size(); ++i) d[i].copy_(s[i]);
}

/// log(1 - tanh(u)^2), computed without cancellation.
torch::Tensor log_tanh_jacobian(const torch::Tensor& u) {
  return 2.0 * (std::numbers::ln2 - u - torch::softplus(-2.0 * u));
}

torch::Tensor normal_log_density(const torch::Tensor& u, const torch::Tensor& mean, const torch::Tensor& log_std) {
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return -0.5 * ((u - mean) * (-log_std).exp()).pow(2) - log_std - half_log_two_pi;
}

}  // namespace

SacNetworksImpl::SacNetworksImpl(const SacConfig& cfg) {
  actor = register_module("actor", model::Mlp(cfg.feature_dim, cfg.hidden, 2 * cfg.action_dim));
  q1 = register_module("q1", model::Mlp(cfg.feature_dim + cfg.action_dim, cfg.hidden, 1));
  q2 = register_module("q2", model::Mlp(cfg.feature_dim + cfg.action_dim, cfg.hidden, 1));
  q1_target = register_module("q1_target", model::Mlp(cfg.feature_dim + cfg.action_dim, cfg.hidden, 1));
  q2_target = register_module("q2_target", model::Mlp(cfg.feature_dim + cfg.action_dim, cfg.hidden, 1));
  hard_copy(*q1_target, *q1);
  hard_copy(*q2_target, *q2);
  for (auto& p : q1_target->parameters()) p.set_requires_grad(false);
  for (auto& p : q2_target->parameters()) p.set_requires_grad(false);
  if (!(cfg.initial_alpha > 0.0)) throw ConfigError("initial_alpha must be > 0");
  log_alpha = register_parameter("log_alpha", torch::full({1}, std::log(cfg.initial_alpha)));
}

SacAgent::SacAgent(SacConfig cfg) : cfg_(std::move(cfg)), nets_(cfg_) { make_optimizers(); }

void SacAgent::make_optimizers() {
  std::vector<torch::Tensor> critic_params = nets_->q1->parameters();
  for (auto& p : nets_->q2->parameters()) critic_params.push_back(p);
  actor_opt_ = std::make_unique<torch::optim::Adam>(nets_->actor->parameters(), torch::optim::AdamOptions(cfg_.actor_lr));
  critic_opt_ = std::make_unique<torch::optim::Adam>(critic_params, torch::optim::AdamOptions(cfg_.critic_lr));
  alpha_opt_ = std::make_unique<torch::optim::Adam>(std::vector<torch::Tensor>{nets_->log_alpha},
                                                    torch::optim::AdamOptions(cfg_.alpha_lr));
}

void SacAgent::to(torch::Dtype dtype) {
  nets_->to(dtype);
  make_optimizers();
}

PolicySample SacAgent::sample(const torch::Tensor& feature, const torch::Tensor& eps) {
  auto h = nets_->actor->forward(feature);
  auto parts = h.split(cfg_.action_dim, -1);
  auto mean = parts[0];
  auto log_std = parts[1].clamp(cfg_.log_std_min, cfg_.log_std_max);
  auto u = mean + log_std.exp() * eps;
  auto lp = (normal_log_density(u, mean, log_std) - log_tanh_jacobian(u)).sum(-1);
  return {torch::tanh(u), lp};
}

PolicySample SacAgent::sample(const torch::Tensor& feature, torch::Generator& gen) {
  auto eps = torch::randn({feature.size(0), cfg_.action_dim}, gen, feature.options());
  return sample(feature, eps);
}

torch::Tensor SacAgent::mean_action(const torch::Tensor& feature) {
  auto h = nets_->actor->forward(feature);
  return torch::tanh(h.split(cfg_.action_dim, -1)[0]);
}

torch::Tensor SacAgent::log_prob(const torch::Tensor& feature, const torch::Tensor& action) {
  auto h = nets_->actor->forward(feature);
  auto parts = h.split(cfg_.action_dim, -1);
  auto log_std = parts[1].clamp(cfg_.log_std_min, cfg_.log_std_max);
  auto u = torch::atanh(action);
  return (normal_log_density(u, parts[0], log_std) - log_tanh_jacobian(u)).sum(-1);
}

torch::Tensor SacAgent::act(const torch::Tensor& feature, ActionMode mode, torch::Generator& gen) {
  torch::NoGradGuard ng;
  auto a = mode == ActionMode::kMean ? mean_action(feature) : sample(feature, gen).action;
  // Keep float32 tanh saturation strictly inside the open interval.
  const double bound = 1.0 - 1e-6;
  return a.clamp(-bound, bound);
}

torch::Tensor SacAgent::q_values(const torch::Tensor& feature, const torch::Tensor& action, bool target) {
  auto in = torch::cat({feature, action}, -1);
  if (target) {
    return torch::min(nets_->q1_target->forward(in), nets_->q2_target->forward(in)).squeeze(-1);
  }
  return torch::min(nets_->q1->forward(in), nets_->q2->forward(in)).squeeze(-1);
}

torch::Tensor SacAgent::critic_target(const TransitionBatch& batch, const torch::Tensor& next_eps) {
  torch::NoGradGuard ng;
  auto next = sample(batch.next_feature, next_eps);
  auto soft_v = q_values(batch.next_feature, next.action, true) - alpha() * next.log_prob;
  auto y = batch.reward + cfg_.gamma * (1.0 - batch.done) * soft_v;
  check_finite(y, "critic target");
  return y;
}

torch::Tensor SacAgent::critic_loss(const TransitionBatch& batch, const torch::Tensor& next_eps) {
  auto y = critic_target(batch, next_eps);
  auto in = torch::cat({batch.feature, batch.action}, -1);
  auto q1 = nets_->q1->forward(in).squeeze(-1);
  auto q2 = nets_->q2->forward(in).squeeze(-1);
  return (q1 - y).pow(2).mean() + (q2 - y).pow(2).mean();
}

torch::Tensor SacAgent::actor_loss(const torch::Tensor& feature, const torch::Tensor& eps, torch::Tensor* log_prob_out) {
  auto s = sample(feature, eps);
  auto q = q_values(feature, s.action, false);
  if (log_prob_out) *log_prob_out = s.log_prob.detach();
  return (alpha() * s.log_prob - q).mean();
}

torch::Tensor SacAgent::temperature_loss(const torch::Tensor& log_prob) {
  return -(nets_->log_alpha * (log_prob.detach() + cfg_.resolved_target_entropy())).mean();
}

void SacAgent::polyak_update(double tau) {
  torch::NoGradGuard ng;
  auto blend = [tau](torch::nn::Module& target, torch::nn::Module& online) {
    auto t = target.parameters();
    auto o = online.parameters();
    for (std::size_t i = 0; i < t.size(); ++i) t[i].mul_(1.0 - tau).add_(o[i], tau);
  };
  blend(*nets_->q1_target, *nets_->q1);
  blend(*nets_->q2_target, *nets_->q2);
}

SacLosses SacAgent::update(const TransitionBatch& batch, torch::Generator& gen, std::int64_t actor_batch) {
  const auto B = batch.size();
  const auto Ba = actor_batch < 0 ? B : std::min(actor_batch, B);
  auto next_eps = torch::randn({B, cfg_.action_dim}, gen, batch.feature.options());
  auto eps = torch::randn({Ba, cfg_.action_dim}, gen, batch.feature.options());
  SacLosses out;

  critic_opt_->zero_grad();
  auto lc = critic_loss(batch, next_eps);
  lc.backward();
  critic_opt_->step();

  actor_opt_->zero_grad();
  torch::Tensor log_prob;
  auto la = actor_loss(batch.feature.slice(0, 0, Ba), eps, &log_prob);
  la.backward();
  actor_opt_->step();

  alpha_opt_->zero_grad();
  auto lt = temperature_loss(log_prob);
  lt.backward();
  alpha_opt_->step();

  polyak_update(cfg_.tau);

  out.critic = lc.item<double>();
  out.actor = la.item<double>();
  out.temperature = lt.item<double>();
  out.alpha = alpha().item<double>();
  out.entropy = -log_prob.mean().item<double>();
  check_finite(lc, "critic loss");
  check_finite(la, "actor loss");
  return out;
}

}  // namespace latentmeta::agent
