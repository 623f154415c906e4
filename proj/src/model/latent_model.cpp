#include "latentmeta/model/latent_model.hpp"

#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>

#include "latentmeta/core/errors.hpp"

namespace latentmeta::model {

std::int64_t ModelConfig::obs_numel() const {
  return std::accumulate(obs_shape.begin(), obs_shape.end(), std::int64_t{1}, std::multiplies<>());
}

void SequenceBatch::validate(const ModelConfig& cfg) const {
  if (!obs.defined() || !evidence.defined() || !target.defined() || !prev_action.defined()) {
    throw UsageError("sequence batch has undefined tensors");
  }
  const auto rank = static_cast<std::int64_t>(cfg.obs_shape.size());
  if (obs.dim() != 2 + rank) throw UsageError("obs must be [B, N, obs_shape...]");
  for (std::int64_t i = 0; i < rank; ++i) {
    if (obs.size(2 + i) != cfg.obs_shape[i]) throw UsageError("obs shape does not match the model");
  }
  const auto b = obs.size(0);
  const auto n = obs.size(1);
  if (n < 1) throw UsageError("sequences must have at least one timestep");
  if (evidence.sizes() != torch::IntArrayRef{b, n} || target.sizes() != torch::IntArrayRef{b, n}) {
    throw UsageError("reward channels must be [B, N] and aligned with obs");
  }
  if (prev_action.sizes() != torch::IntArrayRef{b, n, cfg.action_input_dim()}) {
    throw UsageError("prev_action must be [B, N, action_dim + 1] and aligned with obs");
  }
}

SequenceBatch SequenceBatch::to(const torch::TensorOptions& options) const {
  return {obs.to(options), evidence.to(options), target.to(options), prev_action.to(options)};
}

SequenceBatch SequenceBatch::concat(const std::vector<SequenceBatch>& parts) {
  std::vector<torch::Tensor> o, e, t, a;
  for (const auto& p : parts) {
    o.push_back(p.obs);
    e.push_back(p.evidence);
    t.push_back(p.target);
    a.push_back(p.prev_action);
  }
  return {torch::cat(o), torch::cat(e), torch::cat(t), torch::cat(a)};
}

Components make_neural_components(const ModelConfig& cfg) {
  Components c;
  const std::int64_t L = cfg.latent_dim;
  const std::int64_t A = cfg.action_input_dim();
  VarianceOptions posterior_var{VarianceMode::kClamped, cfg.posterior_log_var_min, cfg.posterior_log_var_max,
                                cfg.decoder_var_floor};
  VarianceOptions decoder_var{VarianceMode::kFloored, cfg.posterior_log_var_min, cfg.posterior_log_var_max,
                              cfg.decoder_var_floor};
  if (cfg.obs_kind == ObsKind::kPixels) {
    if (cfg.obs_shape.size() != 3) throw ConfigError("pixel observations need a [C, H, W] shape");
    c.encoder = std::make_shared<ConvEncoder>(cfg.obs_shape[0], cfg.obs_shape[1], cfg.conv_filters);
    c.obs_decoder = std::make_shared<ConvDecoder>(L, cfg.obs_shape[0], cfg.obs_shape[1], cfg.conv_filters,
                                                  decoder_var, cfg.image_decoder_var);
  } else {
    c.encoder = std::make_shared<VectorEncoder>(cfg.obs_numel(), cfg.vector_encoder_hidden);
    c.obs_decoder = std::make_shared<MlpGaussian>(L, cfg.hidden, cfg.obs_numel(), decoder_var);
  }
  const std::int64_t F = c.encoder->out_dim();
  c.initial_posterior = std::make_shared<MlpGaussian>(F + 1, cfg.hidden, L, posterior_var);
  c.step_posterior = std::make_shared<MlpGaussian>(F + 1 + L + A, cfg.hidden, L, posterior_var);
  c.dynamics = std::make_shared<MlpGaussian>(L + A, cfg.hidden, L, posterior_var);
  c.reward_decoder = std::make_shared<MlpGaussian>(L, cfg.hidden, 1, decoder_var);
  return c;
}

LatentModelImpl::LatentModelImpl(ModelConfig cfg) : LatentModelImpl(cfg, make_neural_components(cfg)) {}

LatentModelImpl::LatentModelImpl(ModelConfig cfg, Components components)
    : cfg_(std::move(cfg)), parts_(std::move(components)) {
  if (cfg_.mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
  register_module("encoder", parts_.encoder);
  register_module("initial_posterior", parts_.initial_posterior);
  register_module("step_posterior", parts_.step_posterior);
  register_module("dynamics", parts_.dynamics);
  register_module("obs_decoder", parts_.obs_decoder);
  register_module("reward_decoder", parts_.reward_decoder);
}

torch::Tensor LatentModelImpl::encode(const torch::Tensor& obs) {
  const auto rank = static_cast<std::int64_t>(cfg_.obs_shape.size());
  const auto lead = obs.sizes().slice(0, obs.dim() - rank).vec();
  std::vector<std::int64_t> flat_shape = {-1};
  flat_shape.insert(flat_shape.end(), cfg_.obs_shape.begin(), cfg_.obs_shape.end());
  auto feat = parts_.encoder->forward(obs.reshape(flat_shape));
  auto out_shape = lead;
  out_shape.push_back(feat.size(-1));
  return feat.view(out_shape);
}

torch::Tensor LatentModelImpl::gate_reward(const torch::Tensor& r) const {
  return cfg_.reward_evidence ? r : torch::zeros_like(r);
}

BeliefState LatentModelImpl::posterior_initial(const torch::Tensor& feat, const torch::Tensor& r,
                                               const torch::Tensor& eps) {
  auto q = parts_.initial_posterior->forward(torch::cat({feat, gate_reward(r)}, -1));
  return {q.mean, q.log_var, q.rsample(eps)};
}

BeliefState LatentModelImpl::posterior_step(const torch::Tensor& feat, const torch::Tensor& r,
                                            const torch::Tensor& z_prev, const torch::Tensor& a_prev,
                                            const torch::Tensor& eps) {
  auto q = parts_.step_posterior->forward(torch::cat({feat, gate_reward(r), z_prev, a_prev}, -1));
  return {q.mean, q.log_var, q.rsample(eps)};
}

namespace {
torch::Tensor as_column(const torch::Tensor& r) { return r.dim() == 1 ? r.unsqueeze(-1) : r; }
}  // namespace

BeliefState LatentModelImpl::infer_initial(const torch::Tensor& x1, const torch::Tensor& r1, torch::Generator& gen) {
  auto eps = torch::randn({x1.size(0), cfg_.latent_dim}, gen, x1.options());
  return infer_initial(x1, r1, eps);
}

BeliefState LatentModelImpl::infer_initial(const torch::Tensor& x1, const torch::Tensor& r1,
                                           const torch::Tensor& eps) {
  auto b = posterior_initial(encode(x1), as_column(r1), eps);
  check_finite(b.mean, "initial_posterior (mean head)");
  check_finite(b.log_var, "initial_posterior (log-variance head)");
  return b;
}

BeliefState LatentModelImpl::infer_step(const BeliefState& prev, const torch::Tensor& x, const torch::Tensor& r,
                                        const torch::Tensor& a_prev, torch::Generator& gen) {
  auto eps = torch::randn({x.size(0), cfg_.latent_dim}, gen, x.options());
  return infer_step(prev, x, r, a_prev, eps);
}

BeliefState LatentModelImpl::infer_step(const BeliefState& prev, const torch::Tensor& x, const torch::Tensor& r,
                                        const torch::Tensor& a_prev, const torch::Tensor& eps) {
  auto b = posterior_step(encode(x), as_column(r), prev.sample, a_prev, eps);
  check_finite(b.mean, "step_posterior (mean head)");
  check_finite(b.log_var, "step_posterior (log-variance head)");
  return b;
}

DiagGaussian LatentModelImpl::dynamics_predict(const torch::Tensor& z_prev, const torch::Tensor& a_prev) {
  return parts_.dynamics->forward(torch::cat({z_prev, a_prev}, -1));
}

DiagGaussian LatentModelImpl::decode_obs(const torch::Tensor& z) { return parts_.obs_decoder->forward(z); }

DiagGaussian LatentModelImpl::decode_reward(const torch::Tensor& z) { return parts_.reward_decoder->forward(z); }

ElboTerms LatentModelImpl::elbo_loss(const SequenceBatch& batch, torch::Generator& gen) {
  auto eps = torch::randn({cfg_.mc_samples * batch.batch(), batch.length(), cfg_.latent_dim}, gen,
                          batch.obs.options());
  return elbo_loss(batch, eps);
}

ElboTerms LatentModelImpl::elbo_loss(const SequenceBatch& input, const torch::Tensor& eps) {
  input.validate(cfg_);
  const std::int64_t k = cfg_.mc_samples;
  SequenceBatch batch = input;
  if (k > 1) {
    auto rep = [&](const torch::Tensor& t) {
      std::vector<std::int64_t> reps(t.dim(), 1);
      reps[0] = k;
      return t.repeat(reps);
    };
    batch = {rep(input.obs), rep(input.evidence), rep(input.target), rep(input.prev_action)};
  }
  const std::int64_t B = batch.batch();
  const std::int64_t N = batch.length();
  const std::int64_t L = cfg_.latent_dim;
  if (eps.sizes() != torch::IntArrayRef{B, N, L}) throw UsageError("elbo noise must be [mc_samples * B, N, L]");

  auto feat = encode(batch.obs);
  auto r = batch.evidence.unsqueeze(-1);
  std::vector<torch::Tensor> means, log_vars, samples;
  means.reserve(N);
  auto b = posterior_initial(feat.select(1, 0), r.select(1, 0), eps.select(1, 0));
  means.push_back(b.mean);
  log_vars.push_back(b.log_var);
  samples.push_back(b.sample);
  for (std::int64_t t = 1; t < N; ++t) {
    b = posterior_step(feat.select(1, t), r.select(1, t), b.sample, batch.prev_action.select(1, t),
                       eps.select(1, t));
    means.push_back(b.mean);
    log_vars.push_back(b.log_var);
    samples.push_back(b.sample);
  }
  ElboTerms out;
  out.post_mean = torch::stack(means, 1);
  out.post_log_var = torch::stack(log_vars, 1);
  out.samples = torch::stack(samples, 1);
  check_finite(out.post_mean, "posterior (mean head)");
  check_finite(out.post_log_var, "posterior (log-variance head)");

  DiagGaussian q1{out.post_mean.select(1, 0), out.post_log_var.select(1, 0)};
  auto kl_initial = kl_divergence(q1, DiagGaussian::standard({B, L}, q1.mean.options()));
  auto kl_step = torch::zeros({B}, kl_initial.options());
  if (N > 1) {
    auto prior = dynamics_predict(out.samples.slice(1, 0, N - 1), batch.prev_action.slice(1, 1, N));
    check_finite(prior.mean, "dynamics (mean head)");
    DiagGaussian q_rest{out.post_mean.slice(1, 1, N), out.post_log_var.slice(1, 1, N)};
    kl_step = kl_divergence(q_rest, prior).sum(1);
  }
  auto z_flat = out.samples.reshape({B * N, L});
  auto px = decode_obs(z_flat);
  check_finite(px.mean, "obs_decoder");
  auto obs_ll = px.log_prob(batch.obs.reshape({B * N, -1})).view({B, N}).sum(1);
  auto pr = decode_reward(z_flat);
  check_finite(pr.mean, "reward_decoder");
  auto rew_ll = pr.log_prob(batch.target.reshape({B * N, 1})).view({B, N}).sum(1);

  const double scale = 1.0 / static_cast<double>(k);
  out.obs_log_lik = obs_ll.sum() * scale;
  out.reward_log_lik = rew_ll.sum() * scale;
  out.kl_initial = kl_initial.sum() * scale;
  out.kl_step = kl_step.sum() * scale;
  out.loss = -(out.obs_log_lik + out.reward_log_lik - out.kl_initial - out.kl_step);
  check_finite(out.loss, "elbo_loss");
  if (k > 1) {
    // Report beliefs of the first chain only.
    out.post_mean = out.post_mean.slice(0, 0, input.batch());
    out.post_log_var = out.post_log_var.slice(0, 0, input.batch());
    out.samples = out.samples.slice(0, 0, input.batch());
  }
  return out;
}

std::string architecture_hash(const torch::nn::Module& module) {
  std::ostringstream desc;
  for (const auto& p : module.named_parameters()) {
    desc << p.key() << ":" << p.value().sizes() << ";";
  }
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : desc.str()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

torch::Dtype module_dtype(const torch::nn::Module& module) {
  for (const auto& p : module.parameters()) return p.scalar_type();
  for (const auto& b : module.buffers()) return b.scalar_type();
  return torch::kFloat32;
}

void copy_state(torch::nn::Module& dst, const torch::nn::Module& src) {
  if (architecture_hash(dst) != architecture_hash(src)) throw ConfigError("cannot copy between different architectures");
  torch::NoGradGuard ng;
  auto d = dst.named_parameters();
  for (const auto& p : src.named_parameters()) d[p.key()].copy_(p.value());
  auto db = dst.named_buffers();
  for (const auto& b : src.named_buffers()) db[b.key()].copy_(b.value());
}

}  // namespace latentmeta::model
