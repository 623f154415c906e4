#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <memory>
#include <vector>

#include "latentmeta/core/gaussian.hpp"
#include "latentmeta/model/networks.hpp"

namespace latentmeta::model {

enum class ObsKind { kPixels, kVector };

struct ModelConfig {
  ObsKind obs_kind = ObsKind::kPixels;
  /// [C, H, W] for pixels, [D] for vectors.
  std::vector<std::int64_t> obs_shape = {1, 32, 32};
  /// Environment action dimension; the model sees one extra boundary flag.
  std::int64_t action_dim = 2;
  std::int64_t latent_dim = 64;
  std::vector<std::int64_t> hidden = {32, 32};
  std::vector<std::int64_t> conv_filters = {16, 32, 64, 64};
  /// Width of the proprio encoder layer; 0 feeds raw vectors.
  std::int64_t vector_encoder_hidden = 32;
  double decoder_var_floor = 1e-3;
  /// Fixed per-pixel variance of the image decoder; 0 learns it.
  double image_decoder_var = 0.01;
  double posterior_log_var_min = -10.0;
  double posterior_log_var_max = 4.0;
  /// When false the posterior never sees rewards (state-only inference).
  bool reward_evidence = true;
  /// Latent chains drawn per sequence in elbo_loss.
  int mc_samples = 1;

  std::int64_t action_input_dim() const { return action_dim + 1; }
  std::int64_t obs_numel() const;
};

/// Posterior over z_t. `sample` is the draw that conditions the next step.
struct BeliefState {
  torch::Tensor mean;
  torch::Tensor log_var;
  torch::Tensor sample;

  DiagGaussian dist() const { return {mean, log_var}; }
  /// Policy input: [mean, log_var].
  torch::Tensor feature() const { return torch::cat({mean, log_var}, -1); }
  BeliefState detach() const { return {mean.detach(), log_var.detach(), sample.detach()}; }
};

/// Aligned sequences. Rows are timesteps 1..N of a trial.
///   obs            [B, N, obs_shape...]  float
///   evidence       [B, N]   reward fed to the posterior
///   target         [B, N]   reward reconstructed by the reward decoder
///   prev_action    [B, N, action_dim + 1]  row t = (a_{t-1}, boundary flag
///                  set on the first timestep of every episode after the
///                  first); row 0 is unused
struct SequenceBatch {
  torch::Tensor obs;
  torch::Tensor evidence;
  torch::Tensor target;
  torch::Tensor prev_action;

  std::int64_t batch() const { return obs.size(0); }
  std::int64_t length() const { return obs.size(1); }
  /// Throws UsageError on misaligned shapes.
  void validate(const ModelConfig& cfg) const;
  SequenceBatch to(const torch::TensorOptions& options) const;
  static SequenceBatch concat(const std::vector<SequenceBatch>& parts);
};

/// Negative ELBO summed over sequences plus the individual terms (also sums,
/// divided by mc_samples). Posterior tensors keep their autograd history.
struct ElboTerms {
  torch::Tensor loss;
  torch::Tensor obs_log_lik;
  torch::Tensor reward_log_lik;
  torch::Tensor kl_initial;
  torch::Tensor kl_step;
  torch::Tensor post_mean;     // [B, N, L]
  torch::Tensor post_log_var;  // [B, N, L]
  torch::Tensor samples;       // [B, N, L]
};

/// Pluggable distribution heads. Input layouts:
///   initial_posterior: [feat, r]
///   step_posterior:    [feat, r, z_prev, a_prev]
///   dynamics:          [z_prev, a_prev]
///   obs_decoder:       z   (Gaussian over the flattened observation)
///   reward_decoder:    z   (scalar Gaussian)
struct Components {
  std::shared_ptr<ObservationEncoder> encoder;
  std::shared_ptr<ConditionalGaussian> initial_posterior;
  std::shared_ptr<ConditionalGaussian> step_posterior;
  std::shared_ptr<ConditionalGaussian> dynamics;
  std::shared_ptr<ConditionalGaussian> obs_decoder;
  std::shared_ptr<ConditionalGaussian> reward_decoder;
};

/// Neural components for `cfg` (conv encoder/decoder for pixels).
Components make_neural_components(const ModelConfig& cfg);

/// Sequential latent variable model with rewards as evidence:
///   p(z_1) = N(0, I),  p(z_t | z_{t-1}, a_{t-1}),  p(x_t | z_t),  p(r_t | z_t)
///   q(z_1 | x_1, r_1),  q(z_t | x_t, r_t, z_{t-1}, a_{t-1})
class LatentModelImpl : public torch::nn::Module {
 public:
  explicit LatentModelImpl(ModelConfig cfg);
  LatentModelImpl(ModelConfig cfg, Components components);

  const ModelConfig& config() const { return cfg_; }

  /// Features for a batch of observations with arbitrary leading dims.
  torch::Tensor encode(const torch::Tensor& obs);

  BeliefState infer_initial(const torch::Tensor& x1, const torch::Tensor& r1, torch::Generator& gen);
  BeliefState infer_initial(const torch::Tensor& x1, const torch::Tensor& r1, const torch::Tensor& eps);
  BeliefState infer_step(const BeliefState& prev, const torch::Tensor& x, const torch::Tensor& r,
                         const torch::Tensor& a_prev, torch::Generator& gen);
  BeliefState infer_step(const BeliefState& prev, const torch::Tensor& x, const torch::Tensor& r,
                         const torch::Tensor& a_prev, const torch::Tensor& eps);

  DiagGaussian dynamics_predict(const torch::Tensor& z_prev, const torch::Tensor& a_prev);
  DiagGaussian decode_obs(const torch::Tensor& z);
  DiagGaussian decode_reward(const torch::Tensor& z);

  /// One ancestral sample of z_{1:N} per sequence (per MC sample).
  ElboTerms elbo_loss(const SequenceBatch& batch, torch::Generator& gen);
  /// Same with explicit noise of shape [mc_samples * B, N, L].
  ElboTerms elbo_loss(const SequenceBatch& batch, const torch::Tensor& eps);

  Components& components() { return parts_; }

 private:
  torch::Tensor gate_reward(const torch::Tensor& r) const;
  BeliefState posterior_initial(const torch::Tensor& feat, const torch::Tensor& r, const torch::Tensor& eps);
  BeliefState posterior_step(const torch::Tensor& feat, const torch::Tensor& r, const torch::Tensor& z_prev,
                             const torch::Tensor& a_prev, const torch::Tensor& eps);

  ModelConfig cfg_;
  Components parts_;
};
TORCH_MODULE(LatentModel);

/// Stable identifier of parameter names and shapes.
std::string architecture_hash(const torch::nn::Module& module);

/// Dtype of the first parameter (or buffer); float32 for empty modules.
torch::Dtype module_dtype(const torch::nn::Module& module);

/// Copies parameters and buffers between modules of identical architecture.
void copy_state(torch::nn::Module& dst, const torch::nn::Module& src);

}  // namespace latentmeta::model
