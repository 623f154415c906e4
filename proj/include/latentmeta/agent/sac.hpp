#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <memory>
#include <vector>

#include "latentmeta/model/latent_model.hpp"
#include "latentmeta/model/networks.hpp"

namespace latentmeta::agent {

enum class ActionMode { kSample, kMean };

/// Which belief summary conditions the actor and critics.
enum class BeliefInput {
  kMeanLogVar,  // [mean, log_var], length 2L
  kSample,      // z sample, length L
};

torch::Tensor belief_feature(const model::BeliefState& b, BeliefInput input);
std::int64_t belief_feature_dim(std::int64_t latent_dim, BeliefInput input);

struct SacConfig {
  std::int64_t feature_dim = 128;
  std::int64_t action_dim = 2;
  std::vector<std::int64_t> hidden = {256, 256};
  double gamma = 0.99;
  double tau = 0.005;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double alpha_lr = 3e-4;
  double initial_alpha = 1.0;
  /// Defaults to -action_dim when NaN.
  double target_entropy = std::numeric_limits<double>::quiet_NaN();
  double log_std_min = -10.0;
  double log_std_max = 2.0;

  double resolved_target_entropy() const;
};

/// Flat batch of belief transitions.
struct TransitionBatch {
  torch::Tensor feature;       // [B, F]
  torch::Tensor action;        // [B, d]
  torch::Tensor reward;        // [B]
  torch::Tensor next_feature;  // [B, F]
  torch::Tensor done;          // [B]

  std::int64_t size() const { return feature.size(0); }
  TransitionBatch index(const torch::Tensor& idx) const;
};

struct PolicySample {
  torch::Tensor action;    // tanh(u)
  torch::Tensor log_prob;  // [B]
};

/// Actor, twin critics, their Polyak targets and the entropy temperature.
class SacNetworksImpl : public torch::nn::Module {
 public:
  explicit SacNetworksImpl(const SacConfig& cfg);

  model::Mlp actor{nullptr};
  model::Mlp q1{nullptr};
  model::Mlp q2{nullptr};
  model::Mlp q1_target{nullptr};
  model::Mlp q2_target{nullptr};
  torch::Tensor log_alpha;
};
TORCH_MODULE(SacNetworks);

struct SacLosses {
  double critic = 0.0;
  double actor = 0.0;
  double temperature = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;
};

class SacAgent {
 public:
  explicit SacAgent(SacConfig cfg);

  const SacConfig& config() const { return cfg_; }
  SacNetworks& networks() { return nets_; }

  /// Squashed Gaussian policy. `eps` has shape [B, d].
  PolicySample sample(const torch::Tensor& feature, const torch::Tensor& eps);
  PolicySample sample(const torch::Tensor& feature, torch::Generator& gen);
  torch::Tensor mean_action(const torch::Tensor& feature);
  /// log pi(a | feature) for actions strictly inside (-1, 1).
  torch::Tensor log_prob(const torch::Tensor& feature, const torch::Tensor& action);

  /// Action for the current belief, never touching parameters.
  torch::Tensor act(const torch::Tensor& feature, ActionMode mode, torch::Generator& gen);

  torch::Tensor q_values(const torch::Tensor& feature, const torch::Tensor& action, bool target);

  /// Soft Bellman target r + gamma (1 - done) (min Qbar(b', a') - alpha log pi(a'|b')).
  torch::Tensor critic_target(const TransitionBatch& batch, const torch::Tensor& next_eps);
  /// sum over critics of mean squared residual against critic_target.
  torch::Tensor critic_loss(const TransitionBatch& batch, const torch::Tensor& next_eps);
  /// mean(alpha log pi(a|b) - min Q(b, a)) with a reparameterized.
  torch::Tensor actor_loss(const torch::Tensor& feature, const torch::Tensor& eps, torch::Tensor* log_prob_out = nullptr);
  /// -mean(log_alpha (log pi + target_entropy)).
  torch::Tensor temperature_loss(const torch::Tensor& log_prob);
  /// target <- (1 - tau) target + tau online.
  void polyak_update(double tau);

  /// One critic, actor and temperature step followed by a Polyak update.
  /// The actor and temperature see the first `actor_batch` rows (all if < 0).
  SacLosses update(const TransitionBatch& batch, torch::Generator& gen, std::int64_t actor_batch = -1);

  torch::optim::Adam& actor_optimizer() { return *actor_opt_; }
  torch::optim::Adam& critic_optimizer() { return *critic_opt_; }
  torch::optim::Adam& alpha_optimizer() { return *alpha_opt_; }

  void to(torch::Dtype dtype);

 private:
  torch::Tensor alpha() const { return nets_->log_alpha.exp().detach(); }
  void make_optimizers();

  SacConfig cfg_;
  SacNetworks nets_;
  std::unique_ptr<torch::optim::Adam> actor_opt_;
  std::unique_ptr<torch::optim::Adam> critic_opt_;
  std::unique_ptr<torch::optim::Adam> alpha_opt_;
};

}  // namespace latentmeta::agent
