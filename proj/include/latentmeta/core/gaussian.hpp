#pragma once

#include <torch/torch.h>

#include <string_view>

namespace latentmeta {

/// Batched diagonal Gaussian. `mean` and `log_var` share shape [..., D];
/// densities and divergences reduce over the last dimension.
struct DiagGaussian {
  torch::Tensor mean;
  torch::Tensor log_var;

  torch::Tensor var() const { return log_var.exp(); }
  torch::Tensor stddev() const { return (0.5 * log_var).exp(); }

  /// Reparameterized draw mean + std * eps with caller-provided noise.
  torch::Tensor rsample(const torch::Tensor& eps) const { return mean + stddev() * eps; }
  torch::Tensor rsample(torch::Generator& gen) const;

  /// Sum over the last dimension of log N(x; mean, var).
  torch::Tensor log_prob(const torch::Tensor& x) const;

  /// Standard normal with the given shape and options.
  static DiagGaussian standard(at::IntArrayRef shape, const torch::TensorOptions& options);

  DiagGaussian detach() const { return {mean.detach(), log_var.detach()}; }
};

/// KL(q || p) summed over the last dimension.
torch::Tensor kl_divergence(const DiagGaussian& q, const DiagGaussian& p);

/// Throws NumericFault naming `where` if `t` has a non-finite entry.
void check_finite(const torch::Tensor& t, std::string_view where);

}  // namespace latentmeta
