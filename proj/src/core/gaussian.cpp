#include "latentmeta/core/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "latentmeta/core/errors.hpp"

namespace latentmeta {

torch::Tensor DiagGaussian::rsample(torch::Generator& gen) const {
  auto eps = torch::randn(mean.sizes(), gen, mean.options());
  return rsample(eps);
}

torch::Tensor DiagGaussian::log_prob(const torch::Tensor& x) const {
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  auto sq = (x - mean).pow(2) * (-log_var).exp();
  return (-0.5 * (sq + log_var + log_two_pi)).sum(-1);
}

DiagGaussian DiagGaussian::standard(at::IntArrayRef shape, const torch::TensorOptions& options) {
  return {torch::zeros(shape, options), torch::zeros(shape, options)};
}

torch::Tensor kl_divergence(const DiagGaussian& q, const DiagGaussian& p) {
  auto ratio = (q.log_var - p.log_var).exp();
  auto mahal = (q.mean - p.mean).pow(2) * (-p.log_var).exp();
  return (0.5 * (ratio + mahal - 1.0 - (q.log_var - p.log_var))).sum(-1);
}

void check_finite(const torch::Tensor& t, std::string_view where) {
  if (!t.defined()) return;
  if (!torch::isfinite(t).all().item<bool>()) {
    throw NumericFault("non-finite values in " + std::string(where));
  }
}

}  // namespace latentmeta
