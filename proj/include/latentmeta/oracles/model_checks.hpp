#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <functional>
#include <vector>

#include "latentmeta/envs/task.hpp"
#include "latentmeta/oracles/checks.hpp"

namespace latentmeta::oracles {

/// Compares autograd gradients of `loss` with respect to `params` against
/// central differences (step h). Relative error uses max(|a|, |b|, floor).
/// Parameters are restored afterwards.
CheckResult check_gradient(const std::vector<torch::Tensor>& params, const std::function<torch::Tensor()>& loss,
                           double tol, double h = 1e-5, double floor = 1e-4);

/// Monte-Carlo ELBO of the model with exact lgss heads on one simulated
/// trajectory, next to the Kalman log-likelihood of the same data.
struct ElboEstimate {
  double elbo = 0.0;
  double std_error = 0.0;
  double exact_log_lik = 0.0;
};

/// `mean_shift` and `log_var_shift` perturb every posterior (0 for exact).
ElboEstimate lgss_elbo(const envs::Task& task, int samples, std::uint64_t seed, double mean_shift = 0.0,
                       double log_var_shift = 0.0);

/// Exact posterior on memoryless lgss tasks: |ELBO - log p| <= tol.
CheckResult check_elbo_exact(int systems, int samples, double tol, std::uint64_t seed);

/// Randomly perturbed posteriors: every ELBO estimate stays below log p.
CheckResult check_elbo_bound(int perturbations, int samples, std::uint64_t seed);

struct GradientReport {
  CheckResult elbo;
  CheckResult actor;
  CheckResult critic;
};

/// Tiny double-precision networks (latent 3, two timesteps).
GradientReport check_gradients(double tol, std::uint64_t seed);

}  // namespace latentmeta::oracles
