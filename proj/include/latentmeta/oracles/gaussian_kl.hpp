#pragma once

#include <Eigen/Dense>

#include "latentmeta/core/random.hpp"

namespace latentmeta::oracles {

/// Diagonal Gaussian in double precision, parameterized by variances.
struct DiagGaussianD {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

/// Closed-form KL(p || q), summed over dimensions.
/// Throws DomainError on mismatched sizes or non-positive variances.
double gaussian_kl(const DiagGaussianD& p, const DiagGaussianD& q);

double diag_log_density(const Eigen::VectorXd& x, const DiagGaussianD& g);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Sample average of log p(x) - log q(x), x ~ p.
MonteCarloEstimate monte_carlo_kl(const DiagGaussianD& p, const DiagGaussianD& q, int samples, Rng& rng);

}  // namespace latentmeta::oracles
