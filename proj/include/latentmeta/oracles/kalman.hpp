#pragma once

#include <Eigen/Dense>

#include <vector>

namespace latentmeta::envs::lgss {
struct System;
}

namespace latentmeta::oracles {

/// Linear-Gaussian state-space system
///   z_1 ~ N(mu0, Sigma0),  z_{t+1} = A z_t + B a_t + w,  w ~ N(0, Q)
///   y_t = C z_t + v,  v ~ N(0, R)
struct Lgss {
  Eigen::MatrixXd A, B, C, Q, R;
  Eigen::VectorXd mu0;
  Eigen::MatrixXd Sigma0;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int obs_dim() const { return static_cast<int>(C.rows()); }
  int action_dim() const { return static_cast<int>(B.cols()); }

  /// Throws UsageError on inconsistent shapes, NumericFault on non-SPD covariances.
  void validate() const;
};

/// Converts an environment-side system; prior is N(0, I).
Lgss from_env_system(const envs::lgss::System& sys);

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct FilterResult {
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;
  double log_likelihood = 0.0;
};

Gaussian kalman_predict(const Gaussian& belief, const Lgss& sys, const Eigen::VectorXd& action);

/// Measurement update. Adds log N(y; C m, C P C' + R) to `log_lik` when non-null.
Gaussian kalman_update(const Gaussian& prior, const Eigen::VectorXd& y, const Lgss& sys,
                       double* log_lik = nullptr);

/// Filtering marginals p(z_t | y_{1:t}, a_{1:t-1}) and log p(y_{1:T} | a).
/// `actions.size()` must be `observations.size() - 1`.
FilterResult kalman_filter(const Lgss& sys, const std::vector<Eigen::VectorXd>& observations,
                           const std::vector<Eigen::VectorXd>& actions);

/// Brute-force reference: builds the full joint Gaussian over (z_{1:T}, y_{1:T})
/// and conditions it densely. O((nT)^3); meant for T of a handful.
FilterResult dense_joint_filter(const Lgss& sys, const std::vector<Eigen::VectorXd>& observations,
                                const std::vector<Eigen::VectorXd>& actions);

/// log N(x; mean, cov) via Cholesky. Throws NumericFault when cov is not SPD.
double gaussian_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

}  // namespace latentmeta::oracles
