#include "latentmeta/oracles/kalman.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/envs/lgss_env.hpp"

namespace latentmeta::oracles {

namespace {

void require_spd(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() != m.cols()) throw UsageError(std::string(name) + " must be square");
  if (!m.isApprox(m.transpose(), 1e-12)) throw NumericFault(std::string(name) + " is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NumericFault(std::string(name) + " is not positive definite");
}

void require_psd(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() != m.cols()) throw UsageError(std::string(name) + " must be square");
  if (!m.isApprox(m.transpose(), 1e-12) && !m.isZero()) throw NumericFault(std::string(name) + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.eigenvalues().minCoeff() < -1e-12) throw NumericFault(std::string(name) + " is not positive semi-definite");
}

}  // namespace

void Lgss::validate() const {
  const auto n = A.rows();
  if (A.cols() != n || B.rows() != n || C.cols() != n || mu0.size() != n || Sigma0.rows() != n ||
      Q.rows() != n || R.rows() != C.rows()) {
    throw UsageError("LGSS matrix dimensions are inconsistent");
  }
  // Q may be singular (static or deterministic dynamics).
  require_psd(Q, "Q");
  require_spd(R, "R");
  require_spd(Sigma0, "Sigma0");
}

Lgss from_env_system(const envs::lgss::System& sys) {
  Lgss out;
  out.A = sys.A;
  out.B = sys.B;
  out.C = sys.C;
  out.Q = sys.q.asDiagonal();
  out.R = sys.r.asDiagonal();
  out.mu0 = Eigen::VectorXd::Zero(sys.state_dim());
  out.Sigma0 = Eigen::MatrixXd::Identity(sys.state_dim(), sys.state_dim());
  return out;
}

double gaussian_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericFault("covariance is not positive definite");
  const Eigen::VectorXd diff = x - mean;
  const Eigen::VectorXd w = llt.matrixL().solve(diff);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (w.squaredNorm() + log_det + static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi));
}

Gaussian kalman_predict(const Gaussian& belief, const Lgss& sys, const Eigen::VectorXd& action) {
  Gaussian out;
  out.mean = sys.A * belief.mean + sys.B * action;
  out.cov = sys.A * belief.cov * sys.A.transpose() + sys.Q;
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

Gaussian kalman_update(const Gaussian& prior, const Eigen::VectorXd& y, const Lgss& sys, double* log_lik) {
  const Eigen::MatrixXd S = sys.C * prior.cov * sys.C.transpose() + sys.R;
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw NumericFault("innovation covariance is not positive definite");
  const Eigen::VectorXd innovation = y - sys.C * prior.mean;
  const Eigen::MatrixXd gain = llt.solve(sys.C * prior.cov).transpose();
  Gaussian out;
  out.mean = prior.mean + gain * innovation;
  // Joseph form keeps the covariance symmetric positive semi-definite.
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(prior.cov.rows(), prior.cov.cols());
  const Eigen::MatrixXd IKC = I - gain * sys.C;
  out.cov = IKC * prior.cov * IKC.transpose() + gain * sys.R * gain.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  if (log_lik) *log_lik += gaussian_log_density(y, sys.C * prior.mean, S);
  return out;
}

FilterResult kalman_filter(const Lgss& sys, const std::vector<Eigen::VectorXd>& observations,
                           const std::vector<Eigen::VectorXd>& actions) {
  sys.validate();
  if (observations.empty()) throw UsageError("kalman_filter needs at least one observation");
  if (actions.size() + 1 != observations.size()) throw UsageError("need exactly T-1 actions for T observations");
  FilterResult out;
  Gaussian belief{sys.mu0, sys.Sigma0};
  for (std::size_t t = 0; t < observations.size(); ++t) {
    if (t > 0) belief = kalman_predict(belief, sys, actions[t - 1]);
    belief = kalman_update(belief, observations[t], sys, &out.log_likelihood);
    out.means.push_back(belief.mean);
    out.covs.push_back(belief.cov);
  }
  return out;
}

FilterResult dense_joint_filter(const Lgss& sys, const std::vector<Eigen::VectorXd>& observations,
                                const std::vector<Eigen::VectorXd>& actions) {
  sys.validate();
  if (actions.size() + 1 != observations.size()) throw UsageError("need exactly T-1 actions for T observations");
  const int T = static_cast<int>(observations.size());
  const int n = sys.state_dim();
  const int p = sys.obs_dim();

  // z = m + L xi with xi = (e_0, w_1, ..., w_{T-1}) ~ N(0, blockdiag(Sigma0, Q, ...)).
  Eigen::VectorXd m(n * T);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * T, n * T);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n * T, n * T);
  m.segment(0, n) = sys.mu0;
  D.block(0, 0, n, n) = sys.Sigma0;
  for (int t = 1; t < T; ++t) {
    m.segment(n * t, n) = sys.A * m.segment(n * (t - 1), n) + sys.B * actions[t - 1];
    D.block(n * t, n * t, n, n) = sys.Q;
  }
  for (int t = 0; t < T; ++t) {
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    for (int s = t; s >= 0; --s) {
      L.block(n * t, n * s, n, n) = power;
      power = power * sys.A;
    }
  }
  const Eigen::MatrixXd cov_z = L * D * L.transpose();
  Eigen::MatrixXd Cb = Eigen::MatrixXd::Zero(p * T, n * T);
  Eigen::MatrixXd Rb = Eigen::MatrixXd::Zero(p * T, p * T);
  Eigen::VectorXd y(p * T);
  for (int t = 0; t < T; ++t) {
    Cb.block(p * t, n * t, p, n) = sys.C;
    Rb.block(p * t, p * t, p, p) = sys.R;
    y.segment(p * t, p) = observations[t];
  }
  const Eigen::MatrixXd cov_y = Cb * cov_z * Cb.transpose() + Rb;
  const Eigen::MatrixXd cov_zy = cov_z * Cb.transpose();
  const Eigen::VectorXd mean_y = Cb * m;

  FilterResult out;
  for (int t = 0; t < T; ++t) {
    const int k = p * (t + 1);
    const Eigen::MatrixXd Syy = cov_y.topLeftCorner(k, k);
    const Eigen::MatrixXd Szy = cov_zy.block(n * t, 0, n, k);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Syy);
    out.means.push_back(m.segment(n * t, n) + Szy * ldlt.solve(y.head(k) - mean_y.head(k)));
    out.covs.push_back(cov_z.block(n * t, n * t, n, n) - Szy * ldlt.solve(Szy.transpose()));
  }
  out.log_likelihood = gaussian_log_density(y, mean_y, cov_y);
  return out;
}

}  // namespace latentmeta::oracles
