#include "latentmeta/oracles/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "latentmeta/oracles/gaussian_kl.hpp"

namespace latentmeta::oracles {

namespace {

Eigen::MatrixXd random_matrix(int r, int c, double scale, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal(0.0, scale);
  return m;
}

Eigen::MatrixXd random_spd(int n, double jitter, Rng& rng) {
  const Eigen::MatrixXd L = random_matrix(n, n, 0.5, rng);
  return L * L.transpose() + jitter * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

Lgss random_lgss(int n, int m, int p, Rng& rng) {
  Lgss s;
  s.A = random_matrix(n, n, 0.4, rng);
  s.B = random_matrix(n, m, 0.5, rng);
  s.C = random_matrix(p, n, 1.0, rng);
  s.Q = random_spd(n, 0.1, rng);
  s.R = random_spd(p, 0.1, rng);
  s.mu0 = random_matrix(n, 1, 1.0, rng);
  s.Sigma0 = random_spd(n, 0.2, rng);
  return s;
}

CheckResult check_kl_monte_carlo(int pairs, int samples, double max_se, std::uint64_t seed) {
  Rng rng(seed);
  CheckResult r;
  r.cases = pairs;
  for (int k = 0; k < pairs; ++k) {
    const int d = 1 + static_cast<int>(rng.index(4));
    DiagGaussianD p{Eigen::VectorXd(d), Eigen::VectorXd(d)}, q{Eigen::VectorXd(d), Eigen::VectorXd(d)};
    for (int i = 0; i < d; ++i) {
      p.mean(i) = rng.normal();
      q.mean(i) = rng.normal();
      p.var(i) = std::exp(rng.uniform(-1.0, 1.0));
      q.var(i) = std::exp(rng.uniform(-1.0, 1.0));
    }
    const double exact = gaussian_kl(p, q);
    const auto mc = monte_carlo_kl(p, q, samples, rng);
    const double z = std::abs(mc.mean - exact) / mc.std_error;
    r.worst = std::max(r.worst, z);
    if (!(z <= max_se)) ++r.failures;
  }
  r.pass = r.failures == 0;
  std::ostringstream os;
  os << pairs << " pairs, worst gap " << r.worst << " SE, " << r.failures << " beyond " << max_se << " SE";
  r.detail = os.str();
  return r;
}

CheckResult check_kalman_dense(int systems, int T, double tol, std::uint64_t seed) {
  Rng rng(seed);
  CheckResult r;
  r.cases = systems;
  for (int k = 0; k < systems; ++k) {
    const int n = 1 + static_cast<int>(rng.index(3));
    const int m = 1 + static_cast<int>(rng.index(2));
    const int p = 1 + static_cast<int>(rng.index(3));
    const auto sys = random_lgss(n, m, p, rng);
    std::vector<Eigen::VectorXd> ys, as;
    for (int t = 0; t < T; ++t) ys.push_back(random_matrix(p, 1, 1.0, rng));
    for (int t = 0; t + 1 < T; ++t) as.push_back(random_matrix(m, 1, 1.0, rng));
    const auto kf = kalman_filter(sys, ys, as);
    const auto dense = dense_joint_filter(sys, ys, as);
    double err = std::abs(kf.log_likelihood - dense.log_likelihood);
    for (int t = 0; t < T; ++t) {
      err = std::max(err, (kf.means[t] - dense.means[t]).cwiseAbs().maxCoeff());
      err = std::max(err, (kf.covs[t] - dense.covs[t]).cwiseAbs().maxCoeff());
    }
    r.worst = std::max(r.worst, err);
    if (!(err <= tol)) ++r.failures;
  }
  r.pass = r.failures == 0;
  std::ostringstream os;
  os << systems << " systems (T=" << T << "), worst abs error " << r.worst << ", tolerance " << tol;
  r.detail = os.str();
  return r;
}

}  // namespace latentmeta::oracles
