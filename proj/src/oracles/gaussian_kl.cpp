#include "latentmeta/oracles/gaussian_kl.hpp"

#include <cmath>
#include <numbers>

#include "latentmeta/core/errors.hpp"

namespace latentmeta::oracles {

namespace {
void check(const DiagGaussianD& g) {
  if (g.mean.size() != g.var.size()) throw DomainError("mean/variance size mismatch");
  for (int i = 0; i < g.var.size(); ++i) {
    if (!(g.var(i) > 0.0)) throw DomainError("variance must be positive");
  }
}
}  // namespace

double gaussian_kl(const DiagGaussianD& p, const DiagGaussianD& q) {
  check(p);
  check(q);
  if (p.mean.size() != q.mean.size()) throw DomainError("dimension mismatch");
  double kl = 0.0;
  for (int i = 0; i < p.mean.size(); ++i) {
    const double ratio = p.var(i) / q.var(i);
    const double diff = p.mean(i) - q.mean(i);
    kl += 0.5 * (ratio + diff * diff / q.var(i) - 1.0 - std::log(ratio));
  }
  return kl;
}

double diag_log_density(const Eigen::VectorXd& x, const DiagGaussianD& g) {
  double lp = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    const double d = x(i) - g.mean(i);
    lp += -0.5 * (d * d / g.var(i) + std::log(2.0 * std::numbers::pi * g.var(i)));
  }
  return lp;
}

MonteCarloEstimate monte_carlo_kl(const DiagGaussianD& p, const DiagGaussianD& q, int samples, Rng& rng) {
  check(p);
  check(q);
  double sum = 0.0;
  double sum_sq = 0.0;
  Eigen::VectorXd x(p.mean.size());
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < x.size(); ++i) x(i) = p.mean(i) + std::sqrt(p.var(i)) * rng.normal();
    const double v = diag_log_density(x, p) - diag_log_density(x, q);
    sum += v;
    sum_sq += v * v;
  }
  MonteCarloEstimate est;
  est.mean = sum / samples;
  const double variance = std::max(0.0, sum_sq / samples - est.mean * est.mean);
  est.std_error = std::sqrt(variance / samples);
  return est;
}

}  // namespace latentmeta::oracles
