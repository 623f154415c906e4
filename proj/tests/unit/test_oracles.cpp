#include <gtest/gtest.h>

#include <cmath>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/oracles/checks.hpp"
#include "latentmeta/oracles/finite_diff.hpp"
#include "latentmeta/oracles/gaussian_kl.hpp"
#include "latentmeta/oracles/kalman.hpp"

namespace lm = latentmeta;
using namespace latentmeta::oracles;

namespace {

DiagGaussianD g1(double mean, double var) {
  return {Eigen::VectorXd::Constant(1, mean), Eigen::VectorXd::Constant(1, var)};
}

Lgss scalar_static(double prior_var, double noise_var) {
  Lgss s;
  s.A = Eigen::MatrixXd::Identity(1, 1);
  s.B = Eigen::MatrixXd::Zero(1, 1);
  s.C = Eigen::MatrixXd::Identity(1, 1);
  s.Q = Eigen::MatrixXd::Zero(1, 1);
  s.R = Eigen::MatrixXd::Constant(1, 1, noise_var);
  s.mu0 = Eigen::VectorXd::Zero(1);
  s.Sigma0 = Eigen::MatrixXd::Constant(1, 1, prior_var);
  return s;
}

}  // namespace

TEST(GaussianKl, ClosedFormExamples) {
  EXPECT_DOUBLE_EQ(gaussian_kl(g1(0, 1), g1(0, 1)), 0.0);
  EXPECT_DOUBLE_EQ(gaussian_kl(g1(1, 1), g1(0, 1)), 0.5);
  EXPECT_NEAR(gaussian_kl(g1(0, 4), g1(0, 1)), (4.0 - 1.0 - std::log(4.0)) / 2.0, 1e-14);
  EXPECT_NEAR(gaussian_kl(g1(0, 4), g1(0, 1)), 0.80685, 1e-5);
}

TEST(GaussianKl, DomainErrors) {
  EXPECT_THROW(gaussian_kl(g1(0, 0), g1(0, 1)), lm::DomainError);
  EXPECT_THROW(gaussian_kl(g1(0, 1), g1(0, -1)), lm::DomainError);
  DiagGaussianD two{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)};
  EXPECT_THROW(gaussian_kl(two, g1(0, 1)), lm::DomainError);
}

TEST(GaussianKl, NonNegativeAndZeroOnSelf) {
  lm::Rng rng(3);
  for (int k = 0; k < 500; ++k) {
    DiagGaussianD p{Eigen::VectorXd(3), Eigen::VectorXd(3)}, q{Eigen::VectorXd(3), Eigen::VectorXd(3)};
    for (int i = 0; i < 3; ++i) {
      p.mean(i) = rng.normal();
      q.mean(i) = rng.normal();
      p.var(i) = std::exp(rng.uniform(-3, 3));
      q.var(i) = std::exp(rng.uniform(-3, 3));
    }
    EXPECT_GE(gaussian_kl(p, q), 0.0);
    EXPECT_NEAR(gaussian_kl(p, p), 0.0, 1e-12);
  }
}

TEST(GaussianKl, MonteCarloAgreementSmall) {
  const auto r = check_kl_monte_carlo(10, 20000, 4.0, 5);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Kalman, StaticScalarConjugate) {
  const double s0 = 2.0, s2 = 0.5;
  const auto sys = scalar_static(s0, s2);
  std::vector<Eigen::VectorXd> ys, as;
  const int n = 5;
  for (int i = 0; i < n; ++i) ys.push_back(Eigen::VectorXd::Constant(1, 0.1 * i));
  for (int i = 0; i + 1 < n; ++i) as.push_back(Eigen::VectorXd::Zero(1));
  const auto f = kalman_filter(sys, ys, as);
  EXPECT_NEAR(f.covs.back()(0, 0), 1.0 / (1.0 / s0 + n / s2), 1e-12);
}

TEST(Kalman, NoiselessObservationLimit) {
  const auto sys = scalar_static(1.0, 1e-14);
  const auto f = kalman_filter(sys, {Eigen::VectorXd::Constant(1, 0.7)}, {});
  EXPECT_NEAR(f.means[0](0), 0.7, 1e-10);
}

TEST(Kalman, MatchesDenseJointConditioning) {
  const auto r = check_kalman_dense(20, 3, 1e-10, 2);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Kalman, RejectsBadCovariance) {
  auto sys = scalar_static(1.0, 1.0);
  sys.R(0, 0) = -1.0;
  EXPECT_THROW(sys.validate(), lm::NumericFault);
  sys = scalar_static(1.0, 1.0);
  EXPECT_THROW(kalman_filter(sys, {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)}, {}), lm::UsageError);
}

TEST(FiniteDiff, Examples) {
  const auto g = finite_diff_grad([](const Eigen::VectorXd& x) { return x(0) * x(0); }, Eigen::VectorXd::Constant(1, 3.0));
  EXPECT_NEAR(g(0), 6.0, 1e-8);
  const auto z = finite_diff_grad([](const Eigen::VectorXd&) { return 4.2; }, Eigen::VectorXd::Ones(4));
  EXPECT_EQ(z, Eigen::VectorXd::Zero(4));
  EXPECT_NEAR(max_relative_error(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(1.0, 2.2)), 0.2 / 2.2, 1e-12);
}
