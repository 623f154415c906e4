#pragma once

#include <cstdint>
#include <string>

#include "latentmeta/core/random.hpp"
#include "latentmeta/oracles/kalman.hpp"

namespace latentmeta::oracles {

struct CheckResult {
  bool pass = false;
  /// Worst observed statistic (standard errors or absolute error).
  double worst = 0.0;
  int failures = 0;
  int cases = 0;
  std::string detail;
};

/// Closed-form KL against a `samples`-draw Monte-Carlo estimate for `pairs`
/// random diagonal Gaussian pairs; passes when every gap is within
/// `max_std_errors` standard errors.
CheckResult check_kl_monte_carlo(int pairs, int samples, double max_std_errors, std::uint64_t seed);

/// Kalman filtering marginals and log-likelihood against dense joint
/// conditioning on `systems` random systems of length `T`.
CheckResult check_kalman_dense(int systems, int T, double tol, std::uint64_t seed);

/// Random stable system with SPD noise and a random Gaussian prior.
Lgss random_lgss(int n, int m, int p, Rng& rng);

}  // namespace latentmeta::oracles
