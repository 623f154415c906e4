#include "latentmeta/oracles/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "latentmeta/core/errors.hpp"

namespace latentmeta::oracles {

Eigen::VectorXd finite_diff_grad(const ScalarFunction& f, const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor) {
  if (a.size() != b.size()) throw UsageError("gradient size mismatch");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a(i)), std::abs(b(i)), floor});
    worst = std::max(worst, std::abs(a(i) - b(i)) / denom);
  }
  return worst;
}

}  // namespace latentmeta::oracles
