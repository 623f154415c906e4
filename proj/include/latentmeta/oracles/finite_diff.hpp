#pragma once

#include <Eigen/Dense>

#include <functional>

namespace latentmeta::oracles {

using ScalarFunction = std::function<double(const Eigen::VectorXd&)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
Eigen::VectorXd finite_diff_grad(const ScalarFunction& f, const Eigen::VectorXd& x, double h = 1e-5);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-6);

}  // namespace latentmeta::oracles
