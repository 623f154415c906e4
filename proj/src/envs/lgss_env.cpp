#include "latentmeta/envs/lgss_env.hpp"

#include <cmath>

namespace latentmeta::envs::lgss {

System decode(const Task& task) {
  const auto& p = task.params;
  const int n = static_cast<int>(p[0]);
  const int m = static_cast<int>(p[1]);
  const int q = static_cast<int>(p[2]);
  System sys;
  std::size_t k = 3;
  auto fill = [&](Eigen::MatrixXd& mat, int rows, int cols) {
    mat.resize(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) mat(i, j) = p[k++];
  };
  fill(sys.A, n, n);
  fill(sys.B, n, m);
  fill(sys.C, q + 1, n);
  sys.q.resize(n);
  for (int i = 0; i < n; ++i) sys.q(i) = p[k++];
  sys.r.resize(q + 1);
  for (int i = 0; i < q + 1; ++i) sys.r(i) = p[k++];
  return sys;
}

Task encode(const System& sys, std::uint64_t seed, int id) {
  Task t;
  t.family = Family::kLgssDiagnostic;
  t.seed = seed;
  t.id = id;
  t.params = {double(sys.state_dim()), double(sys.action_dim()), double(sys.obs_dim())};
  auto push = [&](const Eigen::MatrixXd& mat) {
    for (int i = 0; i < mat.rows(); ++i)
      for (int j = 0; j < mat.cols(); ++j) t.params.push_back(mat(i, j));
  };
  push(sys.A);
  push(sys.B);
  push(sys.C);
  for (int i = 0; i < sys.q.size(); ++i) t.params.push_back(sys.q(i));
  for (int i = 0; i < sys.r.size(); ++i) t.params.push_back(sys.r(i));
  return t;
}

LgssEnv::LgssEnv(Task task, EnvConfig config) : Environment(std::move(task), std::move(config)) {
  sys_ = decode(this->task());
}

std::vector<double> LgssEnv::state() const { return {s_.data(), s_.data() + s_.size()}; }

Observation LgssEnv::render() const {
  Observation obs;
  obs.shape = {sys_.obs_dim()};
  for (int i = 0; i < x_.size(); ++i) obs.values.push_back(static_cast<float>(x_(i)));
  return obs;
}

void LgssEnv::emit(Rng& rng) {
  Eigen::VectorXd y = sys_.C * s_;
  for (int i = 0; i < y.size(); ++i) y(i) += std::sqrt(sys_.r(i)) * rng.normal();
  x_ = y.head(sys_.obs_dim());
  reward_ = y(sys_.obs_dim());
}

void LgssEnv::reset_state(Rng& rng) {
  s_.resize(sys_.state_dim());
  for (int i = 0; i < s_.size(); ++i) s_(i) = rng.normal();
  emit(rng);
}

void LgssEnv::advance(std::span<const double> action, Rng& rng, StepResult& out) {
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(action.data(), static_cast<Eigen::Index>(action.size()));
  s_ = sys_.A * s_ + sys_.B * a;
  for (int i = 0; i < s_.size(); ++i) s_(i) += std::sqrt(sys_.q(i)) * rng.normal();
  emit(rng);
  out.shaped_reward = reward_;
  out.sparse_reward = 0.0;
}

}  // namespace latentmeta::envs::lgss
