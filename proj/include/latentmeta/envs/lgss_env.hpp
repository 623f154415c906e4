#pragma once

#include <Eigen/Dense>

#include "latentmeta/envs/environment.hpp"

namespace latentmeta::envs::lgss {

/// Linear-Gaussian system decoded from a lgss-diagnostic task.
///   s_1 ~ N(0, I),  s_{t+1} = A s_t + B a_t + w,  w ~ N(0, diag(q))
///   [x_t; r_t] = C s_t + v,  v ~ N(0, diag(r))
struct System {
  Eigen::MatrixXd A, B, C;
  Eigen::VectorXd q, r;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int action_dim() const { return static_cast<int>(B.cols()); }
  /// Observation dimension excluding the reward row.
  int obs_dim() const { return static_cast<int>(C.rows()) - 1; }
};

System decode(const Task& task);
Task encode(const System& sys, std::uint64_t seed, int id);

class LgssEnv final : public Environment {
 public:
  LgssEnv(Task task, EnvConfig config);

  int action_dim() const override { return sys_.action_dim(); }
  std::vector<std::int64_t> obs_shape() const override { return {sys_.obs_dim()}; }
  std::vector<double> state() const override;
  double initial_reward() const override { return reward_; }
  Observation render() const override;

  const System& system() const { return sys_; }

 protected:
  void reset_state(Rng& rng) override;
  void advance(std::span<const double> action, Rng& rng, StepResult& out) override;

 private:
  void emit(Rng& rng);

  System sys_;
  Eigen::VectorXd s_;
  Eigen::VectorXd x_;
  double reward_ = 0.0;
};

}  // namespace latentmeta::envs::lgss
