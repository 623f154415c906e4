#include "latentmeta/model/lgss_heads.hpp"

#include "latentmeta/core/errors.hpp"

namespace latentmeta::model {

namespace {

torch::Tensor to_tensor(const Eigen::MatrixXd& m) {
  auto t = torch::empty({m.rows(), m.cols()}, torch::kDouble);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) t[i][j] = m(i, j);
  return t;
}

torch::Tensor to_tensor(const Eigen::VectorXd& v) {
  auto t = torch::empty({v.size()}, torch::kDouble);
  for (Eigen::Index i = 0; i < v.size(); ++i) t[i] = v(i);
  return t;
}

class PassThroughEncoder : public ObservationEncoder {
 public:
  explicit PassThroughEncoder(std::int64_t dim) : dim_(dim) {}
  torch::Tensor forward(const torch::Tensor& obs) override { return obs.flatten(1); }
  std::int64_t out_dim() const override { return dim_; }

 private:
  std::int64_t dim_;
};

/// Gaussian conditioning of a diagonal prior on y = [x; r].
class AnalyticPosterior : public ConditionalGaussian {
 public:
  AnalyticPosterior(const envs::lgss::System& sys, bool initial) : initial_(initial) {
    n_ = sys.state_dim();
    m_ = sys.action_dim();
    p_ = sys.obs_dim();
    const Eigen::MatrixXd info = sys.C.transpose() * sys.r.cwiseInverse().asDiagonal() * sys.C;
    const Eigen::MatrixXd off = info - Eigen::MatrixXd(info.diagonal().asDiagonal());
    if (off.cwiseAbs().maxCoeff() > 1e-12) {
      throw ConfigError("analytic posterior needs C^T R^-1 C diagonal");
    }
    const Eigen::VectorXd prior_prec = initial ? Eigen::VectorXd::Ones(n_) : Eigen::VectorXd(sys.q.cwiseInverse());
    const Eigen::VectorXd post_var = (prior_prec + info.diagonal()).cwiseInverse();
    post_var_ = register_buffer("post_var", to_tensor(post_var));
    prior_prec_ = register_buffer("prior_prec", to_tensor(prior_prec));
    gain_ = register_buffer("ct_rinv", to_tensor(Eigen::MatrixXd(sys.C.transpose() * sys.r.cwiseInverse().asDiagonal())));
    A_ = register_buffer("A", to_tensor(sys.A));
    B_ = register_buffer("B", to_tensor(sys.B));
  }

  DiagGaussian forward(const torch::Tensor& input) override {
    // initial: [x (p), r (1)]; step: [x (p), r (1), z (n), a (m), flag (1)]
    auto y = input.narrow(-1, 0, p_ + 1);
    auto info = torch::matmul(y, gain_.t());
    if (!initial_) {
      auto z = input.narrow(-1, p_ + 1, n_);
      auto a = input.narrow(-1, p_ + 1 + n_, m_);
      auto prior_mean = torch::matmul(z, A_.t()) + torch::matmul(a, B_.t());
      info = info + prior_prec_ * prior_mean;
    }
    auto mean = post_var_ * info;
    return {mean, post_var_.log().expand_as(mean)};
  }

 private:
  bool initial_;
  std::int64_t n_, m_, p_;
  torch::Tensor post_var_, prior_prec_, gain_, A_, B_;
};

class LinearDynamics : public ConditionalGaussian {
 public:
  explicit LinearDynamics(const envs::lgss::System& sys) : n_(sys.state_dim()), m_(sys.action_dim()) {
    A_ = register_buffer("A", to_tensor(sys.A));
    B_ = register_buffer("B", to_tensor(sys.B));
    log_q_ = register_buffer("log_q", to_tensor(Eigen::VectorXd(sys.q.array().log())));
  }
  DiagGaussian forward(const torch::Tensor& input) override {
    auto z = input.narrow(-1, 0, n_);
    auto a = input.narrow(-1, n_, m_);
    auto mean = torch::matmul(z, A_.t()) + torch::matmul(a, B_.t());
    return {mean, log_q_.expand_as(mean)};
  }

 private:
  std::int64_t n_, m_;
  torch::Tensor A_, B_, log_q_;
};

class LinearDecoder : public ConditionalGaussian {
 public:
  LinearDecoder(const Eigen::MatrixXd& C, const Eigen::VectorXd& var) {
    C_ = register_buffer("C", to_tensor(C));
    log_var_ = register_buffer("log_var", to_tensor(Eigen::VectorXd(var.array().log())));
  }
  DiagGaussian forward(const torch::Tensor& z) override {
    auto mean = torch::matmul(z, C_.t());
    return {mean, log_var_.expand_as(mean)};
  }

 private:
  torch::Tensor C_, log_var_;
};

}  // namespace

ModelConfig lgss_model_config(const envs::lgss::System& sys) {
  ModelConfig cfg;
  cfg.obs_kind = ObsKind::kVector;
  cfg.obs_shape = {sys.obs_dim()};
  cfg.action_dim = sys.action_dim();
  cfg.latent_dim = sys.state_dim();
  cfg.vector_encoder_hidden = 0;
  return cfg;
}

Components make_lgss_components(const envs::lgss::System& sys) {
  const int p = sys.obs_dim();
  Components c;
  c.encoder = std::make_shared<PassThroughEncoder>(p);
  c.initial_posterior = std::make_shared<AnalyticPosterior>(sys, true);
  c.step_posterior = std::make_shared<AnalyticPosterior>(sys, false);
  c.dynamics = std::make_shared<LinearDynamics>(sys);
  c.obs_decoder = std::make_shared<LinearDecoder>(sys.C.topRows(p), sys.r.head(p));
  c.reward_decoder = std::make_shared<LinearDecoder>(sys.C.bottomRows(1), sys.r.tail(1));
  return c;
}

}  // namespace latentmeta::model
