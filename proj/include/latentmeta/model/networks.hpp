#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

#include "latentmeta/core/gaussian.hpp"

namespace latentmeta::model {

/// Fully connected ReLU network. `hidden` may be empty (pure affine map).
class MlpImpl : public torch::nn::Module {
 public:
  MlpImpl(std::int64_t in, const std::vector<std::int64_t>& hidden, std::int64_t out);
  torch::Tensor forward(const torch::Tensor& x);
  /// Last affine layer; exposed so tests can zero it.
  torch::nn::Linear& output_layer() { return layers_.back(); }

 private:
  std::vector<torch::nn::Linear> layers_;
};
TORCH_MODULE(Mlp);

/// p(y | input) as a diagonal Gaussian. Implementations define how the
/// conditioning input is laid out; LatentModel documents the layouts.
class ConditionalGaussian : public torch::nn::Module {
 public:
  virtual DiagGaussian forward(const torch::Tensor& input) = 0;
};

enum class VarianceMode {
  /// log_var = clamp(raw, lo, hi)
  kClamped,
  /// var = floor + exp(raw)
  kFloored,
};

struct VarianceOptions {
  VarianceMode mode = VarianceMode::kClamped;
  double log_var_min = -10.0;
  double log_var_max = 4.0;
  double var_floor = 1e-3;
};

torch::Tensor apply_variance(const torch::Tensor& raw, const VarianceOptions& opts);

/// MLP emitting [mean, raw variance] for an `out`-dimensional Gaussian.
class MlpGaussian : public ConditionalGaussian {
 public:
  MlpGaussian(std::int64_t in, const std::vector<std::int64_t>& hidden, std::int64_t out, VarianceOptions var);
  DiagGaussian forward(const torch::Tensor& input) override;
  Mlp& net() { return net_; }

 private:
  Mlp net_;
  std::int64_t out_;
  VarianceOptions var_;
};

/// Maps a batch of observations [B, ...] to features [B, F].
class ObservationEncoder : public torch::nn::Module {
 public:
  virtual torch::Tensor forward(const torch::Tensor& obs) = 0;
  virtual std::int64_t out_dim() const = 0;
};

/// Stride-2 4x4 convolutions, each halving the spatial size.
class ConvEncoder : public ObservationEncoder {
 public:
  ConvEncoder(std::int64_t channels, std::int64_t image_size, const std::vector<std::int64_t>& filters);
  torch::Tensor forward(const torch::Tensor& obs) override;
  std::int64_t out_dim() const override { return out_dim_; }

 private:
  torch::nn::Sequential net_;
  std::int64_t out_dim_;
};

/// Proprio encoder: one ReLU layer, or identity when `hidden` is 0.
class VectorEncoder : public ObservationEncoder {
 public:
  VectorEncoder(std::int64_t in, std::int64_t hidden);
  torch::Tensor forward(const torch::Tensor& obs) override;
  std::int64_t out_dim() const override { return out_dim_; }

 private:
  torch::nn::Linear fc_{nullptr};
  std::int64_t out_dim_;
};

/// Transposed counterpart of ConvEncoder: z -> mean image. Pixels share one
/// variance: fixed when fixed_var > 0, else learned and floored.
class ConvDecoder : public ConditionalGaussian {
 public:
  ConvDecoder(std::int64_t latent_dim, std::int64_t channels, std::int64_t image_size,
              const std::vector<std::int64_t>& filters, VarianceOptions var, double fixed_var = 0.0);
  /// Returns a Gaussian over the flattened image [B, C*H*W].
  DiagGaussian forward(const torch::Tensor& z) override;

 private:
  torch::nn::Linear fc_{nullptr};
  torch::nn::Sequential net_;
  torch::Tensor raw_log_var_;
  std::int64_t base_channels_;
  std::int64_t base_size_;
  VarianceOptions var_;
  double fixed_var_;
};

}  // namespace latentmeta::model
