#include "latentmeta/model/networks.hpp"

#include <cmath>
#include <string>

#include "latentmeta/core/errors.hpp"

namespace latentmeta::model {

MlpImpl::MlpImpl(std::int64_t in, const std::vector<std::int64_t>& hidden, std::int64_t out) {
  std::int64_t prev = in;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    layers_.push_back(register_module("fc" + std::to_string(i), torch::nn::Linear(prev, hidden[i])));
    prev = hidden[i];
  }
  layers_.push_back(register_module("out", torch::nn::Linear(prev, out)));
}

torch::Tensor MlpImpl::forward(const torch::Tensor& x) {
  auto h = x;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) h = torch::relu(layers_[i]->forward(h));
  return layers_.back()->forward(h);
}

torch::Tensor apply_variance(const torch::Tensor& raw, const VarianceOptions& opts) {
  if (opts.mode == VarianceMode::kClamped) return raw.clamp(opts.log_var_min, opts.log_var_max);
  return (opts.var_floor + raw.exp()).log();
}

MlpGaussian::MlpGaussian(std::int64_t in, const std::vector<std::int64_t>& hidden, std::int64_t out,
                         VarianceOptions var)
    : net_(register_module("net", Mlp(in, hidden, 2 * out))), out_(out), var_(var) {}

DiagGaussian MlpGaussian::forward(const torch::Tensor& input) {
  auto h = net_->forward(input);
  auto parts = h.split(out_, -1);
  return {parts[0], apply_variance(parts[1], var_)};
}

ConvEncoder::ConvEncoder(std::int64_t channels, std::int64_t image_size, const std::vector<std::int64_t>& filters) {
  if (filters.empty()) throw ConfigError("conv_filters must not be empty");
  std::int64_t size = image_size;
  std::int64_t prev = channels;
  for (auto f : filters) {
    if (size % 2 != 0 || size < 2) {
      throw ConfigError("image_size must be divisible by 2^len(conv_filters)");
    }
    net_->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(prev, f, 4).stride(2).padding(1)));
    net_->push_back(torch::nn::ReLU());
    size /= 2;
    prev = f;
  }
  out_dim_ = prev * size * size;
  register_module("net", net_);
}

torch::Tensor ConvEncoder::forward(const torch::Tensor& obs) { return net_->forward(obs).flatten(1); }

VectorEncoder::VectorEncoder(std::int64_t in, std::int64_t hidden) : out_dim_(hidden > 0 ? hidden : in) {
  if (hidden > 0) fc_ = register_module("fc", torch::nn::Linear(in, hidden));
}

torch::Tensor VectorEncoder::forward(const torch::Tensor& obs) {
  auto flat = obs.flatten(1);
  if (fc_.is_empty()) return flat;
  return torch::relu(fc_->forward(flat));
}

ConvDecoder::ConvDecoder(std::int64_t latent_dim, std::int64_t channels, std::int64_t image_size,
                         const std::vector<std::int64_t>& filters, VarianceOptions var, double fixed_var)
    : var_(var), fixed_var_(fixed_var) {
  if (filters.empty()) throw ConfigError("conv_filters must not be empty");
  base_size_ = image_size >> filters.size();
  if ((base_size_ << filters.size()) != image_size || base_size_ < 1) {
    throw ConfigError("image_size must be divisible by 2^len(conv_filters)");
  }
  base_channels_ = filters.back();
  fc_ = register_module("fc", torch::nn::Linear(latent_dim, base_channels_ * base_size_ * base_size_));
  for (std::size_t i = filters.size(); i-- > 0;) {
    const std::int64_t in = filters[i];
    const std::int64_t out = i == 0 ? channels : filters[i - 1];
    net_->push_back(torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1)));
    if (i != 0) net_->push_back(torch::nn::ReLU());
  }
  register_module("net", net_);
  if (fixed_var_ <= 0.0) raw_log_var_ = register_parameter("raw_log_var", torch::zeros({1}));
}

DiagGaussian ConvDecoder::forward(const torch::Tensor& z) {
  auto h = torch::relu(fc_->forward(z)).view({-1, base_channels_, base_size_, base_size_});
  auto mean = net_->forward(h).flatten(1);
  if (fixed_var_ > 0.0) return {mean, torch::full_like(mean, std::log(fixed_var_))};
  return {mean, apply_variance(raw_log_var_, var_).expand_as(mean)};
}

}  // namespace latentmeta::model
