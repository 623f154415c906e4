#pragma once

#include "latentmeta/envs/lgss_env.hpp"
#include "latentmeta/model/latent_model.hpp"

namespace latentmeta::model {

/// Model config matching a lgss-diagnostic system: vector observations,
/// latent dimension = state dimension, raw (unencoded) features.
ModelConfig lgss_model_config(const envs::lgss::System& sys);

/// Exact components for a lgss-diagnostic system: the true dynamics and
/// decoders, and the analytic one-step posteriors
///   q(z_1 | y_1)             = N(0, I) conditioned on y_1
///   q(z_t | y_t, z_{t-1}, a) = N(A z_{t-1} + B a, diag q) conditioned on y_t
/// where y = [x; r]. Requires C^T R^-1 C to be diagonal (ConfigError
/// otherwise). Parameters are fixed buffers in double precision.
Components make_lgss_components(const envs::lgss::System& sys);

}  // namespace latentmeta::model
