#include "latentmeta/envs/task.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/core/random.hpp"
#include "latentmeta/envs/buttonpanel.hpp"
#include "latentmeta/envs/pointnav.hpp"
#include "latentmeta/envs/veltrack.hpp"

namespace latentmeta::envs {

std::string_view to_string(Family family) {
  switch (family) {
    case Family::kPointNav2d: return "pointnav2d";
    case Family::kButtonPanel: return "buttonpanel";
    case Family::kVelTrack: return "veltrack";
    case Family::kLgssDiagnostic: return "lgss-diagnostic";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "pointnav2d") return Family::kPointNav2d;
  if (name == "buttonpanel") return Family::kButtonPanel;
  if (name == "veltrack") return Family::kVelTrack;
  if (name == "lgss-diagnostic") return Family::kLgssDiagnostic;
  throw ConfigError("unknown environment family '" + std::string(name) +
                    "' (expected pointnav2d, buttonpanel, veltrack or lgss-diagnostic)");
}

bool is_sparse_family(Family family) {
  return family == Family::kPointNav2d || family == Family::kButtonPanel;
}

int default_horizon(Family family) {
  switch (family) {
    case Family::kVelTrack: return 50;
    case Family::kLgssDiagnostic: return 10;
    default: return 40;
  }
}

int resolved_horizon(Family family, const EnvConfig& config) {
  return config.horizon > 0 ? config.horizon : default_horizon(family);
}

namespace {

Task make_lgss(Rng& rng, const EnvConfig& config) {
  const int n = config.lgss_state_dim;
  const int m = config.lgss_action_dim;
  const int p = n - 1;
  if (n < 2 || m < 1) throw ConfigError("lgss_state_dim must be >= 2 and lgss_action_dim >= 1");
  std::vector<double> params = {double(n), double(m), double(p)};
  // A: random, rescaled so that the row-sum norm stays below 0.9.
  std::vector<double> a(n * n);
  for (auto& v : a) v = config.lgss_memoryless ? 0.0 : rng.normal(0.0, 0.3);
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += std::abs(a[i * n + j]);
    if (row > 0.9) {
      for (int j = 0; j < n; ++j) a[i * n + j] *= 0.9 / row;
    }
  }
  params.insert(params.end(), a.begin(), a.end());
  for (int i = 0; i < n * m; ++i) params.push_back(rng.normal(0.0, 0.5));
  // C is diagonal in (observation dims, reward) so the exact one-step
  // posterior has diagonal covariance.
  std::vector<double> c((p + 1) * n, 0.0);
  for (int i = 0; i < p; ++i) c[i * n + i] = rng.uniform(0.5, 1.5);
  c[p * n + (n - 1)] = rng.uniform(0.5, 1.5);
  params.insert(params.end(), c.begin(), c.end());
  for (int i = 0; i < n; ++i) params.push_back(rng.uniform(0.2, 0.6));
  for (int i = 0; i < p + 1; ++i) params.push_back(rng.uniform(0.1, 0.5));
  Task t;
  t.family = Family::kLgssDiagnostic;
  t.params = std::move(params);
  return t;
}

}  // namespace

std::vector<Task> sample_tasks(Family family, int n, std::uint64_t seed, const EnvConfig& config) {
  if (n < 1) throw UsageError("sample_tasks requires n >= 1, got " + std::to_string(n));
  Rng rng(mix_seed(seed, 0x7a5c));
  std::vector<Task> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Task t;
    t.family = family;
    switch (family) {
      case Family::kPointNav2d: {
        const double theta = rng.uniform(0.0, std::numbers::pi);
        t.params = {theta, pointnav::kSemicircleRadius * std::cos(theta),
                    pointnav::kSemicircleRadius * std::sin(theta)};
        break;
      }
      case Family::kButtonPanel: {
        const auto idx = rng.index(buttonpanel::kNumButtons);
        const double ox = rng.uniform(-buttonpanel::kMaxOffset, buttonpanel::kMaxOffset);
        const double oy = rng.uniform(-buttonpanel::kMaxOffset, buttonpanel::kMaxOffset);
        t.params = {double(idx), ox, oy};
        break;
      }
      case Family::kVelTrack: {
        const int m = config.veltrack_targets;
        const int horizon = resolved_horizon(family, config);
        if (m < 1 || m > horizon) throw ConfigError("veltrack_targets must be in [1, horizon]");
        t.params = {double(m)};
        for (int k = 0; k < m; ++k) t.params.push_back(rng.uniform(veltrack::kMinTarget, veltrack::kMaxTarget));
        for (int k = 0; k < m; ++k) t.params.push_back(double(1 + (k * horizon) / m));
        break;
      }
      case Family::kLgssDiagnostic:
        t = make_lgss(rng, config);
        break;
    }
    t.seed = mix_seed(seed, static_cast<std::uint64_t>(i) + 1);
    t.id = i;
    out.push_back(std::move(t));
  }
  return out;
}

void validate_task(const Task& task) {
  auto fail = [&](const std::string& why) {
    throw UsageError(std::string(to_string(task.family)) + " task invalid: " + why);
  };
  const auto& p = task.params;
  switch (task.family) {
    case Family::kPointNav2d:
      if (p.size() != 3) fail("expected 3 params");
      if (p[0] < 0.0 || p[0] > std::numbers::pi) fail("goal angle outside [0, pi]");
      break;
    case Family::kButtonPanel:
      if (p.size() != 3) fail("expected 3 params");
      if (p[0] < 0 || p[0] >= buttonpanel::kNumButtons || p[0] != std::floor(p[0])) fail("button index");
      if (std::abs(p[1]) > buttonpanel::kMaxOffset || std::abs(p[2]) > buttonpanel::kMaxOffset) fail("panel offset");
      break;
    case Family::kVelTrack: {
      if (p.empty()) fail("missing target count");
      const int m = static_cast<int>(p[0]);
      if (m < 1 || p.size() != static_cast<std::size_t>(1 + 2 * m)) fail("bad target layout");
      for (int k = 0; k < m; ++k) {
        if (p[1 + k] < veltrack::kMinTarget || p[1 + k] > veltrack::kMaxTarget) fail("target velocity range");
      }
      if (p[1 + m] != 1.0) fail("first target must start at t = 1");
      for (int k = 1; k < m; ++k) {
        if (p[1 + m + k] <= p[m + k]) fail("switch times must increase");
      }
      break;
    }
    case Family::kLgssDiagnostic: {
      if (p.size() < 3) fail("missing dimensions");
      const auto n = static_cast<std::size_t>(p[0]);
      const auto m = static_cast<std::size_t>(p[1]);
      const auto q = static_cast<std::size_t>(p[2]);
      const std::size_t expect = 3 + n * n + n * m + (q + 1) * n + n + (q + 1);
      if (p.size() != expect) fail("parameter count does not match dimensions");
      for (std::size_t i = expect - n - (q + 1); i < expect; ++i) {
        if (!(p[i] > 0.0)) fail("noise variances must be positive");
      }
      break;
    }
  }
}

}  // namespace latentmeta::envs
