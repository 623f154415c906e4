#include "latentmeta/loop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/envs/pointnav.hpp"
#include "latentmeta/envs/veltrack.hpp"

namespace latentmeta::loop {

namespace {

void check_episode(const Trajectory& traj, int episode) {
  if (episode < 0 || episode >= traj.episodes) throw UsageError("episode index out of range");
}

}  // namespace

double arc_coverage(const Trajectory& traj, int episode) {
  check_episode(traj, episode);
  namespace pn = envs::pointnav;
  const auto begin = static_cast<std::int64_t>(episode) * traj.horizon;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::int64_t t = begin; t < begin + traj.horizon; ++t) {
    const double x = traj.states[t][0].item<double>();
    const double y = traj.states[t][1].item<double>();
    const double rho = std::hypot(x, y);
    if (std::abs(rho - pn::kSemicircleRadius) <= pn::kGoalRadius && y >= -pn::kGoalRadius) {
      const double ang = std::atan2(y, x);
      lo = std::min(lo, ang);
      hi = std::max(hi, ang);
    }
    if (traj.sparse[t].item<float>() > 0.0f) break;
  }
  if (hi < lo) return 0.0;
  return (hi - lo) + 2.0 * std::asin(pn::kGoalRadius / pn::kSemicircleRadius);
}

double path_length(const Trajectory& traj, int episode) {
  check_episode(traj, episode);
  const auto begin = static_cast<std::int64_t>(episode) * traj.horizon;
  auto pos = traj.states.slice(0, begin, begin + traj.horizon).narrow(1, 0, 2);
  return (pos.slice(0, 1) - pos.slice(0, 0, -1)).norm(2, 1).sum().item<double>();
}

std::vector<int> steps_to_track(const Trajectory& traj, const envs::Task& task) {
  namespace vt = envs::veltrack;
  const auto switches = vt::switch_times(task);
  const int n = static_cast<int>(std::min<std::int64_t>(traj.horizon, traj.length()));
  std::vector<int> out;
  for (std::size_t k = 0; k < switches.size(); ++k) {
    const int s = switches[k];
    const int end = k + 1 < switches.size() ? switches[k + 1] : n + 1;
    int steps = -1;
    for (int t = s; t < end && t <= n; ++t) {
      const double v = traj.states[t - 1][0].item<double>();
      if (std::abs(v - vt::target_at(task, t)) <= vt::kBand) {
        steps = t - s;
        break;
      }
    }
    out.push_back(steps);
  }
  return out;
}

bool tracked_all_switches(const std::vector<int>& steps, int max_steps) {
  for (std::size_t k = 1; k < steps.size(); ++k)
    if (steps[k] < 0 || steps[k] > max_steps) return false;
  return true;
}

EvalSummary summarize(const std::vector<TrialResult>& results) {
  EvalSummary s;
  s.trials = static_cast<int>(results.size());
  if (results.empty()) return s;
  const auto e = static_cast<std::size_t>(results.front().episodes);
  s.shaped_return.assign(e, 0.0);
  s.sparse_return.assign(e, 0.0);
  s.success_rate.assign(e, 0.0);
  for (const auto& r : results) {
    for (std::size_t k = 0; k < e; ++k) {
      s.shaped_return[k] += r.shaped_return[k];
      s.sparse_return[k] += r.sparse_return[k];
      s.success_rate[k] += r.success(static_cast<int>(k)) ? 1.0 : 0.0;
    }
  }
  for (std::size_t k = 0; k < e; ++k) {
    s.shaped_return[k] /= s.trials;
    s.sparse_return[k] /= s.trials;
    s.success_rate[k] /= s.trials;
  }
  return s;
}

}  // namespace latentmeta::loop
