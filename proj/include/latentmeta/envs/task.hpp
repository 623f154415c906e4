#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace latentmeta::envs {

enum class Family { kPointNav2d, kButtonPanel, kVelTrack, kLgssDiagnostic };

std::string_view to_string(Family family);
/// Throws ConfigError on an unknown name.
Family parse_family(std::string_view name);

/// Sparse families only reveal the task through a binary completion reward.
bool is_sparse_family(Family family);

/// Knobs shared by every family. Zero means "family default".
struct EnvConfig {
  int image_size = 32;
  int horizon = 0;
  int veltrack_targets = 1;
  int lgss_state_dim = 3;
  int lgss_action_dim = 1;
  bool lgss_memoryless = false;  // A = 0

  bool operator==(const EnvConfig&) const = default;
};

int default_horizon(Family family);
int resolved_horizon(Family family, const EnvConfig& config);

/// One draw from the task distribution.
///
/// Parameter layouts:
///   pointnav2d:     [theta, goal_x, goal_y]
///   buttonpanel:    [button_index, offset_x, offset_y]
///   veltrack:       [m, v_1..v_m, start_1..start_m]   (start_1 = 1)
///   lgss-diagnostic:[n, m, p, A(n*n), B(n*m), C((p+1)*n), q(n), r(p+1)]
///                   row-major; the last row of C and last entry of r
///                   belong to the reward channel.
struct Task {
  Family family = Family::kPointNav2d;
  std::vector<double> params;
  std::uint64_t seed = 0;
  int id = -1;

  bool operator==(const Task&) const = default;
};

/// Deterministic in `seed`. Throws UsageError when n < 1.
std::vector<Task> sample_tasks(Family family, int n, std::uint64_t seed,
                               const EnvConfig& config = {});

/// Throws UsageError if the params are outside the family's ranges.
void validate_task(const Task& task);

}  // namespace latentmeta::envs
