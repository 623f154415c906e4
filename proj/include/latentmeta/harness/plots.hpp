#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace latentmeta::harness {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;  // NaN points are skipped
  bool dashed = false;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

/// Self-contained SVG; identical input gives identical bytes.
std::string render_svg(const Chart& chart, int width = 640, int height = 400);

/// Learning curves from one or more metrics files: eval return and success
/// rate against env steps, with the success threshold dashed. Returns the
/// written files; warns on stderr and writes nothing when no file has
/// evaluation rows.
std::vector<std::filesystem::path> emit_plots(const std::vector<std::filesystem::path>& metrics_files,
                                              const std::filesystem::path& out_dir,
                                              double success_threshold = 0.8);

/// Reward-prediction mean and variance against t for each trial in an
/// evaluation results file written by the CLI.
std::vector<std::filesystem::path> emit_trial_plots(const std::filesystem::path& results_json,
                                                    const std::filesystem::path& out_dir, int max_trials = 4);

}  // namespace latentmeta::harness
