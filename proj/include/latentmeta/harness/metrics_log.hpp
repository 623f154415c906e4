#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "latentmeta/loop/meta_loop.hpp"

namespace latentmeta::harness {

inline constexpr const char* kMetricsSchema = "#schema=latentmeta-metrics/1";

const std::vector<std::string>& metrics_columns();
/// One CSV line (no newline); values printed with round-trip precision,
/// empty cells for absent evaluation columns.
std::string format_metrics_row(const loop::MetricsRow& row);

/// Append-only writer. Creates the file with the schema and header lines.
class MetricsWriter {
 public:
  explicit MetricsWriter(std::filesystem::path path);
  void append(const loop::MetricsRow& row);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Drops rows past (stage, iteration), e.g. before resuming a checkpoint.
void truncate_metrics(const std::filesystem::path& path, int stage, int iteration);

struct MetricsTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // NaN for empty cells

  /// Column values; throws UsageError for an unknown name.
  std::vector<double> column(const std::string& name) const;
};

/// Throws ConfigError if the schema line or header is missing or foreign.
MetricsTable read_metrics(const std::filesystem::path& path);

}  // namespace latentmeta::harness
