#include "latentmeta/harness/metrics_log.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "latentmeta/core/errors.hpp"

namespace latentmeta::harness {

namespace fs = std::filesystem;

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols = {
      "stage",          "iteration",       "env_steps",        "model_updates",    "agent_updates",
      "model_loss",     "obs_log_lik",     "reward_log_lik",   "kl",               "critic_loss",
      "actor_loss",     "alpha",           "policy_entropy",   "eval_shaped_ep1",  "eval_shaped_ep2",
      "eval_sparse_ep1", "eval_sparse_ep2", "eval_success_ep1", "eval_success_ep2"};
  return cols;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string header() {
  std::string h;
  for (const auto& c : metrics_columns()) h += (h.empty() ? "" : ",") + c;
  return h;
}

}  // namespace

std::string format_metrics_row(const loop::MetricsRow& r) {
  std::vector<std::string> cells = {std::to_string(r.stage),
                                    std::to_string(r.iteration),
                                    std::to_string(r.env_steps),
                                    std::to_string(r.model_updates),
                                    std::to_string(r.agent_updates),
                                    num(r.train.model_loss),
                                    num(r.train.obs_log_lik),
                                    num(r.train.reward_log_lik),
                                    num(r.train.kl),
                                    num(r.train.critic_loss),
                                    num(r.train.actor_loss),
                                    num(r.train.alpha),
                                    num(r.train.entropy)};
  auto ep = [](const std::vector<double>& v, std::size_t k) { return k < v.size() ? num(v[k]) : std::string(); };
  for (int field = 0; field < 3; ++field) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!r.eval) {
        cells.emplace_back();
        continue;
      }
      const auto& v = field == 0 ? r.eval->shaped_return : field == 1 ? r.eval->sparse_return : r.eval->success_rate;
      cells.push_back(ep(v, k));
    }
  }
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + cells[i];
  return line;
}

MetricsWriter::MetricsWriter(fs::path path) : path_(std::move(path)) {
  if (!fs::exists(path_) || fs::file_size(path_) == 0) {
    std::ofstream out(path_);
    if (!out) throw ConfigError("cannot create metrics file " + path_.string());
    out << kMetricsSchema << '\n' << header() << '\n';
  }
}

void MetricsWriter::append(const loop::MetricsRow& row) {
  std::ofstream out(path_, std::ios::app);
  out << format_metrics_row(row) << '\n';
  out.flush();
}

void truncate_metrics(const fs::path& path, int stage, int iteration) {
  if (!fs::exists(path)) return;
  std::ifstream in(path);
  std::vector<std::string> keep;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    if (n++ < 2) {
      keep.push_back(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() < 2) continue;
    const int s = std::stoi(cells[0]);
    const int it = std::stoi(cells[1]);
    if (s < stage || (s == stage && it <= iteration)) keep.push_back(line);
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : keep) out << l << '\n';
}

std::vector<double> MetricsTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] != name) continue;
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r[i]);
    return out;
  }
  throw UsageError("metrics have no column '" + name + "'");
}

MetricsTable read_metrics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsSchema) {
    throw ConfigError(path.string() + " does not start with " + std::string(kMetricsSchema));
  }
  MetricsTable t;
  if (!std::getline(in, line)) throw ConfigError(path.string() + " has no header row");
  t.columns = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.columns.size()) throw ConfigError("malformed metrics row in " + path.string());
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(c.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace latentmeta::harness
