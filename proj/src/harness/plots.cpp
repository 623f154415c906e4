#include "latentmeta/harness/plots.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/harness/metrics_log.hpp"

namespace latentmeta::harness {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string render_svg(const Chart& chart, int width, int height) {
  const double left = 70, right = 150, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : chart.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax - xmin < 1e-12) xmin -= 0.5, xmax += 0.5;
  if (ymax - ymin < 1e-12) ymin -= 0.5, ymax += 0.5;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << escape(chart.title) << "</text>\n";
  o << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    o << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << fmt(top + ph + 16) << "\" text-anchor=\"middle\">" << tick(xv)
      << "</text>\n";
    o << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(py(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
      << "</text>\n";
    o << "<line x1=\"" << fmt(left) << "\" x2=\"" << fmt(left + pw) << "\" y1=\"" << fmt(py(yv)) << "\" y2=\""
      << fmt(py(yv)) << "\" stroke=\"#dddddd\"/>\n";
  }
  o << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(height - 10.0) << "\" text-anchor=\"middle\">"
    << escape(chart.x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << fmt(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(chart.y_label) << "</text>\n";
  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& s = chart.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    std::size_t count = 0;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      pts += (pts.empty() ? "" : " ") + fmt(px(s.x[i])) + "," + fmt(py(s.y[i]));
      ++count;
    }
    if (count == 1) {
      const auto comma = pts.find(',');
      o << "<circle cx=\"" << pts.substr(0, comma) << "\" cy=\"" << pts.substr(comma + 1) << "\" r=\"3\" fill=\""
        << color << "\"/>\n";
    } else if (count > 1) {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
        << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"" << pts << "\"/>\n";
    }
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    o << "<line x1=\"" << fmt(left + pw + 10) << "\" x2=\"" << fmt(left + pw + 30) << "\" y1=\"" << fmt(ly)
      << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"1.5\""
      << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    o << "<text x=\"" << fmt(left + pw + 34) << "\" y=\"" << fmt(ly + 4) << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<fs::path> emit_plots(const std::vector<fs::path>& files, const fs::path& out_dir, double threshold) {
  Chart ret{"Evaluation return", "environment steps", "mean return", {}};
  Chart succ{"Success rate", "environment steps", "success rate", {}};
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  for (const auto& f : files) {
    const auto t = read_metrics(f);
    const auto steps = t.column("env_steps");
    const auto label = f.parent_path().filename().string();
    std::vector<std::size_t> keep;
    const auto s1 = t.column("eval_success_ep1");
    for (std::size_t i = 0; i < s1.size(); ++i)
      if (std::isfinite(s1[i])) keep.push_back(i);
    if (keep.empty()) continue;
    auto pick = [&](const std::string& col) {
      const auto v = t.column(col);
      Series s;
      s.name = (files.size() > 1 ? label + " " : "") + col.substr(5);
      for (auto i : keep) {
        s.x.push_back(steps[i]);
        s.y.push_back(v[i]);
      }
      return s;
    };
    for (auto i : keep) {
      xmin = std::min(xmin, steps[i]);
      xmax = std::max(xmax, steps[i]);
    }
    for (const char* c : {"eval_sparse_ep1", "eval_sparse_ep2", "eval_shaped_ep1", "eval_shaped_ep2"}) {
      auto s = pick(c);
      if (std::any_of(s.y.begin(), s.y.end(), [](double v) { return std::isfinite(v); })) ret.series.push_back(s);
    }
    for (const char* c : {"eval_success_ep1", "eval_success_ep2"}) {
      auto s = pick(c);
      if (std::any_of(s.y.begin(), s.y.end(), [](double v) { return std::isfinite(v); })) succ.series.push_back(s);
    }
  }
  if (ret.series.empty()) {
    std::cerr << "warning: no evaluation rows in metrics; no plots written\n";
    return {};
  }
  succ.series.push_back({"threshold", {xmin, xmax}, {threshold, threshold}, true});
  fs::create_directories(out_dir);
  const auto a = out_dir / "eval_return.svg";
  const auto b = out_dir / "success_rate.svg";
  write_file(a, render_svg(ret));
  write_file(b, render_svg(succ));
  return {a, b};
}

std::vector<fs::path> emit_trial_plots(const fs::path& results_json, const fs::path& out_dir, int max_trials) {
  std::ifstream in(results_json);
  if (!in) throw ConfigError("cannot read " + results_json.string());
  const auto j = nlohmann::json::parse(in);
  const auto& trials = j.at("trials");
  std::vector<fs::path> out;
  fs::create_directories(out_dir);
  for (std::size_t k = 0; k < trials.size() && static_cast<int>(k) < max_trials; ++k) {
    const auto& tr = trials[k];
    const auto mean = tr.at("reward_pred_mean").get<std::vector<double>>();
    const auto var = tr.at("reward_pred_var").get<std::vector<double>>();
    if (mean.empty()) continue;
    std::vector<double> t(mean.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i + 1);
    Chart c{"Reward prediction, trial " + std::to_string(k), "t", "reward", {}};
    c.series.push_back({"predicted mean", t, mean, false});
    c.series.push_back({"predicted variance", t, var, false});
    if (tr.contains("reward")) c.series.push_back({"observed", t, tr.at("reward").get<std::vector<double>>(), true});
    const auto path = out_dir / ("trial_" + std::to_string(k) + "_reward.svg");
    write_file(path, render_svg(c));
    out.push_back(path);
  }
  return out;
}

}  // namespace latentmeta::harness
