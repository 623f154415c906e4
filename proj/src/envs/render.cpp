#include "latentmeta/envs/render.hpp"

#include <algorithm>
#include <cmath>

namespace latentmeta::envs {

namespace {
constexpr int kSub = 4;
}

Canvas::Canvas(int size, double extent) : size_(size), extent_(extent), pix_(size * size, 0.0f) {}

double Canvas::px_to_world_x(double col) const { return -extent_ + 2.0 * extent_ * col / size_; }
double Canvas::px_to_world_y(double row) const { return extent_ - 2.0 * extent_ * row / size_; }

void Canvas::blend(int row, int col, float value) {
  if (row < 0 || col < 0 || row >= size_ || col >= size_) return;
  auto& p = pix_[row * size_ + col];
  p = std::max(p, value);
}

void Canvas::disk(double cx, double cy, double radius, float intensity) {
  const double scale = size_ / (2.0 * extent_);
  const int c0 = static_cast<int>(std::floor((cx - radius + extent_) * scale)) - 1;
  const int c1 = static_cast<int>(std::ceil((cx + radius + extent_) * scale)) + 1;
  const int r0 = static_cast<int>(std::floor((extent_ - cy - radius) * scale)) - 1;
  const int r1 = static_cast<int>(std::ceil((extent_ - cy + radius) * scale)) + 1;
  const double r2 = radius * radius;
  for (int row = r0; row <= r1; ++row) {
    for (int col = c0; col <= c1; ++col) {
      int inside = 0;
      for (int i = 0; i < kSub; ++i) {
        for (int j = 0; j < kSub; ++j) {
          const double wx = px_to_world_x(col + (j + 0.5) / kSub);
          const double wy = px_to_world_y(row + (i + 0.5) / kSub);
          if ((wx - cx) * (wx - cx) + (wy - cy) * (wy - cy) <= r2) ++inside;
        }
      }
      if (inside > 0) blend(row, col, intensity * float(inside) / float(kSub * kSub));
    }
  }
}

void Canvas::arc(double cx, double cy, double radius, double a0, double a1, float intensity) {
  const double scale = size_ / (2.0 * extent_);
  const int steps = std::max(8, static_cast<int>(4.0 * radius * (a1 - a0) * scale));
  for (int k = 0; k <= steps; ++k) {
    const double a = a0 + (a1 - a0) * k / steps;
    const double wx = cx + radius * std::cos(a);
    const double wy = cy + radius * std::sin(a);
    const int col = static_cast<int>(std::floor((wx + extent_) * scale));
    const int row = static_cast<int>(std::floor((extent_ - wy) * scale));
    blend(row, col, intensity);
  }
}

void Canvas::rect(double x0, double y0, double x1, double y1, float intensity) {
  for (int row = 0; row < size_; ++row) {
    for (int col = 0; col < size_; ++col) {
      const double wx = px_to_world_x(col + 0.5);
      const double wy = px_to_world_y(row + 0.5);
      if (wx >= x0 && wx <= x1 && wy >= y0 && wy <= y1) blend(row, col, intensity);
    }
  }
}

Observation Canvas::finish() const {
  Observation obs;
  obs.shape = {1, size_, size_};
  obs.values.resize(pix_.size());
  std::transform(pix_.begin(), pix_.end(), obs.values.begin(), [](float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return std::round(c * 255.0f) / 255.0f;
  });
  return obs;
}

}  // namespace latentmeta::envs
