#pragma once

#include <vector>

#include "latentmeta/envs/environment.hpp"

namespace latentmeta::envs {

/// Single-channel raster over the square world [-extent, extent]^2.
/// Pixel (0, 0) is the top-left corner, i.e. world (-extent, +extent).
class Canvas {
 public:
  Canvas(int size, double extent);

  /// Anti-aliased filled disk; coverage is estimated on a 4x4 subgrid so
  /// sub-pixel motion changes the image.
  void disk(double cx, double cy, double radius, float intensity);
  /// Arc of the circle centered at (cx, cy), angles in [a0, a1].
  void arc(double cx, double cy, double radius, double a0, double a1, float intensity);
  void rect(double x0, double y0, double x1, double y1, float intensity);

  /// Values quantized to multiples of 1/255 and clamped to [0, 1].
  Observation finish() const;

  int size() const { return size_; }
  float at(int row, int col) const { return pix_[row * size_ + col]; }

 private:
  void blend(int row, int col, float value);
  double px_to_world_x(double col) const;
  double px_to_world_y(double row) const;

  int size_;
  double extent_;
  std::vector<float> pix_;
};

}  // namespace latentmeta::envs
