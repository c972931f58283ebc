#pragma once

#include <cstddef>
#include <vector>

namespace rkm {

/// Row-major grayscale image.
struct Image {
  int rows = 0;
  int cols = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int r, int c, double fill = 0.0)
      : rows(r), cols(c), pixels(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * cols + c]; }
  double mass() const;

  /// Bilinear sample at (row, col); points outside the grid read as 0.
  double sample(double row, double col) const;

  friend bool operator==(const Image&, const Image&) = default;
};

/// Intensity-weighted moments, pixel coordinates (col = x, row = y).
struct Moments {
  double mass = 0.0;
  double mean_x = 0.0, mean_y = 0.0;
  double var_x = 0.0, var_y = 0.0, cov_xy = 0.0;

  /// cov(x, y) / var(y); 0 when var(y) vanishes.
  double skew() const { return var_y > 0.0 ? cov_xy / var_y : 0.0; }
};

Moments moments(const Image& img);

/// Counter-clockwise rotation about the geometric center, bilinear, fill 0.
Image rotate(const Image& img, double theta);

/// Shear x' = x - s (y - mean_y) with s = cov(x, y) / var(y), then translate
/// the center of mass to the geometric center. Zero-mass images pass through.
Image deskew(const Image& img);

/// Per-pixel maximum; shapes must agree.
Image overlay_max(const Image& digit, const Image& background);

}  // namespace rkm
