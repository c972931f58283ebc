#include "rkm/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rkm/error.hpp"

namespace rkm {

double Image::mass() const { return std::accumulate(pixels.begin(), pixels.end(), 0.0); }

double Image::sample(double row, double col) const {
  const double fr = std::floor(row);
  const double fc = std::floor(col);
  const int r0 = static_cast<int>(fr);
  const int c0 = static_cast<int>(fc);
  const double wr = row - fr;
  const double wc = col - fc;
  auto px = [&](int r, int c) {
    return (r < 0 || r >= rows || c < 0 || c >= cols) ? 0.0 : at(r, c);
  };
  return (1.0 - wr) * ((1.0 - wc) * px(r0, c0) + wc * px(r0, c0 + 1)) +
         wr * ((1.0 - wc) * px(r0 + 1, c0) + wc * px(r0 + 1, c0 + 1));
}

Moments moments(const Image& img) {
  Moments m;
  for (int r = 0; r < img.rows; ++r) {
    for (int c = 0; c < img.cols; ++c) {
      const double v = img.at(r, c);
      m.mass += v;
      m.mean_x += v * c;
      m.mean_y += v * r;
    }
  }
  if (m.mass <= 0.0) return m;
  m.mean_x /= m.mass;
  m.mean_y /= m.mass;
  for (int r = 0; r < img.rows; ++r) {
    for (int c = 0; c < img.cols; ++c) {
      const double v = img.at(r, c);
      const double dx = c - m.mean_x;
      const double dy = r - m.mean_y;
      m.var_x += v * dx * dx;
      m.var_y += v * dy * dy;
      m.cov_xy += v * dx * dy;
    }
  }
  m.var_x /= m.mass;
  m.var_y /= m.mass;
  m.cov_xy /= m.mass;
  return m;
}

Image rotate(const Image& img, double theta) {
  const double cy = (img.rows - 1) / 2.0;
  const double cx = (img.cols - 1) / 2.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Image out(img.rows, img.cols);
  // Inverse map: source = R(-theta) (p - center) + center, with y pointing down.
  for (int r = 0; r < img.rows; ++r) {
    for (int col = 0; col < img.cols; ++col) {
      const double dx = col - cx;
      const double dy = r - cy;
      const double sx = c * dx - s * dy + cx;
      const double sy = s * dx + c * dy + cy;
      out.at(r, col) = img.sample(sy, sx);
    }
  }
  return out;
}

Image deskew(const Image& img) {
  const Moments m = moments(img);
  if (m.mass <= 0.0) return img;
  const double skew = m.skew();
  const double cy = (img.rows - 1) / 2.0;
  const double cx = (img.cols - 1) / 2.0;
  Image out(img.rows, img.cols);
  for (int r = 0; r < img.rows; ++r) {
    const double sy = r - cy + m.mean_y;
    const double shift = -cx + m.mean_x + skew * (r - cy);
    for (int c = 0; c < img.cols; ++c) out.at(r, c) = img.sample(sy, c + shift);
  }
  return out;
}

Image overlay_max(const Image& digit, const Image& background) {
  if (digit.rows != background.rows || digit.cols != background.cols) {
    throw StructuralError("background shape does not match the image");
  }
  Image out = digit;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = std::max(out.pixels[i], background.pixels[i]);
  }
  return out;
}

}  // namespace rkm
