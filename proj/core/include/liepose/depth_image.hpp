#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace liepose {

/// Background sentinel depth, millimetres.
inline constexpr double kBackgroundDepth = 1e6;

/// Dense depth raster in millimetres. Background pixels hold the sentinel.
class DepthImage {
 public:
  DepthImage() = default;
  DepthImage(int width, int height, double fill = kBackgroundDepth)
      : width_(width), height_(height),
        data_(static_cast<size_t>(width) * static_cast<size_t>(height), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }

  double& at(int x, int y) { return data_[static_cast<size_t>(y) * static_cast<size_t>(width_) + static_cast<size_t>(x)]; }
  double at(int x, int y) const { return data_[static_cast<size_t>(y) * static_cast<size_t>(width_) + static_cast<size_t>(x)]; }

  bool in_bounds(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }

  /// Nearest-pixel lookup; out-of-bounds reads the background sentinel.
  double sample(double u, double v) const {
    const int x = static_cast<int>(std::llround(u));
    const int y = static_cast<int>(std::llround(v));
    return in_bounds(x, y) ? at(x, y) : kBackgroundDepth;
  }

  static bool is_foreground(double depth) { return depth < 0.5 * kBackgroundDepth; }

  int foreground_count() const {
    int n = 0;
    for (double d : data_) n += is_foreground(d) ? 1 : 0;
    return n;
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// 16-bit binary PGM (P5, maxval 65535) with big-endian samples per the
/// format. Depth rounds to integer millimetres; the background sentinel and
/// anything >= 65535 mm clamp to 65535, which reads back as background.
void write_pgm16(const DepthImage& image, const std::string& path);
DepthImage read_pgm16(const std::string& path);

using PointCloud = std::vector<Eigen::Vector3d>;

/// Tight foreground crop of a full-frame raster, addressed in full-frame
/// pixel coordinates. Every pixel outside the stored window is background in
/// the original by construction (the window covers all foreground), so
/// sampling through a crop is exactly equivalent to sampling the full image
/// while holding ~1000x less memory for typical objects.
class DepthCrop {
 public:
  DepthCrop() = default;

  explicit DepthCrop(const DepthImage& full) {
    int lo_x = full.width(), hi_x = -1, lo_y = full.height(), hi_y = -1;
    for (int y = 0; y < full.height(); ++y) {
      for (int x = 0; x < full.width(); ++x) {
        if (DepthImage::is_foreground(full.at(x, y))) {
          lo_x = std::min(lo_x, x);
          hi_x = std::max(hi_x, x);
          lo_y = std::min(lo_y, y);
          hi_y = std::max(hi_y, y);
        }
      }
    }
    if (hi_x < lo_x) return;  // empty crop: everything samples as background
    x0_ = lo_x;
    y0_ = lo_y;
    window_ = DepthImage(hi_x - lo_x + 1, hi_y - lo_y + 1);
    for (int y = lo_y; y <= hi_y; ++y) {
      for (int x = lo_x; x <= hi_x; ++x) {
        window_.at(x - lo_x, y - lo_y) = full.at(x, y);
      }
    }
  }

  /// Nearest-pixel lookup in full-frame coordinates.
  double sample(double u, double v) const {
    const int x = static_cast<int>(std::llround(u)) - x0_;
    const int y = static_cast<int>(std::llround(v)) - y0_;
    return window_.in_bounds(x, y) ? window_.at(x, y) : kBackgroundDepth;
  }

  bool empty() const { return window_.width() == 0; }

 private:
  int x0_ = 0;
  int y0_ = 0;
  DepthImage window_;
};

}  // namespace liepose
