#pragma once

#include <Eigen/Core>

#include "liepose/errors.hpp"

namespace liepose {

/// Pinhole depth camera. Units are millimetres; +z points into the scene and
/// larger depth means farther. The default matches a 640x480 sensor with a
/// 600 px focal length.
struct CameraModel {
  double focal = 600.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;
  double near_mm = 50.0;
  double far_mm = 5000.0;

  /// Perspective projection to continuous pixel coordinates. Requires z > 0.
  Eigen::Vector2d project(const Eigen::Vector3d& p) const {
    if (!(p.z() > 0.0)) {
      throw InvalidArgument("project: point is not in front of the camera");
    }
    return {focal * p.x() / p.z() + cx, focal * p.y() / p.z() + cy};
  }

  /// Inverse projection of a pixel at a given depth.
  Eigen::Vector3d backproject(double u, double v, double depth) const {
    return {(u - cx) * depth / focal, (v - cy) * depth / focal, depth};
  }
};

}  // namespace liepose
