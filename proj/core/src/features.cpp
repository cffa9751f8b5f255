#include "liepose/features.hpp"

#include <cmath>

namespace liepose {

double probe_depth(const DepthImage& image, const CameraModel& camera, const Vec3& point) {
  if (point.z() <= 0.0) return kBackgroundDepth;
  const double px = camera.focal * point.x() / point.z() + camera.cx;
  const double py = camera.focal * point.y() / point.z() + camera.cy;
  return image.sample(px, py);
}

double pose_indexed_feature(const DepthImage& image, const CameraModel& camera,
                            const Mat3& R, const Vec3& x,
                            const Vec3& u, const Vec3& v) {
  const double du = probe_depth(image, camera, x + R * u);
  const double dv = probe_depth(image, camera, x + R * v);
  return du - dv;
}

double probe_depth(const DepthCrop& image, const CameraModel& camera, const Vec3& point) {
  if (point.z() <= 0.0) return kBackgroundDepth;
  const double px = camera.focal * point.x() / point.z() + camera.cx;
  const double py = camera.focal * point.y() / point.z() + camera.cy;
  return image.sample(px, py);
}

double pose_indexed_feature(const DepthCrop& image, const CameraModel& camera,
                            const Mat3& R, const Vec3& x,
                            const Vec3& u, const Vec3& v) {
  const double du = probe_depth(image, camera, x + R * u);
  const double dv = probe_depth(image, camera, x + R * v);
  return du - dv;
}

Vec3 sample_cube_offset(double half_width, RngStream& rng) {
  // Fixed component order keeps the draw sequence reproducible.
  const double a = rng.uniform(-half_width, half_width);
  const double b = rng.uniform(-half_width, half_width);
  const double c = rng.uniform(-half_width, half_width);
  return Vec3(a, b, c);
}

}  // namespace liepose
