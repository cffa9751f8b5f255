#include "liepose/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "liepose/errors.hpp"
#include "liepose/lie.hpp"

namespace liepose {
namespace {

struct Capsule {
  Eigen::Vector3d a;
  Eigen::Vector3d b;
  double radius = 0.0;
};

// Smallest positive ray parameter t with |t*d - c| = r, or +inf.
double ray_sphere(const Eigen::Vector3d& d, const Eigen::Vector3d& c, double r) {
  const double A = d.squaredNorm();
  const double B = -2.0 * d.dot(c);
  const double C = c.squaredNorm() - r * r;
  const double disc = B * B - 4.0 * A * C;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double sq = std::sqrt(disc);
  const double t0 = (-B - sq) / (2.0 * A);
  const double t1 = (-B + sq) / (2.0 * A);
  if (t0 > 0.0) return t0;
  if (t1 > 0.0) return t1;
  return std::numeric_limits<double>::infinity();
}

// Smallest positive t where the ray t*d (from the origin) first touches the
// capsule: finite cylinder body plus spherical caps.
double ray_capsule(const Eigen::Vector3d& d, const Capsule& cap) {
  double best = std::min(ray_sphere(d, cap.a, cap.radius), ray_sphere(d, cap.b, cap.radius));
  const Eigen::Vector3d axis = cap.b - cap.a;
  const double len = axis.norm();
  if (len > 1e-12) {
    const Eigen::Vector3d u = axis / len;
    const Eigen::Vector3d dperp = d - d.dot(u) * u;
    const Eigen::Vector3d aperp = cap.a - cap.a.dot(u) * u;
    const double A = dperp.squaredNorm();
    if (A > 1e-18) {
      const double B = -2.0 * dperp.dot(aperp);
      const double C = aperp.squaredNorm() - cap.radius * cap.radius;
      const double disc = B * B - 4.0 * A * C;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        for (const double t : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)}) {
          if (t <= 0.0 || t >= best) continue;
          const double s = (t * d - cap.a).dot(u);
          if (s >= 0.0 && s <= len) best = t;
        }
      }
    }
  }
  return best;
}

}  // namespace

DepthImage render_depth(const SkeletalModel& model, const Pose& pose,
                        const CameraModel& camera) {
  const FkResult fk = forward_kinematics(model, pose);

  std::vector<Capsule> capsules;
  capsules.reserve(static_cast<size_t>(model.joint_count()));
  // The base joint contributes a sphere (a degenerate capsule).
  capsules.push_back({fk.positions[0], fk.positions[0],
                      pose.scale * model.joint(0).radius});
  for (int j = 1; j < model.joint_count(); ++j) {
    const int p = model.joint(j).parent;
    const double r = 0.5 * pose.scale * (model.joint(j).radius + model.joint(p).radius);
    capsules.push_back({fk.positions[p], fk.positions[j], r});
  }

  DepthImage image(camera.width, camera.height);
  bool any = false;
  for (const Capsule& cap : capsules) {
    // Conservative projected bounding box from both endpoints.
    if (cap.a.z() <= cap.radius + 1.0 || cap.b.z() <= cap.radius + 1.0) continue;
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = x_hi;
    for (const Eigen::Vector3d& e : {cap.a, cap.b}) {
      const Eigen::Vector2d p = camera.project(e);
      const double px = p.x(), py = p.y();
      const double pr = camera.focal * cap.radius / (e.z() - cap.radius) + 2.0;
      x_lo = std::min(x_lo, px - pr);
      x_hi = std::max(x_hi, px + pr);
      y_lo = std::min(y_lo, py - pr);
      y_hi = std::max(y_hi, py + pr);
    }
    const int ix_lo = std::max(0, static_cast<int>(std::floor(x_lo)));
    const int ix_hi = std::min(camera.width - 1, static_cast<int>(std::ceil(x_hi)));
    const int iy_lo = std::max(0, static_cast<int>(std::floor(y_lo)));
    const int iy_hi = std::min(camera.height - 1, static_cast<int>(std::ceil(y_hi)));
    for (int y = iy_lo; y <= iy_hi; ++y) {
      for (int x = ix_lo; x <= ix_hi; ++x) {
        const Eigen::Vector3d dir((x - camera.cx) / camera.focal,
                                  (y - camera.cy) / camera.focal, 1.0);
        const double t = ray_capsule(dir, cap);  // dir.z == 1 so t is z-depth
        if (t < camera.near_mm || t > camera.far_mm) continue;
        if (t < image.at(x, y)) {
          image.at(x, y) = t;
          any = true;
        }
      }
    }
  }
  if (!any) throw OffScreen("rendered body projects entirely outside the frame");
  return image;
}

void add_depth_noise(DepthImage& image, double sigma_mm, RngStream& rng) {
  if (sigma_mm <= 0.0) return;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double& d = image.at(x, y);
      if (DepthImage::is_foreground(d)) {
        d = std::max(1.0, d + rng.normal(0.0, sigma_mm));
      }
    }
  }
}

PreprocessResult preprocess(const DepthImage& image, const CameraModel& camera) {
  PreprocessResult result;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const double d = image.at(x, y);
      if (DepthImage::is_foreground(d)) {
        result.points.push_back(camera.backproject(x, y, d));
      }
    }
  }
  if (result.points.empty()) {
    throw EmptyForeground("depth image has no foreground pixels");
  }
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const Eigen::Vector3d& p : result.points) sum += p;
  result.centroid = sum / static_cast<double>(result.points.size());
  return result;
}

std::vector<Pose> generate_initial_poses(const SkeletalModel& model,
                                         const PreprocessResult& pre,
                                         const InitialPoseConfig& config,
                                         RngStream& rng) {
  std::vector<Pose> poses;
  poses.reserve(static_cast<size_t>(config.count));
  for (int i = 0; i < config.count; ++i) {
    Pose pose = Pose::rest(model);
    pose.scale = rng.uniform(config.scale_low, config.scale_high);
    const double theta = rng.uniform(-kPi, kPi);
    const Vec3 omega(0.0, 0.0, theta);
    // exp maps (omega, nu) to (R, A(omega)*nu); invert A so the base joint
    // lands exactly on the observed centroid without taking any logarithm.
    const Vec3 nu = se3_translation_factor_inverse(omega) * pre.centroid;
    pose.twists[0] = TwistVector{omega, nu};
    poses.push_back(std::move(pose));
  }
  return poses;
}

}  // namespace liepose
