#pragma once

#include <vector>

#include "liepose/camera.hpp"
#include "liepose/depth_image.hpp"
#include "liepose/rng.hpp"
#include "liepose/skeleton.hpp"

namespace liepose {

/// Rasterizes the posed body as a union of capsules (one per bone, sphere at
/// the base joint) into a z-buffer depth map. Throws OffScreen when no pixel
/// lands inside the frame.
DepthImage render_depth(const SkeletalModel& model, const Pose& pose,
                        const CameraModel& camera);

/// Adds i.i.d. Gaussian noise (mm std-dev) to every foreground pixel.
void add_depth_noise(DepthImage& image, double sigma_mm, RngStream& rng);

struct PreprocessResult {
  PointCloud points;        // camera-frame points, row-major pixel scan order
  Eigen::Vector3d centroid; // mean of the foreground points
};

/// Back-projects all foreground pixels. Throws EmptyForeground when the image
/// has no foreground at all.
PreprocessResult preprocess(const DepthImage& image, const CameraModel& camera);

struct InitialPoseConfig {
  int count = 40;              // number of hypotheses to draw
  double scale_low = 0.9;
  double scale_high = 1.1;
};

/// Draws pose hypotheses anchored at the observed centroid: in-plane rotation
/// angle uniform on (-pi, pi), uniform scale, every non-base joint at rest.
/// The base twist is built directly from the rotation/translation pair so no
/// logarithm (and hence no branch-cut risk) is involved.
std::vector<Pose> generate_initial_poses(const SkeletalModel& model,
                                         const PreprocessResult& pre,
                                         const InitialPoseConfig& config,
                                         RngStream& rng);

}  // namespace liepose
