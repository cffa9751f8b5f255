#pragma once

#include "liepose/camera.hpp"
#include "liepose/depth_image.hpp"
#include "liepose/lie.hpp"
#include "liepose/rng.hpp"

namespace liepose {

/// Depth lookup at the nearest pixel to the projection of a camera-frame
/// point. Points behind the camera and off-image projections read the
/// background sentinel, so invalid probes are absorbed rather than fatal.
double probe_depth(const DepthImage& image, const CameraModel& camera, const Vec3& point);

/// Pose-indexed depth difference feature. The probe offsets u and v, sampled
/// once in home-pose coordinates, are carried by the current pose estimate:
/// the rotation part of the joint's cumulative transform orients them around
/// the joint position x, and the two probe points project into the image:
///   phi = d(Proj(x + R u)) - d(Proj(x + R v)).
/// Offsets are direction vectors, so only the rotation acts on them; the
/// translation is already encoded in x itself.
double pose_indexed_feature(const DepthImage& image, const CameraModel& camera,
                            const Mat3& R, const Vec3& x,
                            const Vec3& u, const Vec3& v);

/// Crop-backed variants: numerically identical to the full-image forms for
/// any probe (the crop covers all foreground).
double probe_depth(const DepthCrop& image, const CameraModel& camera, const Vec3& point);
double pose_indexed_feature(const DepthCrop& image, const CameraModel& camera,
                            const Mat3& R, const Vec3& x,
                            const Vec3& u, const Vec3& v);

/// Draws an offset uniformly from the cube [-half_width, half_width]^3 in
/// home-pose coordinates.
Vec3 sample_cube_offset(double half_width, RngStream& rng);

}  // namespace liepose
