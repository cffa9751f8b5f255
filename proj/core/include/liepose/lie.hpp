#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "liepose/rng.hpp"

namespace liepose {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Threshold below which rotation magnitudes switch to Taylor expansions.
inline constexpr double kSmallAngle = 1e-6;

inline constexpr double kPi = 3.14159265358979323846;

/// Element of se(3). Coordinate order is (omega, nu): indices 0..2 are the
/// rotational generators, 3..5 the translational ones.
struct TwistVector {
  Vec3 omega = Vec3::Zero();
  Vec3 nu = Vec3::Zero();

  TwistVector() = default;
  TwistVector(const Vec3& w, const Vec3& v) : omega(w), nu(v) {}

  static TwistVector Zero() { return {}; }

  static TwistVector from_vector(const Vec6& x) {
    return {x.head<3>(), x.tail<3>()};
  }

  Vec6 to_vector() const {
    Vec6 x;
    x.head<3>() = omega;
    x.tail<3>() = nu;
    return x;
  }

  TwistVector operator*(double s) const { return {omega * s, nu * s}; }
  TwistVector operator+(const TwistVector& o) const { return {omega + o.omega, nu + o.nu}; }
};

/// Element of SE(3), stored as rotation + translation. The 4x4 homogeneous
/// view is available through matrix(); storage layout is an internal detail.
struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  RigidTransform() = default;
  RigidTransform(const Mat3& rotation, const Vec3& translation) : R(rotation), t(translation) {}

  static RigidTransform Identity() { return {}; }

  /// Group action on a point.
  Vec3 operator*(const Vec3& p) const { return R * p + t; }

  /// Composition: this ∘ other.
  RigidTransform operator*(const RigidTransform& o) const {
    return {R * o.R, R * o.t + t};
  }

  RigidTransform inverse() const {
    Mat3 Rt = R.transpose();
    return {Rt, -(Rt * t)};
  }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = R;
    m.topRightCorner<3, 1>() = t;
    return m;
  }
};

/// Left-invariant Brownian-motion parameters: time step and the 6x6 symmetric
/// positive semi-definite covariance of the driving twist noise.
struct BrownianParams {
  double delta = 1.0;
  Mat6 covariance = Mat6::Identity();
};

/// so(3) hat: maps omega to the skew-symmetric matrix with
/// hat(w) * x == w.cross(x).
Mat3 hat_so3(const Vec3& omega);

/// Inverse of hat_so3 on skew-symmetric input.
Vec3 vee_so3(const Mat3& W);

/// se(3) hat: 4x4 matrix [[hat(omega), nu], [0, 0]].
Mat4 hat_se3(const TwistVector& xi);

Vec3 vee_so3_checked(const Mat3& W);  // throws InvalidArgument if not skew

TwistVector vee_se3(const Mat4& X);

/// Rodrigues exponential on SO(3); 4th-order Taylor branch below kSmallAngle.
Mat3 exp_so3(const Vec3& omega);

/// Exponential on SE(3): rotation by exp_so3(omega), translation A(omega)*nu.
RigidTransform exp_se3(const TwistVector& xi);

/// The translation mixing matrix A(omega) of the SE(3) exponential:
/// A = I + hat(w)/|w|^2 (1-cos|w|) + hat(w)^2/|w|^3 (|w|-sin|w|).
Mat3 se3_translation_factor(const Vec3& omega);

/// Inverse of se3_translation_factor (valid for |omega| < pi).
Mat3 se3_translation_factor_inverse(const Vec3& omega);

/// Log on SO(3). Throws AngleNearPi when trace(R) <= -1 + 1e-6.
Vec3 log_so3(const Mat3& R);

/// Log on SE(3); rotation part via log_so3, nu = A(omega)^-1 * t.
TwistVector log_se3(const RigidTransform& g);

/// Adjoint action of g on a twist: Ad_g xi, i.e. vee(g * hat(xi) * g^-1).
TwistVector adjoint(const RigidTransform& g, const TwistVector& xi);

/// The 6x6 adjoint matrix [[R, 0], [hat(t) R, R]] in (omega, nu) order.
Mat6 adjoint_matrix(const RigidTransform& g);

/// Geodesic between g1 and g2 at parameter s in [0, 1]: rotation follows
/// R1 * exp(s * log(R1^T R2)); translation interpolates linearly.
/// Throws AngleNearPi when the relative rotation is too close to pi.
RigidTransform geodesic(const RigidTransform& g1, const RigidTransform& g2, double s);

/// One Brownian step: g * exp(sqrt(delta) * noise). The noise twist is drawn
/// by the caller; math ops never generate randomness internally.
RigidTransform brownian_step(const RigidTransform& g, const BrownianParams& params,
                             const TwistVector& noise);

/// Brownian interpolation at offset in [0, delta] within a step:
/// g * exp((offset / sqrt(delta)) * noise).
RigidTransform brownian_interp(const RigidTransform& g, const BrownianParams& params,
                               const TwistVector& noise, double offset);

/// Draws one twist ~ N(0, covariance) using the stream. Uses a (cached per
/// call) LDLT factor; covariance must be symmetric PSD.
TwistVector sample_twist_noise(const Mat6& covariance, RngStream& rng);

}  // namespace liepose
