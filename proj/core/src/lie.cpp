#include "liepose/lie.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "liepose/errors.hpp"

namespace liepose {

namespace {

/// Rodrigues coefficients a = sin(t)/t, b = (1-cos(t))/t^2, c = (t-sin(t))/t^3
/// with 4th-order Taylor branches below kSmallAngle. 1-cos is evaluated as
/// 2 sin^2(t/2) to avoid cancellation at small angles.
struct RotCoeffs {
  double a, b, c;
};

RotCoeffs rot_coeffs(double theta_sq) {
  RotCoeffs k{};
  if (theta_sq < kSmallAngle * kSmallAngle) {
    const double t2 = theta_sq;
    const double t4 = t2 * t2;
    k.a = 1.0 - t2 / 6.0 + t4 / 120.0;
    k.b = 0.5 - t2 / 24.0 + t4 / 720.0;
    k.c = 1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0;
  } else {
    const double theta = std::sqrt(theta_sq);
    const double s = std::sin(0.5 * theta);
    k.a = std::sin(theta) / theta;
    k.b = 2.0 * s * s / theta_sq;
    k.c = (theta - std::sin(theta)) / (theta_sq * theta);
  }
  return k;
}

}  // namespace

Mat3 hat_so3(const Vec3& w) {
  Mat3 W;
  W << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
      -w.y(), w.x(), 0.0;
  return W;
}

Vec3 vee_so3(const Mat3& W) {
  return {W(2, 1), W(0, 2), W(1, 0)};
}

Vec3 vee_so3_checked(const Mat3& W) {
  if ((W + W.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw InvalidArgument("vee_so3: input is not skew-symmetric");
  }
  return vee_so3(W);
}

Mat4 hat_se3(const TwistVector& xi) {
  Mat4 X = Mat4::Zero();
  X.topLeftCorner<3, 3>() = hat_so3(xi.omega);
  X.topRightCorner<3, 1>() = xi.nu;
  return X;
}

TwistVector vee_se3(const Mat4& X) {
  return {vee_so3(X.topLeftCorner<3, 3>()), X.topRightCorner<3, 1>()};
}

Mat3 exp_so3(const Vec3& omega) {
  const RotCoeffs k = rot_coeffs(omega.squaredNorm());
  const Mat3 W = hat_so3(omega);
  return Mat3::Identity() + k.a * W + k.b * W * W;
}

Mat3 se3_translation_factor(const Vec3& omega) {
  const RotCoeffs k = rot_coeffs(omega.squaredNorm());
  const Mat3 W = hat_so3(omega);
  return Mat3::Identity() + k.b * W + k.c * W * W;
}

Mat3 se3_translation_factor_inverse(const Vec3& omega) {
  const double theta_sq = omega.squaredNorm();
  const Mat3 W = hat_so3(omega);
  double e;
  if (theta_sq < 1e-4) {  // Taylor of 1/t^2 - (1+cos t)/(2 t sin t)
    e = 1.0 / 12.0 + theta_sq / 720.0 + theta_sq * theta_sq / 30240.0;
  } else {
    const double theta = std::sqrt(theta_sq);
    e = 1.0 / theta_sq - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Mat3::Identity() - 0.5 * W + e * W * W;
}

RigidTransform exp_se3(const TwistVector& xi) {
  return {exp_so3(xi.omega), se3_translation_factor(xi.omega) * xi.nu};
}

Vec3 log_so3(const Mat3& R) {
  const double tr = R.trace();
  if (tr <= -1.0 + 1e-6) {
    throw AngleNearPi();
  }
  double cos_theta = 0.5 * (tr - 1.0);
  cos_theta = std::min(1.0, std::max(-1.0, cos_theta));
  const double theta = std::acos(cos_theta);
  const Vec3 w = vee_so3(R - R.transpose());  // = 2 sin(theta) * axis
  if (theta < kSmallAngle) {
    return 0.5 * (1.0 + theta * theta / 6.0) * w;
  }
  return (theta / (2.0 * std::sin(theta))) * w;
}

TwistVector log_se3(const RigidTransform& g) {
  const Vec3 omega = log_so3(g.R);
  return {omega, se3_translation_factor_inverse(omega) * g.t};
}

TwistVector adjoint(const RigidTransform& g, const TwistVector& xi) {
  const Vec3 Rw = g.R * xi.omega;
  return {Rw, g.t.cross(Rw) + g.R * xi.nu};
}

Mat6 adjoint_matrix(const RigidTransform& g) {
  Mat6 A = Mat6::Zero();
  A.topLeftCorner<3, 3>() = g.R;
  A.bottomRightCorner<3, 3>() = g.R;
  A.bottomLeftCorner<3, 3>() = hat_so3(g.t) * g.R;
  return A;
}

RigidTransform geodesic(const RigidTransform& g1, const RigidTransform& g2, double s) {
  const Vec3 omega0 = log_so3(g1.R.transpose() * g2.R);
  RigidTransform g;
  g.R = g1.R * exp_so3(s * omega0);
  g.t = g1.t + s * (g2.t - g1.t);
  return g;
}

RigidTransform brownian_step(const RigidTransform& g, const BrownianParams& params,
                             const TwistVector& noise) {
  return g * exp_se3(noise * std::sqrt(params.delta));
}

RigidTransform brownian_interp(const RigidTransform& g, const BrownianParams& params,
                               const TwistVector& noise, double offset) {
  return g * exp_se3(noise * (offset / std::sqrt(params.delta)));
}

TwistVector sample_twist_noise(const Mat6& covariance, RngStream& rng) {
  Eigen::LDLT<Mat6> ldlt(covariance);
  if (ldlt.info() != Eigen::Success) {
    throw InvalidArgument("sample_twist_noise: covariance is not factorizable");
  }
  Vec6 z;
  for (int i = 0; i < 6; ++i) z[i] = rng.normal();
  // x = P^T L sqrt(max(D,0)) z has covariance P^T L D L^T P = covariance.
  Vec6 d = ldlt.vectorD();
  for (int i = 0; i < 6; ++i) d[i] = d[i] > 0.0 ? std::sqrt(d[i]) : 0.0;
  Vec6 y = ldlt.matrixL() * d.cwiseProduct(z).eval();
  Vec6 x = ldlt.transpositionsP().transpose() * y;
  return TwistVector::from_vector(x);
}

}  // namespace liepose
