#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "liepose/lie.hpp"

namespace liepose {

/// One joint of an articulated model. dof_mask lists which of the six twist
/// coordinates (omega_x, omega_y, omega_z, nu_x, nu_y, nu_z) a pose may set.
struct JointSpec {
  int parent = -1;                       // -1 for the base joint
  double bone_length = 0.0;              // mm, from parent to this joint
  Vec3 home_direction = Vec3(0, 1, 0);   // unit direction of the bone at home
  std::array<bool, 6> dof_mask{};        // permitted twist coordinates
  bool end_effector = false;             // terminal joint, zero DoF
  double radius = 1.0;                   // capsule radius for rendering, mm
};

/// Stage decomposition used by estimation: each stage is a list of joint
/// indices refined in order. Single-chain objects have one stage covering the
/// whole chain; multi-chain objects get a base stage plus one per sub-chain.
struct SubchainPlan {
  std::vector<std::vector<int>> stages;
  bool shared_base = false;
};

/// Articulated skeletal model: topologically ordered joints (base first,
/// parents before children) plus derived chains and home geometry.
class SkeletalModel {
 public:
  SkeletalModel(std::string name, std::vector<JointSpec> joints);

  static SkeletalModel preset(const std::string& name);  // fish | mouse | hand

  const std::string& name() const { return name_; }
  int joint_count() const { return static_cast<int>(joints_.size()); }
  const std::vector<JointSpec>& joints() const { return joints_; }
  const JointSpec& joint(int j) const { return joints_[static_cast<size_t>(j)]; }

  /// Total degrees of freedom (sum of mask bits).
  int dof_count() const;

  /// Root-to-leaf joint index paths, one per end of the tree.
  const std::vector<std::vector<int>>& chains() const { return chains_; }

  /// Home-pose joint positions at scale 1 (base at origin).
  const std::vector<Vec3>& home_positions() const { return home_positions_; }

  /// Estimation stage layout (see SubchainPlan).
  SubchainPlan subchains_for_estimation() const;

  /// Versioned JSON text schema (round-trips exactly).
  std::string to_json() const;
  static SkeletalModel from_json(const std::string& text);

 private:
  std::string name_;
  std::vector<JointSpec> joints_;
  std::vector<std::vector<int>> chains_;
  std::vector<Vec3> home_positions_;
};

/// A configuration of a model: one twist per joint plus a global scale.
/// Invariant (checked by forward_kinematics): twists[j] is exactly zero in
/// every coordinate outside joint j's dof_mask, and scale lies in [0.5, 2].
struct Pose {
  std::vector<TwistVector> twists;
  double scale = 1.0;

  static Pose rest(const SkeletalModel& model) {
    Pose p;
    p.twists.assign(static_cast<size_t>(model.joint_count()), TwistVector::Zero());
    return p;
  }
};

using JointPositions = std::vector<Vec3>;

/// Result of forward kinematics: per-joint cumulative transforms (the product
/// of exponentials up to and including each joint) and joint positions.
struct FkResult {
  std::vector<RigidTransform> transforms;
  JointPositions positions;
};

/// Product-of-exponentials forward kinematics. The cumulative transform of
/// joint j is exp(xi_1)···exp(xi_j) along its chain, applied to the scaled
/// home position. Non-base twists are realized as screws pivoted at the
/// parent joint's scaled home position so bone lengths are preserved exactly;
/// the pivot moment is derived from the stored masked coordinates, never free.
/// Throws DofViolation on mask or scale violations.
FkResult forward_kinematics(const SkeletalModel& model, const Pose& pose);

/// Right-multiplies a correction twist onto a partial-chain transform.
RigidTransform apply_joint_update(const RigidTransform& cumulative, const TwistVector& r);

/// The local exponential factor of joint j: exp(xi_0) for the base, otherwise
/// exp of the stored twist re-pivoted at the parent's scaled home position.
/// forward_kinematics chains exactly these factors, so recomputing a single
/// joint after editing its twist needs only its parent's cumulative transform.
RigidTransform joint_local_transform(const SkeletalModel& model, const Pose& pose, int joint);

/// The screw realizing rotation omega about the axis through `pivot`:
/// (omega, pivot x omega).
TwistVector pivoted_screw(const Vec3& omega, const Vec3& pivot);

/// Zeroes every coordinate of x outside the joint's dof_mask.
Vec6 mask_twist(const SkeletalModel& model, int joint, const Vec6& x);

/// Composes a masked correction into joint j of the pose, in place.
/// Base joint: xi <- log(exp(xi) * exp(r)) (full 6-DoF, exact).
/// Non-base: rotation composes about the shared parent pivot, then the log is
/// re-projected onto the mask (exact for single-axis joints).
/// Returns false (leaving the twist unchanged) if the composition lands on
/// the log branch cut.
bool compose_joint_update(const SkeletalModel& model, int joint, const Vec6& r, Pose* pose);

}  // namespace liepose
