#include "liepose/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "json.hpp"
#include "liepose/errors.hpp"

namespace liepose {

namespace {

constexpr std::array<bool, 6> kMaskAll{true, true, true, true, true, true};
constexpr std::array<bool, 6> kMaskNone{false, false, false, false, false, false};
constexpr std::array<bool, 6> kMaskYaw{false, false, true, false, false, false};        // omega_z
constexpr std::array<bool, 6> kMaskFlex{true, false, false, false, false, false};       // omega_x
constexpr std::array<bool, 6> kMaskYawPitch{true, false, true, false, false, false};    // omega_z + omega_x

JointSpec make_joint(int parent, double length, const Vec3& dir, std::array<bool, 6> mask,
                     bool end_effector, double radius) {
  JointSpec s;
  s.parent = parent;
  s.bone_length = length;
  s.home_direction = dir;
  s.dof_mask = mask;
  s.end_effector = end_effector;
  s.radius = radius;
  return s;
}

SkeletalModel make_fish() {
  // 21 joints on one chain spanning 30 mm; every interior joint bends in the
  // image plane. Radii taper head->tail so the two ends render differently.
  std::vector<JointSpec> joints;
  joints.push_back(make_joint(-1, 0.0, {0, 1, 0}, kMaskAll, false, 3.0));
  const int n = 21;
  const double bone = 30.0 / (n - 1);
  for (int j = 1; j < n; ++j) {
    const double radius = 3.0 - 2.0 * j / (n - 1);
    const bool tip = j == n - 1;
    joints.push_back(make_joint(j - 1, bone, {0, 1, 0}, tip ? kMaskNone : kMaskYaw, tip, radius));
  }
  return SkeletalModel("fish", std::move(joints));
}

SkeletalModel make_mouse() {
  // 5 joints spanning 80 mm; interior joints yaw and pitch. Radii follow a
  // wide-body profile, asymmetric between the two ends.
  const double radii[5] = {10.0, 14.0, 15.0, 12.0, 6.0};
  std::vector<JointSpec> joints;
  joints.push_back(make_joint(-1, 0.0, {0, 1, 0}, kMaskAll, false, radii[0]));
  for (int j = 1; j < 5; ++j) {
    const bool tip = j == 4;
    joints.push_back(make_joint(j - 1, 20.0, {0, 1, 0}, tip ? kMaskNone : kMaskYawPitch, tip, radii[j]));
  }
  return SkeletalModel("mouse", std::move(joints));
}

Vec3 toward(double x, double y) { return Vec3(x, y, 0).normalized(); }

SkeletalModel make_hand() {
  // 23 joints, five chains sharing the palm base, 26 DoF total. Thumb and
  // pinky carry a fixed metacarpal joint; finger roots abduct and flex, other
  // finger joints flex only, fingertips are rigid.
  std::vector<JointSpec> joints;
  joints.push_back(make_joint(-1, 0.0, {0, 1, 0}, kMaskAll, false, 18.0));

  auto len = [](double x0, double y0, double x1, double y1) {
    return std::hypot(x1 - x0, y1 - y0);
  };

  // Thumb: base -> meta (-45,25) -> root (-45,45) -> (-45,63) -> (-45,78) -> tip (-45,91).
  joints.push_back(make_joint(0, len(0, 0, -45, 25), toward(-45, 25), kMaskNone, false, 11.0));
  joints.push_back(make_joint(1, 20.0, {0, 1, 0}, kMaskYawPitch, false, 9.0));
  joints.push_back(make_joint(2, 18.0, {0, 1, 0}, kMaskFlex, false, 8.0));
  joints.push_back(make_joint(3, 15.0, {0, 1, 0}, kMaskFlex, false, 7.0));
  joints.push_back(make_joint(4, 13.0, {0, 1, 0}, kMaskNone, true, 6.0));

  // Index: base -> root (-22,62) -> (-22,94) -> (-22,116) -> tip (-22,134).
  joints.push_back(make_joint(0, len(0, 0, -22, 62), toward(-22, 62), kMaskYawPitch, false, 9.0));
  joints.push_back(make_joint(6, 32.0, {0, 1, 0}, kMaskFlex, false, 8.0));
  joints.push_back(make_joint(7, 22.0, {0, 1, 0}, kMaskFlex, false, 7.0));
  joints.push_back(make_joint(8, 18.0, {0, 1, 0}, kMaskNone, true, 6.0));

  // Middle: base -> root (0,70) -> (0,110) -> (0,138) -> tip (0,160).
  joints.push_back(make_joint(0, 70.0, {0, 1, 0}, kMaskYawPitch, false, 9.0));
  joints.push_back(make_joint(10, 40.0, {0, 1, 0}, kMaskFlex, false, 8.0));
  joints.push_back(make_joint(11, 28.0, {0, 1, 0}, kMaskFlex, false, 7.0));
  joints.push_back(make_joint(12, 22.0, {0, 1, 0}, kMaskNone, true, 6.0));

  // Ring: base -> root (22,62) -> (22,94) -> (22,116) -> tip (22,133).
  joints.push_back(make_joint(0, len(0, 0, 22, 62), toward(22, 62), kMaskYawPitch, false, 9.0));
  joints.push_back(make_joint(14, 32.0, {0, 1, 0}, kMaskFlex, false, 8.0));
  joints.push_back(make_joint(15, 22.0, {0, 1, 0}, kMaskFlex, false, 7.0));
  joints.push_back(make_joint(16, 17.0, {0, 1, 0}, kMaskNone, true, 6.0));

  // Pinky: base -> meta (40,35) -> root (40,53) -> (40,73) -> (40,88) -> tip (40,100).
  joints.push_back(make_joint(0, len(0, 0, 40, 35), toward(40, 35), kMaskNone, false, 11.0));
  joints.push_back(make_joint(18, 18.0, {0, 1, 0}, kMaskYawPitch, false, 9.0));
  joints.push_back(make_joint(19, 20.0, {0, 1, 0}, kMaskFlex, false, 7.0));
  joints.push_back(make_joint(20, 15.0, {0, 1, 0}, kMaskFlex, false, 6.5));
  joints.push_back(make_joint(21, 12.0, {0, 1, 0}, kMaskNone, true, 6.0));

  return SkeletalModel("hand", std::move(joints));
}

}  // namespace

SkeletalModel::SkeletalModel(std::string name, std::vector<JointSpec> joints)
    : name_(std::move(name)), joints_(std::move(joints)) {
  if (joints_.empty()) {
    throw InvalidArgument("skeletal model needs at least one joint");
  }
  if (joints_[0].parent != -1) {
    throw InvalidArgument("joint 0 must be the base (parent -1)");
  }
  if (joints_[0].dof_mask != kMaskAll) {
    throw InvalidArgument("the base joint must carry all six degrees of freedom");
  }
  const int n = joint_count();
  std::vector<int> child_count(static_cast<size_t>(n), 0);
  home_positions_.resize(static_cast<size_t>(n));
  home_positions_[0] = Vec3::Zero();
  for (int j = 1; j < n; ++j) {
    JointSpec& s = joints_[static_cast<size_t>(j)];
    if (s.parent < 0 || s.parent >= j) {
      throw InvalidArgument("joints must be topologically ordered with parents first");
    }
    if (!(s.bone_length > 0.0)) {
      throw InvalidArgument("non-base joints need a positive bone length");
    }
    const double norm = s.home_direction.norm();
    if (norm < 1e-12) {
      throw InvalidArgument("home direction must be nonzero");
    }
    s.home_direction /= norm;
    child_count[static_cast<size_t>(s.parent)]++;
    home_positions_[static_cast<size_t>(j)] =
        home_positions_[static_cast<size_t>(s.parent)] + s.bone_length * s.home_direction;
  }
  for (int j = 0; j < n; ++j) {
    const JointSpec& s = joints_[static_cast<size_t>(j)];
    if (s.end_effector && s.dof_mask != kMaskNone) {
      throw InvalidArgument("end effectors have zero degrees of freedom");
    }
    if (!(s.radius > 0.0)) {
      throw InvalidArgument("joint radius must be positive");
    }
  }
  // Chains: one root-to-leaf path per childless joint, in joint-index order.
  for (int j = 0; j < n; ++j) {
    if (child_count[static_cast<size_t>(j)] == 0) {
      std::vector<int> path;
      for (int k = j; k != -1; k = joints_[static_cast<size_t>(k)].parent) path.push_back(k);
      std::reverse(path.begin(), path.end());
      chains_.push_back(std::move(path));
    }
  }
}

SkeletalModel SkeletalModel::preset(const std::string& name) {
  if (name == "fish") return make_fish();
  if (name == "mouse") return make_mouse();
  if (name == "hand") return make_hand();
  throw InvalidArgument("unknown model preset: " + name);
}

int SkeletalModel::dof_count() const {
  int total = 0;
  for (const JointSpec& s : joints_) {
    for (bool b : s.dof_mask) total += b ? 1 : 0;
  }
  return total;
}

SubchainPlan SkeletalModel::subchains_for_estimation() const {
  SubchainPlan plan;
  if (chains_.size() == 1) {
    plan.stages.push_back(chains_[0]);
    plan.shared_base = false;
    return plan;
  }
  plan.shared_base = true;
  plan.stages.push_back({0});
  for (const auto& chain : chains_) {
    plan.stages.emplace_back(chain.begin() + 1, chain.end());
  }
  return plan;
}

std::string SkeletalModel::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["name"] = name_;
  nlohmann::json arr = nlohmann::json::array();
  for (const JointSpec& s : joints_) {
    nlohmann::json js;
    js["parent"] = s.parent;
    js["bone_length"] = s.bone_length;
    js["dir"] = {s.home_direction.x(), s.home_direction.y(), s.home_direction.z()};
    js["dof"] = {s.dof_mask[0], s.dof_mask[1], s.dof_mask[2],
                 s.dof_mask[3], s.dof_mask[4], s.dof_mask[5]};
    js["end_effector"] = s.end_effector;
    js["radius"] = s.radius;
    arr.push_back(js);
  }
  j["joints"] = arr;
  return j.dump(2);
}

SkeletalModel SkeletalModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptStream(std::string("model JSON parse failure: ") + e.what());
  }
  try {
    const int version = j.at("version").get<int>();
    if (version != 1) {
      throw VersionMismatch("unsupported model schema version " + std::to_string(version));
    }
    std::vector<JointSpec> joints;
    for (const auto& js : j.at("joints")) {
      JointSpec s;
      s.parent = js.at("parent").get<int>();
      s.bone_length = js.at("bone_length").get<double>();
      if (js.contains("dir")) {
        s.home_direction = Vec3(js["dir"][0].get<double>(), js["dir"][1].get<double>(),
                                js["dir"][2].get<double>());
      }
      const auto& dof = js.at("dof");
      for (int i = 0; i < 6; ++i) s.dof_mask[static_cast<size_t>(i)] = dof[static_cast<size_t>(i)].get<bool>();
      s.end_effector = js.at("end_effector").get<bool>();
      s.radius = js.value("radius", 1.0);
      joints.push_back(s);
    }
    return SkeletalModel(j.at("name").get<std::string>(), std::move(joints));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptStream(std::string("model JSON schema failure: ") + e.what());
  }
}

FkResult forward_kinematics(const SkeletalModel& model, const Pose& pose) {
  const int n = model.joint_count();
  if (static_cast<int>(pose.twists.size()) != n) {
    throw DofViolation("pose has " + std::to_string(pose.twists.size()) + " twists for " +
                       std::to_string(n) + " joints");
  }
  if (!(pose.scale >= 0.5 && pose.scale <= 2.0)) {
    throw DofViolation("pose scale outside [0.5, 2]");
  }
  for (int j = 0; j < n; ++j) {
    const JointSpec& spec = model.joint(j);
    const Vec6 x = pose.twists[static_cast<size_t>(j)].to_vector();
    for (int i = 0; i < 6; ++i) {
      if (!spec.dof_mask[static_cast<size_t>(i)] && x[i] != 0.0) {
        throw DofViolation("joint " + std::to_string(j) + " sets masked coordinate " +
                           std::to_string(i));
      }
    }
  }

  FkResult out;
  out.transforms.resize(static_cast<size_t>(n));
  out.positions.resize(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    const JointSpec& spec = model.joint(j);
    const RigidTransform local = joint_local_transform(model, pose, j);
    if (spec.parent == -1) {
      out.transforms[static_cast<size_t>(j)] = local;
    } else {
      out.transforms[static_cast<size_t>(j)] =
          out.transforms[static_cast<size_t>(spec.parent)] * local;
    }
    out.positions[static_cast<size_t>(j)] =
        out.transforms[static_cast<size_t>(j)] * (pose.scale * model.home_positions()[static_cast<size_t>(j)]);
  }
  return out;
}

RigidTransform joint_local_transform(const SkeletalModel& model, const Pose& pose, int joint) {
  const JointSpec& spec = model.joint(joint);
  const TwistVector& xi = pose.twists[static_cast<size_t>(joint)];
  if (spec.parent == -1) {
    return exp_se3(xi);
  }
  const Vec3 pivot = pose.scale * model.home_positions()[static_cast<size_t>(spec.parent)];
  return exp_se3(TwistVector(xi.omega, xi.nu + pivot.cross(xi.omega)));
}

RigidTransform apply_joint_update(const RigidTransform& cumulative, const TwistVector& r) {
  return cumulative * exp_se3(r);
}

TwistVector pivoted_screw(const Vec3& omega, const Vec3& pivot) {
  return {omega, pivot.cross(omega)};
}

Vec6 mask_twist(const SkeletalModel& model, int joint, const Vec6& x) {
  Vec6 y = x;
  const auto& mask = model.joint(joint).dof_mask;
  for (int i = 0; i < 6; ++i) {
    if (!mask[static_cast<size_t>(i)]) y[i] = 0.0;
  }
  return y;
}

bool compose_joint_update(const SkeletalModel& model, int joint, const Vec6& r, Pose* pose) {
  TwistVector& xi = pose->twists[static_cast<size_t>(joint)];
  const Vec6 rm = mask_twist(model, joint, r);
  if (model.joint(joint).parent == -1) {
    try {
      xi = log_se3(exp_se3(xi) * exp_se3(TwistVector::from_vector(rm)));
    } catch (const AngleNearPi&) {
      return false;
    }
    return true;
  }
  const Mat3 combined = exp_so3(xi.omega) * exp_so3(rm.head<3>());
  Vec3 omega;
  try {
    omega = log_so3(combined);
  } catch (const AngleNearPi&) {
    return false;
  }
  Vec6 x = Vec6::Zero();
  x.head<3>() = omega;
  x.tail<3>() = xi.nu + rm.tail<3>();
  x = mask_twist(model, joint, x);
  xi = TwistVector::from_vector(x);
  return true;
}

}  // namespace liepose
