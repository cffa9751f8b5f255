#include <set>

#include "doctest.h"
#include "liepose/errors.hpp"
#include "liepose/skeleton.hpp"
#include "test_support.hpp"

using namespace liepose;

namespace {

/// Random pose honoring the model's masks (coordinates stay modest so the
/// composed rotations remain far from the log branch cut).
Pose random_masked_pose(const SkeletalModel& model, RngStream& rng) {
  Pose pose = Pose::rest(model);
  pose.scale = rng.uniform(0.8, 1.4);
  pose.twists[0] = TwistVector(
      Vec3(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), rng.uniform(-2.0, 2.0)),
      Vec3(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(400, 700)));
  for (int j = 1; j < model.joint_count(); ++j) {
    Vec6 x = Vec6::Zero();
    for (int d = 0; d < 6; ++d) {
      if (model.joint(j).dof_mask[static_cast<size_t>(d)]) x[d] = rng.uniform(-0.3, 0.3);
    }
    pose.twists[static_cast<size_t>(j)] = TwistVector::from_vector(x);
  }
  return pose;
}

}  // namespace

TEST_SUITE("skeleton") {

TEST_CASE("preset shapes: joint counts, chains, and degree-of-freedom layout") {
  const SkeletalModel fish = SkeletalModel::preset("fish");
  CHECK(fish.joint_count() == 21);
  CHECK(fish.chains().size() == 1);
  CHECK(fish.joint(0).parent == -1);
  for (int j = 1; j < fish.joint_count(); ++j) {
    CHECK(fish.joint(j).parent == j - 1);  // single chain
    CHECK(fish.joint(j).parent < j);
  }
  // Base: full 6 DoF; interior joints: yaw only; tip: none.
  for (int d = 0; d < 6; ++d) CHECK(fish.joint(0).dof_mask[static_cast<size_t>(d)]);
  for (int j = 1; j < fish.joint_count() - 1; ++j) {
    CHECK(fish.joint(j).dof_mask == std::array<bool, 6>{false, false, true, false, false, false});
  }
  CHECK(fish.joint(fish.joint_count() - 1).dof_mask == std::array<bool, 6>{});
  CHECK(fish.dof_count() == 6 + 19);

  const SkeletalModel mouse = SkeletalModel::preset("mouse");
  CHECK(mouse.joint_count() == 5);
  CHECK(mouse.chains().size() == 1);

  const SkeletalModel hand = SkeletalModel::preset("hand");
  CHECK(hand.joint_count() == 23);
  CHECK(hand.chains().size() == 5);
  for (const auto& chain : hand.chains()) CHECK(chain.front() == 0);

  CHECK_THROWS_AS((void)SkeletalModel::preset("dragon"), InvalidArgument);
}

TEST_CASE("home positions start at the origin and bones have stated lengths") {
  for (const char* name : {"fish", "mouse", "hand"}) {
    const SkeletalModel model = SkeletalModel::preset(name);
    CHECK(model.home_positions()[0].norm() == 0.0);
    for (int j = 1; j < model.joint_count(); ++j) {
      const int p = model.joint(j).parent;
      const double gap =
          (model.home_positions()[static_cast<size_t>(j)] - model.home_positions()[static_cast<size_t>(p)])
              .norm();
      CHECK(gap == doctest::Approx(model.joint(j).bone_length).epsilon(1e-12));
    }
  }
}

TEST_CASE("rest pose puts every joint at its home position") {
  const SkeletalModel model = SkeletalModel::preset("fish");
  const FkResult fk = forward_kinematics(model, Pose::rest(model));
  for (int j = 0; j < model.joint_count(); ++j) {
    CHECK((fk.positions[static_cast<size_t>(j)] - model.home_positions()[static_cast<size_t>(j)]).norm() <
          1e-12);
  }
}

TEST_CASE("forward kinematics matches a homogeneous-matrix oracle") {
  for (const char* name : {"fish", "mouse", "hand"}) {
    const SkeletalModel model = SkeletalModel::preset(name);
    RngStream rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      const Pose pose = random_masked_pose(model, rng);
      const FkResult fk = forward_kinematics(model, pose);
      const auto oracle = test_support::oracle_fk_positions(model, pose);
      for (int j = 0; j < model.joint_count(); ++j) {
        CHECK((fk.positions[static_cast<size_t>(j)] - oracle[static_cast<size_t>(j)]).norm() < 1e-8);
      }
    }
  }
}

TEST_CASE("bone lengths scale with the pose scale and never stretch") {
  const SkeletalModel model = SkeletalModel::preset("fish");
  RngStream rng(22);
  const Pose pose = random_masked_pose(model, rng);
  const FkResult fk = forward_kinematics(model, pose);
  for (int j = 1; j < model.joint_count(); ++j) {
    const int p = model.joint(j).parent;
    const double gap =
        (fk.positions[static_cast<size_t>(j)] - fk.positions[static_cast<size_t>(p)]).norm();
    CHECK(gap == doctest::Approx(pose.scale * model.joint(j).bone_length).epsilon(1e-9));
  }
}

TEST_CASE("each cumulative transform factors through its parent") {
  const SkeletalModel model = SkeletalModel::preset("hand");
  RngStream rng(23);
  const Pose pose = random_masked_pose(model, rng);
  const FkResult fk = forward_kinematics(model, pose);
  for (int j = 1; j < model.joint_count(); ++j) {
    const int p = model.joint(j).parent;
    const RigidTransform rebuilt =
        fk.transforms[static_cast<size_t>(p)] * joint_local_transform(model, pose, j);
    CHECK((rebuilt.matrix() - fk.transforms[static_cast<size_t>(j)].matrix()).norm() < 1e-10);
  }
}

TEST_CASE("mask violations and scale violations are rejected") {
  const SkeletalModel model = SkeletalModel::preset("fish");
  Pose pose = Pose::rest(model);
  pose.twists[1] = TwistVector(Vec3(0.1, 0.0, 0.0), Vec3::Zero());  // omega_x not allowed
  CHECK_THROWS_AS((void)forward_kinematics(model, pose), DofViolation);

  Pose scaled = Pose::rest(model);
  scaled.scale = 2.5;
  CHECK_THROWS_AS((void)forward_kinematics(model, scaled), DofViolation);
  scaled.scale = 0.2;
  CHECK_THROWS_AS((void)forward_kinematics(model, scaled), DofViolation);
}

TEST_CASE("mask_twist zeroes exactly the disallowed coordinates") {
  const SkeletalModel model = SkeletalModel::preset("fish");
  Vec6 x;
  x << 1, 2, 3, 4, 5, 6;
  const Vec6 base = mask_twist(model, 0, x);
  CHECK((base - x).norm() == 0.0);
  const Vec6 mid = mask_twist(model, 5, x);
  CHECK(mid[2] == 3.0);
  CHECK(mid[0] == 0.0);
  CHECK(mid[1] == 0.0);
  CHECK(mid.tail<3>().norm() == 0.0);
}

TEST_CASE("pivoted_screw produces the stated moment") {
  const Vec3 omega(0.0, 0.0, 0.7);
  const Vec3 pivot(10.0, 20.0, 30.0);
  const TwistVector s = pivoted_screw(omega, pivot);
  CHECK((s.omega - omega).norm() == 0.0);
  CHECK((s.nu - pivot.cross(omega)).norm() == 0.0);
}

TEST_CASE("compose_joint_update adds yaw angles exactly for hinge joints") {
  const SkeletalModel model = SkeletalModel::preset("fish");
  Pose pose = Pose::rest(model);
  pose.twists[0].nu = Vec3(0, 0, 600);
  Vec6 r = Vec6::Zero();
  r[2] = 0.25;
  REQUIRE(compose_joint_update(model, 3, r, &pose));
  CHECK(pose.twists[3].omega.z() == doctest::Approx(0.25).epsilon(1e-12));
  REQUIRE(compose_joint_update(model, 3, r, &pose));
  CHECK(pose.twists[3].omega.z() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("compose_joint_update refuses the branch cut and leaves the pose alone") {
  const SkeletalModel model = SkeletalModel::preset("fish");
  Pose pose = Pose::rest(model);
  pose.twists[0].nu = Vec3(0, 0, 600);
  Vec6 big = Vec6::Zero();
  big[2] = 3.0;
  REQUIRE(compose_joint_update(model, 3, big, &pose));
  Vec6 push = Vec6::Zero();
  push[2] = kPi - 3.0;  // lands exactly on the cut
  const Pose before = pose;
  CHECK_FALSE(compose_joint_update(model, 3, push, &pose));
  CHECK((pose.twists[3].to_vector() - before.twists[3].to_vector()).norm() == 0.0);
}

TEST_CASE("compose_joint_update on the base composes on the group") {
  const SkeletalModel model = SkeletalModel::preset("mouse");
  RngStream rng(24);
  Pose pose = Pose::rest(model);
  pose.twists[0] = TwistVector(Vec3(0.1, -0.2, 0.8), Vec3(10, 20, 500));
  const RigidTransform before = exp_se3(pose.twists[0]);
  Vec6 r;
  r << 0.05, 0.02, -0.1, 3.0, -2.0, 1.0;
  REQUIRE(compose_joint_update(model, 0, r, &pose));
  const RigidTransform after = exp_se3(pose.twists[0]);
  const RigidTransform expected = before * exp_se3(TwistVector::from_vector(r));
  CHECK((after.matrix() - expected.matrix()).norm() < 1e-9);
}

TEST_CASE("apply_joint_update right-multiplies the exponential of the correction") {
  RngStream rng(25);
  const RigidTransform g = test_support::random_transform(rng);
  const TwistVector r = test_support::random_twist(rng, 1.0, 10.0);
  const RigidTransform updated = apply_joint_update(g, r);
  CHECK((updated.matrix() - (g * exp_se3(r)).matrix()).norm() < 1e-12);
}

TEST_CASE("subchain plans: one stage for chains, base plus fingers for the hand") {
  const SkeletalModel fish = SkeletalModel::preset("fish");
  const SubchainPlan fish_plan = fish.subchains_for_estimation();
  REQUIRE(fish_plan.stages.size() == 1);
  CHECK(static_cast<int>(fish_plan.stages[0].size()) == fish.joint_count());
  CHECK_FALSE(fish_plan.shared_base);

  const SkeletalModel hand = SkeletalModel::preset("hand");
  const SubchainPlan hand_plan = hand.subchains_for_estimation();
  REQUIRE(hand_plan.stages.size() == 6);
  CHECK(hand_plan.shared_base);
  CHECK(hand_plan.stages[0] == std::vector<int>{0});
  // The five finger stages partition the remaining joints.
  std::set<int> seen;
  for (size_t s = 1; s < hand_plan.stages.size(); ++s) {
    for (int j : hand_plan.stages[s]) seen.insert(j);
  }
  CHECK(static_cast<int>(seen.size()) == hand.joint_count() - 1);
}

TEST_CASE("model JSON round-trips and rejects damaged input") {
  for (const char* name : {"fish", "mouse", "hand"}) {
    const SkeletalModel model = SkeletalModel::preset(name);
    const std::string text = model.to_json();
    const SkeletalModel back = SkeletalModel::from_json(text);
    CHECK(back.name() == model.name());
    REQUIRE(back.joint_count() == model.joint_count());
    for (int j = 0; j < model.joint_count(); ++j) {
      CHECK(back.joint(j).parent == model.joint(j).parent);
      CHECK(back.joint(j).bone_length == model.joint(j).bone_length);
      CHECK(back.joint(j).dof_mask == model.joint(j).dof_mask);
      CHECK(back.joint(j).radius == model.joint(j).radius);
      CHECK((back.home_positions()[static_cast<size_t>(j)] -
             model.home_positions()[static_cast<size_t>(j)])
                .norm() == 0.0);
    }
    CHECK(back.to_json() == text);
  }
  CHECK_THROWS_AS((void)SkeletalModel::from_json("not json at all"), CorruptStream);
}

}  // TEST_SUITE
