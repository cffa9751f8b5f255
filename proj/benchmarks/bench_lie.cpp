#include <benchmark/benchmark.h>

#include <vector>

#include "liepose/dataset.hpp"
#include "liepose/lie.hpp"
#include "liepose/render.hpp"
#include "liepose/rng.hpp"
#include "liepose/skeleton.hpp"

namespace {

using namespace liepose;

std::vector<TwistVector> random_twists(int count) {
  RngStream rng(7);
  std::vector<TwistVector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Vec3 omega(rng.normal(), rng.normal(), rng.normal());
    omega *= rng.uniform(0.0, 3.0) / omega.norm();
    const Vec3 nu(rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0),
                  rng.uniform(-100.0, 100.0));
    out.emplace_back(omega, nu);
  }
  return out;
}

void BM_ExpSe3(benchmark::State& state) {
  const auto twists = random_twists(1024);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(exp_se3(twists[i++ & 1023]));
  }
}
BENCHMARK(BM_ExpSe3);

void BM_LogSe3(benchmark::State& state) {
  const auto twists = random_twists(1024);
  std::vector<RigidTransform> transforms;
  transforms.reserve(twists.size());
  for (const TwistVector& x : twists) transforms.push_back(exp_se3(x));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_se3(transforms[i++ & 1023]));
  }
}
BENCHMARK(BM_LogSe3);

void BM_ForwardKinematicsFish(benchmark::State& state) {
  const SkeletalModel model = SkeletalModel::preset("fish");
  RngStream rng(11);
  const Pose pose = sample_pose(model, DatasetConfig::preset_config("fish"), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_kinematics(model, pose));
  }
}
BENCHMARK(BM_ForwardKinematicsFish);

void BM_RenderFish(benchmark::State& state) {
  const SkeletalModel model = SkeletalModel::preset("fish");
  const CameraModel camera;
  RngStream rng(13);
  const Pose pose = sample_pose(model, DatasetConfig::preset_config("fish"), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_depth(model, pose, camera));
  }
}
BENCHMARK(BM_RenderFish);

}  // namespace

BENCHMARK_MAIN();
