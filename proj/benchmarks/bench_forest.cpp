#include <benchmark/benchmark.h>

#include <vector>

#include "liepose/forest.hpp"
#include "liepose/rng.hpp"

namespace {

using namespace liepose;

/// Synthetic regression problem: the feature is a random linear probe of the
/// example vector, the label a fixed linear map of it plus noise.
class ProbeSpace : public FeatureSpace {
 public:
  explicit ProbeSpace(std::vector<Vec6> examples) : examples_(std::move(examples)) {}

  int example_count() const override { return static_cast<int>(examples_.size()); }

  FeatureDesc sample(RngStream& rng) const override {
    FeatureDesc f;
    for (int k = 0; k < 3; ++k) {
      f.u[k] = rng.uniform(-1.0, 1.0);
      f.v[k] = rng.uniform(-1.0, 1.0);
    }
    return f;
  }

  double evaluate(const FeatureDesc& f, int example) const override {
    const Vec6& x = examples_[static_cast<std::size_t>(example)];
    return f.u.dot(x.head<3>()) + f.v.dot(x.tail<3>());
  }

 private:
  std::vector<Vec6> examples_;
};

struct Problem {
  std::vector<Vec6> examples;
  TrainingLabels labels;
};

Problem make_problem(int count) {
  RngStream rng(17);
  Problem p;
  p.examples.reserve(static_cast<std::size_t>(count));
  p.labels.twists.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Vec6 x;
    for (int k = 0; k < 6; ++k) x[k] = rng.uniform(-1.0, 1.0);
    Vec6 y = 0.3 * x.reverse();
    for (int k = 0; k < 6; ++k) y[k] += rng.normal(0.0, 0.01);
    p.examples.push_back(x);
    p.labels.twists.push_back(y);
  }
  return p;
}

ForestConfig bench_config() {
  ForestConfig config;
  config.tree_count = 4;
  config.max_depth = 10;
  config.candidate_count = 32;
  config.threshold_count = 8;
  return config;
}

void BM_TrainForest(benchmark::State& state) {
  const Problem p = make_problem(static_cast<int>(state.range(0)));
  const ProbeSpace space(p.examples);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        train_forest(space, p.labels, ForestKind::IkRegressor, bench_config(), 23));
  }
}
BENCHMARK(BM_TrainForest)->Arg(256)->Arg(1024);

void BM_PredictTwist(benchmark::State& state) {
  const Problem p = make_problem(1024);
  const ProbeSpace space(p.examples);
  const Forest forest =
      train_forest(space, p.labels, ForestKind::IkRegressor, bench_config(), 23);
  RngStream rng(29);
  Vec6 probe;
  for (int k = 0; k < 6; ++k) probe[k] = rng.uniform(-1.0, 1.0);
  const FeatureEval eval = [&](const FeatureDesc& f) {
    return f.u.dot(probe.head<3>()) + f.v.dot(probe.tail<3>());
  };
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_twist(forest, eval));
  }
}
BENCHMARK(BM_PredictTwist);

}  // namespace
