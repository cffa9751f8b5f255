#include <cmath>
#include <vector>

#include "doctest.h"
#include "liepose/dataset.hpp"
#include "liepose/errors.hpp"
#include "liepose/tracker.hpp"
#include "test_support.hpp"

using namespace liepose;

namespace {

double weight_sum(const ParticleSet& set) {
  double s = 0.0;
  for (const Particle& p : set.particles) s += p.weight;
  return s;
}

/// A short rendered motion with ground truth, shared across the tracking
/// cases below.
struct TinyTrack {
  std::vector<DepthImage> frames;
  std::vector<Pose> truth;
};

TinyTrack tiny_track(int frames, std::uint64_t seed) {
  const auto& fx = test_support::tiny_fixture();
  SequenceMotionConfig motion;
  motion.frames = frames;
  // Raw motion draws are not guaranteed to stay on screen; scan substreams
  // deterministically until one renders end to end.
  for (std::uint64_t attempt = 0; attempt < 50; ++attempt) {
    const PoseSequence seq =
        generate_motion_sequence(fx.model, fx.data_config, motion, seed + attempt);
    TinyTrack track;
    try {
      for (const TimedPose& frame : seq.frames) {
        track.frames.push_back(render_depth(fx.model, frame.pose, fx.camera));
        track.truth.push_back(frame.pose);
      }
    } catch (const OffScreen&) {
      continue;
    }
    return track;
  }
  throw std::runtime_error("no renderable tiny track found");
}

}  // namespace

TEST_SUITE("tracker") {

TEST_CASE("the measurement weight is a normalized Gaussian in the score") {
  const double sigma = 7.0;
  CHECK(weigh(0.0, sigma) == doctest::Approx(1.0 / (std::sqrt(2.0 * kPi) * sigma)).epsilon(1e-15));
  CHECK(weigh(sigma, sigma) / weigh(0.0, sigma) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(weigh(30.0, sigma) < weigh(3.0, sigma));
  CHECK_THROWS_AS((void)weigh(1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS((void)weigh(1.0, -2.0), InvalidArgument);
}

TEST_CASE("inverse-CDF resampling follows the weights") {
  RngStream rng(6100);
  // A degenerate distribution always returns its sole support.
  for (int pick : resample_cdf({1.0, 0.0, 0.0}, 16, rng)) CHECK(pick == 0);
  for (int pick : resample_cdf({0.0, 0.0, 1.0}, 16, rng)) CHECK(pick == 2);
  // Proportions are roughly honored for a mixed distribution.
  const std::vector<double> weights = {0.6, 0.3, 0.1};
  const std::vector<int> picks = resample_cdf(weights, 20000, rng);
  REQUIRE(picks.size() == 20000);
  std::vector<int> counts(3, 0);
  for (int pick : picks) {
    REQUIRE(pick >= 0);
    REQUIRE(pick < 3);
    ++counts[static_cast<size_t>(pick)];
  }
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(counts[static_cast<size_t>(c)] / 20000.0 - weights[static_cast<size_t>(c)]) <
          0.02);
  }
}

TEST_CASE("initial particle sets replicate the pose with uniform weights") {
  const auto& fx = test_support::tiny_fixture();
  const Pose rest = Pose::rest(fx.model);
  const ParticleSet set = init_particles(rest, 8);
  REQUIRE(set.particles.size() == 8);
  CHECK(set.timestep == 0);
  for (const Particle& p : set.particles) {
    CHECK(p.weight == 0.125);
    for (size_t j = 0; j < rest.twists.size(); ++j) {
      CHECK((p.pose.twists[j].to_vector() - rest.twists[j].to_vector()).norm() == 0.0);
    }
  }
  CHECK_THROWS_AS((void)init_particles(rest, 0), InvalidArgument);
}

TEST_CASE("track steps advance the clock and keep weights normalized") {
  const auto& fx = test_support::tiny_fixture();
  const TinyTrack track = tiny_track(3, 888001);

  TrackerConfig config;
  config.particle_count = 12;
  TrackStats stats;
  ParticleSet set = init_particles(track.truth[0], config.particle_count);
  for (size_t f = 1; f < track.frames.size(); ++f) {
    const TrackStepResult step =
        track_step(set, track.frames[f], fx.bundle, config, 424255, &stats);
    CHECK(step.next.timestep == set.timestep + 1);
    REQUIRE(step.next.particles.size() == static_cast<size_t>(config.particle_count));
    CHECK(std::abs(weight_sum(step.next) - 1.0) < 1e-12);
    REQUIRE(step.estimate.positions.size() == static_cast<size_t>(fx.model.joint_count()));
    CHECK(std::isfinite(step.estimate.predicted_error));
    set = step.next;
  }
  CHECK(set.timestep == 2);

  // Unnormalized input weights are rejected.
  ParticleSet bad = init_particles(track.truth[0], 4);
  for (Particle& p : bad.particles) p.weight = 0.5;
  CHECK_THROWS_AS((void)track_step(bad, track.frames[1], fx.bundle, config, 1), InvalidArgument);
}

TEST_CASE("the averaged positions are convex combinations of particle positions") {
  const auto& fx = test_support::tiny_fixture();
  const TinyTrack track = tiny_track(2, 888002);
  TrackerConfig config;
  config.particle_count = 10;
  const ParticleSet set = init_particles(track.truth[0], config.particle_count);
  const TrackStepResult step = track_step(set, track.frames[1], fx.bundle, config, 5);

  // Each joint estimate must lie inside the bounding box of that joint across
  // particles (a consequence of convex weighting).
  std::vector<JointPositions> per_particle;
  for (const Particle& p : step.next.particles) {
    per_particle.push_back(forward_kinematics(fx.model, p.pose).positions);
  }
  for (int j = 0; j < fx.model.joint_count(); ++j) {
    Vec3 lo = per_particle[0][static_cast<size_t>(j)];
    Vec3 hi = lo;
    for (const JointPositions& ps : per_particle) {
      lo = lo.cwiseMin(ps[static_cast<size_t>(j)]);
      hi = hi.cwiseMax(ps[static_cast<size_t>(j)]);
    }
    const Vec3 e = step.estimate.positions[static_cast<size_t>(j)];
    for (int k = 0; k < 3; ++k) {
      CHECK(e[k] >= lo[k] - 1e-9);
      CHECK(e[k] <= hi[k] + 1e-9);
    }
  }
}

TEST_CASE("zero process noise reduces tracking to cascade refinement") {
  const auto& fx = test_support::tiny_fixture();
  const TinyTrack track = tiny_track(2, 888003);

  TrackerConfig config;
  config.particle_count = 5;
  config.measurement.brownian.covariance = Mat6::Zero();

  const ParticleSet set = init_particles(track.truth[0], config.particle_count);
  const TrackStepResult step = track_step(set, track.frames[1], fx.bundle, config, 9);

  // Every particle starts identical and diffuses by exp(0), so each one is
  // the same deterministic cascade pass over the non-base joints; the
  // weighted average then equals that single refinement.
  Pose reference = track.truth[0];
  const DepthCrop crop(track.frames[1]);
  refine_pose(crop, fx.bundle.cascade, &reference, config.rounds, /*skip_base=*/true);
  const FkResult fk = forward_kinematics(fx.model, reference);
  REQUIRE(step.estimate.positions.size() == fk.positions.size());
  for (size_t j = 0; j < fk.positions.size(); ++j) {
    CHECK((step.estimate.positions[j] - fk.positions[j]).norm() < 1e-6);
  }
  for (const Particle& p : step.next.particles) {
    CHECK(std::abs(p.weight - 1.0 / config.particle_count) < 1e-12);
  }
}

TEST_CASE("hopeless measurements fall back to uniform weights and are counted") {
  const auto& fx = test_support::tiny_fixture();
  const TinyTrack track = tiny_track(2, 888004);

  TrackerConfig config;
  config.particle_count = 6;
  config.measurement.sigma = 1e-12;  // exp underflows to zero for any real score
  TrackStats stats;
  const ParticleSet set = init_particles(track.truth[0], config.particle_count);
  const TrackStepResult step = track_step(set, track.frames[1], fx.bundle, config, 12, &stats);
  CHECK(stats.degenerate_weight_events >= 1);
  for (const Particle& p : step.next.particles) {
    CHECK(p.weight == doctest::Approx(1.0 / config.particle_count).epsilon(1e-12));
  }

  // Counters accumulate across calls on the same stats object.
  const TrackStepResult again =
      track_step(step.next, track.frames[1], fx.bundle, config, 12, &stats);
  (void)again;
  CHECK(stats.degenerate_weight_events >= 2);
}

TEST_CASE("tracking is deterministic and thread-count invariant") {
  const auto& fx = test_support::tiny_fixture();
  const TinyTrack track = tiny_track(3, 888005);

  TrackerConfig config;
  config.particle_count = 8;

  const auto run = [&](const TrackerConfig& cfg) {
    ParticleSet set = init_particles(track.truth[0], cfg.particle_count);
    std::vector<Pose> estimates;
    for (size_t f = 1; f < track.frames.size(); ++f) {
      TrackStepResult step = track_step(set, track.frames[f], fx.bundle, cfg, 2024);
      estimates.push_back(step.estimate.pose);
      set = std::move(step.next);
    }
    return estimates;
  };

  const std::vector<Pose> a = run(config);
  const std::vector<Pose> b = run(config);
  TrackerConfig threaded = config;
  threaded.threads = 3;
  const std::vector<Pose> c = run(threaded);
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() == c.size());
  for (size_t f = 0; f < a.size(); ++f) {
    for (size_t j = 0; j < a[f].twists.size(); ++j) {
      const Vec6 va = a[f].twists[j].to_vector();
      CHECK((va - b[f].twists[j].to_vector()).norm() == 0.0);
      CHECK((va - c[f].twists[j].to_vector()).norm() == 0.0);
    }
  }
}

}  // TEST_SUITE
