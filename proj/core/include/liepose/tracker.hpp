#pragma once

#include <cstdint>
#include <vector>

#include "liepose/depth_image.hpp"
#include "liepose/lie.hpp"
#include "liepose/pose_estimation.hpp"
#include "liepose/rng.hpp"
#include "liepose/skeleton.hpp"

namespace liepose {

/// Per-frame base motion prior: the base joint diffuses on the group under
/// this covariance (rad^2 / mm^2 diagonal blocks), sized for smooth subject
/// motion at ordinary frame rates.
Mat6 default_base_covariance();

/// Measurement model of the filter: metric scores are mapped to weights by a
/// Gaussian of width `sigma` (mm), and the base joint is propagated by
/// Brownian motion with the given parameters.
struct MeasurementConfig {
  double sigma = 10.0;
  BrownianParams brownian{1.0, default_base_covariance()};
};

struct TrackerConfig {
  int particle_count = 200;  // K_r
  MeasurementConfig measurement;
  int rounds = -1;   // cascade rounds per propagation; < 0 runs all trained rounds
  int threads = 1;   // particle-level parallelism (results identical regardless)
};

struct Particle {
  Pose pose;
  double weight = 0.0;
};

/// Weighted hypothesis set approximating the tracking posterior; weights sum
/// to 1 after every measurement step.
struct ParticleSet {
  std::vector<Particle> particles;
  int timestep = 0;
};

/// Incident counters kept across track_step calls (never exceptions: the
/// filter stays live and reports what it had to work around).
struct TrackStats {
  std::uint64_t degenerate_weight_events = 0;  // all-zero weights, uniform fallback
  std::uint64_t base_log_fallbacks = 0;        // pose averaging hit the log branch cut
  std::uint64_t branch_cut_skips = 0;          // propagation corrections skipped
};

/// Tracker output for one frame. `positions` is the weight-averaged particle
/// position set (a per-joint convex combination); `pose` is a group-valued
/// representative — base rotation averaged by one weighted log step around
/// the highest-weight particle, everything else averaged linearly — so its
/// forward kinematics approximates but need not equal `positions`.
struct TrackEstimate {
  Pose pose;
  JointPositions positions;
  double predicted_error = 0.0;  // weight-averaged metric score, mm
};

struct TrackStepResult {
  TrackEstimate estimate;
  ParticleSet next;
};

/// Uniform-weight particle set replicating one pose (used to start a track
/// from a single-frame estimate).
ParticleSet init_particles(const Pose& pose, int count);

/// Inverse-CDF resampling: `count` independent uniform draws located in the
/// cumulative weight distribution. Expected multiplicity of index i is
/// count * weights[i]. Weights must be normalized.
std::vector<int> resample_cdf(const std::vector<double>& weights, int count, RngStream& rng);

/// Unnormalized Gaussian measurement weight of a metric score m:
///   (1 / (sqrt(2 pi) sigma)) * exp(-m^2 / (2 sigma^2)).
/// Throws InvalidArgument unless sigma > 0.
double weigh(double metric_score, double sigma);

/// One select-propagate-measure-estimate cycle. Selection resamples the
/// previous weights; propagation perturbs each particle's base joint by
/// Brownian motion and re-infers the remaining joints through the cascade
/// conditioned on that propagated base;
/// measurement scores each particle with the learned metric and normalizes
/// (all-zero weight vectors fall back to uniform, counted in stats). The
/// returned set carries timestep prev.timestep + 1. Randomness is drawn from
/// substreams of `seed` keyed by the timestep, so a fixed seed reproduces a
/// whole track bit-exactly regardless of thread count.
TrackStepResult track_step(const ParticleSet& prev, const DepthImage& image,
                           const ModelBundle& bundle, const TrackerConfig& config,
                           std::uint64_t seed, TrackStats* stats = nullptr);

}  // namespace liepose
