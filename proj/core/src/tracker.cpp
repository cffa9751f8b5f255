#include "liepose/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "liepose/errors.hpp"
#include "liepose/parallel.hpp"

namespace liepose {

namespace {

constexpr std::uint64_t kTagSelect = 0xD1;
constexpr std::uint64_t kTagPropagate = 0xD2;

constexpr double kSqrt2Pi = 2.506628274631000502;

bool exactly_zero(const Vec6& v) { return (v.array() == 0.0).all(); }

}  // namespace

Mat6 default_base_covariance() {
  Mat6 c = Mat6::Zero();
  c.diagonal() << 0.05 * 0.05, 0.05 * 0.05, 0.05 * 0.05, 25.0, 25.0, 25.0;
  return c;
}

ParticleSet init_particles(const Pose& pose, int count) {
  if (count < 1) {
    throw InvalidArgument("a particle set needs at least one particle");
  }
  ParticleSet set;
  set.particles.assign(static_cast<std::size_t>(count),
                       Particle{pose, 1.0 / static_cast<double>(count)});
  return set;
}

std::vector<int> resample_cdf(const std::vector<double>& weights, int count, RngStream& rng) {
  if (weights.empty()) {
    throw InvalidArgument("resampling needs a nonempty weight vector");
  }
  if (count < 0) {
    throw InvalidArgument("resampling count must be nonnegative");
  }
  std::vector<double> cdf(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    cdf[i] = acc;
  }
  const int last = static_cast<int>(weights.size()) - 1;
  std::vector<int> picks(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double u = rng.uniform();
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    picks[static_cast<std::size_t>(k)] =
        std::min(static_cast<int>(it - cdf.begin()), last);
  }
  return picks;
}

double weigh(double metric_score, double sigma) {
  if (!(sigma > 0.0)) {
    throw InvalidArgument("measurement sigma must be positive");
  }
  return std::exp(-metric_score * metric_score / (2.0 * sigma * sigma)) / (kSqrt2Pi * sigma);
}

TrackStepResult track_step(const ParticleSet& prev, const DepthImage& image,
                           const ModelBundle& bundle, const TrackerConfig& config,
                           std::uint64_t seed, TrackStats* stats) {
  if (prev.particles.empty()) {
    throw InvalidArgument("track_step needs a nonempty particle set");
  }
  if (config.particle_count < 1) {
    throw InvalidArgument("track_step needs particle_count >= 1");
  }
  double weight_sum = 0.0;
  for (const Particle& p : prev.particles) weight_sum += p.weight;
  if (std::abs(weight_sum - 1.0) > 1e-6) {
    throw InvalidArgument("track_step expects normalized input weights");
  }

  const Cascade& cascade = bundle.cascade;
  const SkeletalModel& model = cascade.model;
  const DepthCrop crop(image);
  const int count = config.particle_count;
  const BrownianParams& brownian = config.measurement.brownian;
  const double noise_scale = std::sqrt(brownian.delta);

  // Select.
  std::vector<double> weights(prev.particles.size());
  for (std::size_t i = 0; i < prev.particles.size(); ++i) weights[i] = prev.particles[i].weight;
  RngStream select_rng(substream(seed, kTagSelect, static_cast<std::uint64_t>(prev.timestep)));
  const std::vector<int> picks = resample_cdf(weights, count, select_rng);

  // Propagate + per-particle metric scores. Each particle owns a substream
  // keyed by (timestep, slot), so thread count cannot change the result.
  std::vector<Particle> particles(static_cast<std::size_t>(count));
  std::vector<JointPositions> positions(static_cast<std::size_t>(count));
  std::vector<double> scores(static_cast<std::size_t>(count));
  std::vector<std::uint32_t> skip_counts(static_cast<std::size_t>(count), 0);
  parallel_for(count, config.threads, [&](int i) {
    const auto slot = static_cast<std::size_t>(i);
    Pose pose = prev.particles[static_cast<std::size_t>(picks[slot])].pose;
    RngStream rng(substream(seed, kTagPropagate, static_cast<std::uint64_t>(prev.timestep),
                            static_cast<std::uint64_t>(i)));
    const Vec6 noise =
        noise_scale * sample_twist_noise(brownian.covariance, rng).to_vector();
    // A bitwise-zero perturbation (zero covariance) leaves the base twist
    // untouched rather than taking a log-exp round trip through the group.
    if (!exactly_zero(noise)) {
      if (!compose_joint_update(model, 0, noise, &pose)) {
        ++skip_counts[slot];
      }
    }
    // The base joint is carried by the diffusion alone; the cascade only
    // re-infers the remaining joints conditioned on the propagated base.
    // Resampling against the metric score is what keeps the base honest,
    // which is why the diffusion covariance should be matched to the actual
    // inter-frame motion rather than left generously wide.
    skip_counts[slot] += static_cast<std::uint32_t>(
        refine_pose(crop, cascade, &pose, config.rounds, /*skip_base=*/true));
    const FkResult fk = forward_kinematics(model, pose);
    scores[slot] = score_pose(crop, cascade.camera, bundle.metric, fk);
    particles[slot].pose = std::move(pose);
    positions[slot] = std::move(fk.positions);
  });

  TrackStats local;
  for (std::uint32_t c : skip_counts) local.branch_cut_skips += c;

  // Measure.
  double total = 0.0;
  for (int i = 0; i < count; ++i) {
    const double w = weigh(scores[static_cast<std::size_t>(i)], config.measurement.sigma);
    particles[static_cast<std::size_t>(i)].weight = w;
    total += w;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    const double uniform = 1.0 / static_cast<double>(count);
    for (Particle& p : particles) p.weight = uniform;
    ++local.degenerate_weight_events;
  } else {
    for (Particle& p : particles) p.weight /= total;
  }

  // Estimate. Joint positions and scalar state average linearly under the
  // weights; the base rotation takes one weighted log step around the
  // highest-weight particle so the average stays on the group.
  const int joint_count = model.joint_count();
  TrackEstimate estimate;
  estimate.positions.assign(static_cast<std::size_t>(joint_count), Vec3::Zero());
  estimate.predicted_error = 0.0;
  for (int i = 0; i < count; ++i) {
    const auto slot = static_cast<std::size_t>(i);
    const double w = particles[slot].weight;
    for (int j = 0; j < joint_count; ++j) {
      estimate.positions[static_cast<std::size_t>(j)] +=
          w * positions[slot][static_cast<std::size_t>(j)];
    }
    estimate.predicted_error += w * scores[slot];
  }

  int ref = 0;
  for (int i = 1; i < count; ++i) {
    if (particles[static_cast<std::size_t>(i)].weight >
        particles[static_cast<std::size_t>(ref)].weight) {
      ref = i;
    }
  }
  const Particle& reference = particles[static_cast<std::size_t>(ref)];

  Pose mean_pose = reference.pose;
  mean_pose.scale = 0.0;
  for (TwistVector& t : mean_pose.twists) t = TwistVector();
  const Mat3 ref_rotation = exp_so3(reference.pose.twists[0].omega);
  Vec3 log_mean = Vec3::Zero();
  Vec3 translation_mean = Vec3::Zero();
  bool karcher_ok = true;
  for (int i = 0; i < count && karcher_ok; ++i) {
    const auto slot = static_cast<std::size_t>(i);
    const Particle& p = particles[slot];
    const RigidTransform base = exp_se3(p.pose.twists[0]);
    translation_mean += p.weight * base.t;
    try {
      log_mean += p.weight * log_so3(ref_rotation.transpose() * base.R);
    } catch (const AngleNearPi&) {
      karcher_ok = false;
    }
    mean_pose.scale += p.weight * p.pose.scale;
    for (int j = 1; j < joint_count; ++j) {
      const auto js = static_cast<std::size_t>(j);
      mean_pose.twists[js] = mean_pose.twists[js] + p.pose.twists[js] * p.weight;
    }
  }
  if (karcher_ok) {
    const Mat3 averaged = ref_rotation * exp_so3(log_mean);
    try {
      const Vec3 omega = log_so3(averaged);
      mean_pose.twists[0] =
          TwistVector(omega, se3_translation_factor_inverse(omega) * translation_mean);
    } catch (const AngleNearPi&) {
      karcher_ok = false;
    }
  }
  if (!karcher_ok) {
    // Pose averaging hit the log branch cut; fall back to the reference
    // particle's base (the positions output is unaffected).
    mean_pose = reference.pose;
    mean_pose.scale = 0.0;
    for (int i = 0; i < count; ++i) {
      const auto slot = static_cast<std::size_t>(i);
      mean_pose.scale += particles[slot].weight * particles[slot].pose.scale;
      for (int j = 1; j < joint_count; ++j) {
        const auto js = static_cast<std::size_t>(j);
        if (i == 0) mean_pose.twists[js] = TwistVector();
        mean_pose.twists[js] =
            mean_pose.twists[js] + particles[slot].pose.twists[js] * particles[slot].weight;
      }
    }
    ++local.base_log_fallbacks;
  }
  estimate.pose = std::move(mean_pose);

  if (stats != nullptr) {
    stats->degenerate_weight_events += local.degenerate_weight_events;
    stats->base_log_fallbacks += local.base_log_fallbacks;
    stats->branch_cut_skips += local.branch_cut_skips;
  }

  TrackStepResult out;
  out.estimate = std::move(estimate);
  out.next.particles = std::move(particles);
  out.next.timestep = prev.timestep + 1;
  return out;
}

}  // namespace liepose
