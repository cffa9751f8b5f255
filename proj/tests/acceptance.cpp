// Acceptance harness: ten numbered end-to-end checks, one [PASS]/[FAIL] line
// each. Exits nonzero when any check fails. The heavyweight estimator built
// for check 5 is reused by checks 6, 7, and 9.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "liepose/action.hpp"
#include "liepose/dataset.hpp"
#include "liepose/errors.hpp"
#include "liepose/forest.hpp"
#include "liepose/io_util.hpp"
#include "liepose/lie.hpp"
#include "liepose/pose_estimation.hpp"
#include "liepose/render.hpp"
#include "liepose/rng.hpp"
#include "liepose/skeleton.hpp"
#include "liepose/tracker.hpp"

using namespace liepose;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(const Clock::time_point& start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return std::string(buf);
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

template <typename Fn>
void run_criterion(int n, Fn&& fn) {
  try {
    const Outcome outcome = fn();
    std::printf("[%s] criterion %d: %s\n", outcome.pass ? "PASS" : "FAIL", n,
                outcome.detail.c_str());
    if (!outcome.pass) ++g_failures;
  } catch (const std::exception& e) {
    std::printf("[FAIL] criterion %d: unexpected exception: %s\n", n, e.what());
    ++g_failures;
  }
  std::fflush(stdout);
}

const std::string kScratch = "acceptance_scratch";

std::string scratch_path(const std::string& name) { return kScratch + "/" + name; }

// ---------------------------------------------------------------------------
// Numeric helpers

/// Truncated power series for the matrix exponential (independent oracle).
template <typename Mat>
Mat series_exp(const Mat& a, int terms = 50) {
  Mat sum = Mat::Identity();
  Mat term = Mat::Identity();
  for (int k = 1; k <= terms; ++k) {
    term = (term * a / static_cast<double>(k)).eval();
    sum += term;
  }
  return sum;
}

TwistVector random_twist(RngStream& rng, double max_angle, double nu_range) {
  Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  while (axis.norm() < 1e-9) axis = Vec3(rng.normal(), rng.normal(), rng.normal());
  axis.normalize();
  const double angle = rng.uniform(0.0, max_angle);
  const Vec3 nu(rng.uniform(-nu_range, nu_range), rng.uniform(-nu_range, nu_range),
                rng.uniform(-nu_range, nu_range));
  return TwistVector{axis * angle, nu};
}

RigidTransform random_transform(RngStream& rng) {
  return exp_se3(random_twist(rng, kPi - 0.05, 300.0));
}

/// Average ranks (ties share the mean of their positions, 1-based).
std::vector<double> average_ranks(const std::vector<double>& values) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - ma;
    const double db = rb[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  return cov / std::sqrt(va * vb);
}

/// Exhaustive split scan mirroring the trainer's documented tie rule and gain
/// arithmetic (first maximizer wins; features outer, thresholds inner).
SplitChoice oracle_split(const TrainingLabels& labels, ForestKind kind, EnergyMode mode,
                         const std::vector<int>& node_examples,
                         const std::vector<std::vector<double>>& values, int threshold_count) {
  SplitChoice best;
  const size_t n = node_examples.size();
  if (n == 0) return best;
  const double energy_all = node_energy(labels, kind, mode, node_examples);
  const double total = static_cast<double>(n);
  for (size_t f = 0; f < values.size(); ++f) {
    const double lo = *std::min_element(values[f].begin(), values[f].end());
    const double hi = *std::max_element(values[f].begin(), values[f].end());
    if (!(hi > lo)) continue;
    for (double eps : split_thresholds(lo, hi, threshold_count)) {
      std::vector<int> left, right;
      for (size_t i = 0; i < n; ++i) {
        (values[f][i] > eps ? left : right).push_back(node_examples[i]);
      }
      if (left.empty() || right.empty()) continue;
      const double gain =
          energy_all -
          (static_cast<double>(left.size()) / total) * node_energy(labels, kind, mode, left) -
          (static_cast<double>(right.size()) / total) * node_energy(labels, kind, mode, right);
      if (!best.valid || gain > best.gain) {
        best.valid = true;
        best.feature = static_cast<int>(f);
        best.threshold = eps;
        best.gain = gain;
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Shared estimator artifacts (built by criterion 5)

struct FishArtifacts {
  SkeletalModel model;
  CameraModel camera;
  DatasetConfig data;
  ModelBundle bundle;
  // Per test image, in image order:
  std::vector<std::vector<double>> candidate_predicted;  // metric scores
  std::vector<std::vector<double>> candidate_true;       // true mean joint errors
  std::vector<int> chosen_index;

  FishArtifacts(SkeletalModel m, DatasetConfig d, ModelBundle b)
      : model(std::move(m)), data(d), bundle(std::move(b)) {}
};

std::optional<FishArtifacts> g_fish;

// ---------------------------------------------------------------------------
// Criteria

Outcome criterion1() {
  const auto start = Clock::now();
  RngStream rng(1001);
  double worst_so3 = 0.0, worst_se3 = 0.0, worst_rt_so3 = 0.0, worst_rt_se3 = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const TwistVector xi = random_twist(rng, kPi - 0.01, 100.0);

    const Mat3 R = exp_so3(xi.omega);
    const Mat3 R_series = series_exp<Mat3>(hat_so3(xi.omega));
    worst_so3 = std::max(worst_so3, (R - R_series).cwiseAbs().maxCoeff());

    const RigidTransform g = exp_se3(xi);
    const Mat4 G_series = series_exp<Mat4>(hat_se3(xi));
    worst_se3 = std::max(worst_se3, (g.matrix() - G_series).cwiseAbs().maxCoeff());

    const Vec3 omega_back = log_so3(R);
    worst_rt_so3 = std::max(worst_rt_so3, (omega_back - xi.omega).cwiseAbs().maxCoeff());
    const TwistVector xi_back = log_se3(g);
    worst_rt_se3 =
        std::max(worst_rt_se3, (xi_back.to_vector() - xi.to_vector()).cwiseAbs().maxCoeff());
  }
  const double elapsed = seconds_since(start);
  const bool pass = worst_so3 <= 1e-10 && worst_se3 <= 1e-10 && worst_rt_so3 <= 1e-8 &&
                    worst_rt_se3 <= 1e-8 && elapsed < 10.0;
  return {pass,
          format("exp vs 50-term series: so3 %.2e, se3 %.2e (<=1e-10); log roundtrip %.2e / %.2e "
                 "(<=1e-8); %d twists in %.2fs (<10s)",
                 worst_so3, worst_se3, worst_rt_so3, worst_rt_se3, n, elapsed)};
}

Outcome criterion2() {
  RngStream rng(2001);
  double worst = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const RigidTransform g = random_transform(rng);
    const TwistVector xi = random_twist(rng, kPi - 0.01, 100.0);
    const RigidTransform lhs = exp_se3(adjoint(g, xi));
    const RigidTransform rhs = g * exp_se3(xi) * g.inverse();
    worst = std::max(worst, (lhs.matrix() - rhs.matrix()).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-8,
          format("exp(Ad_g xi) vs g exp(xi) g^-1: max deviation %.2e over %d pairs (<=1e-8)",
                 worst, n)};
}

Outcome criterion3() {
  const double delta = 0.5;
  const double sigma2 = 4e-4;
  BrownianParams params;
  params.delta = delta;
  params.covariance = sigma2 * Mat6::Identity();

  // Empirical covariance of walk increments.
  RngStream rng(3001);
  RigidTransform g = random_transform(rng);
  Mat6 acc = Mat6::Zero();
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const TwistVector noise = sample_twist_noise(params.covariance, rng);
    const RigidTransform next = brownian_step(g, params, noise);
    const Vec6 inc = log_se3(g.inverse() * next).to_vector();
    acc += inc * inc.transpose();
    g = next;
  }
  const Mat6 cov = acc / static_cast<double>(n);
  const double target = delta * sigma2;
  double worst_rel = 0.0;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      const double want = (r == c) ? target : 0.0;
      worst_rel = std::max(worst_rel, std::abs(cov(r, c) - want) / target);
    }
  }

  // Left invariance, bit for bit, under shared noise streams.
  bool exact = true;
  for (int i = 0; i < 1000 && exact; ++i) {
    const std::uint64_t stream_seed = substream(3002, static_cast<std::uint64_t>(i));
    RngStream stream_a(stream_seed);
    RngStream stream_b(stream_seed);
    const RigidTransform base = random_transform(rng);
    const RigidTransform direct =
        brownian_step(base, params, sample_twist_noise(params.covariance, stream_a));
    const RigidTransform factored =
        base * brownian_step(RigidTransform::Identity(), params,
                             sample_twist_noise(params.covariance, stream_b));
    exact = (direct.R - factored.R).cwiseAbs().maxCoeff() == 0.0 &&
            (direct.t - factored.t).cwiseAbs().maxCoeff() == 0.0;
  }

  const bool pass = worst_rel <= 0.05 && exact;
  return {pass,
          format("increment covariance vs delta*sigma^2*I: max deviation %.2f%% over %d steps "
                 "(<=5%%); left-invariance bit-exact: %s",
                 100.0 * worst_rel, n, exact ? "yes" : "NO")};
}

Outcome criterion4() {
  RngStream rng(4001);
  int mismatches = 0;
  const int trials = 500;
  for (int trial = 0; trial < trials; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(31));         // <= 32 examples
    const int feature_count = 1 + static_cast<int>(rng.uniform_index(8));  // <= 8 features
    const int threshold_count = 1 + static_cast<int>(rng.uniform_index(8));  // <= 8 thresholds
    const ForestKind kind = static_cast<ForestKind>(trial % 3);
    const EnergyMode mode = (trial % 2 == 0) ? EnergyMode::Variance : EnergyMode::Literal;

    TrainingLabels labels;
    labels.class_count = 3;
    std::vector<int> node_examples;
    for (int i = 0; i < n; ++i) {
      node_examples.push_back(i);
      Vec6 t;
      for (int k = 0; k < 6; ++k) t[k] = rng.uniform(-2.0, 2.0);
      labels.twists.push_back(t);
      labels.scalars.push_back(rng.uniform(0.0, 30.0));
      labels.classes.push_back(static_cast<int>(rng.uniform_index(3)));
    }
    std::vector<std::vector<double>> values(static_cast<size_t>(feature_count));
    for (auto& row : values) {
      row.resize(static_cast<size_t>(n));
      const bool constant = rng.uniform() < 0.1;
      const double base = rng.uniform(-5.0, 5.0);
      for (double& v : row) v = constant ? base : rng.uniform(-5.0, 5.0);
    }

    const SplitChoice got =
        choose_split(labels, kind, mode, node_examples, values, threshold_count);
    const SplitChoice want =
        oracle_split(labels, kind, mode, node_examples, values, threshold_count);
    const bool same = got.valid == want.valid &&
                      (!want.valid || (got.feature == want.feature &&
                                       got.threshold == want.threshold && got.gain == want.gain));
    if (!same) ++mismatches;
  }
  return {mismatches == 0,
          format("%d random nodes: trained split equals the exhaustive gain maximizer "
                 "(exact equality) with %d mismatch(es)",
                 trials, mismatches)};
}

Outcome criterion5() {
  const auto start = Clock::now();
  SkeletalModel model = SkeletalModel::preset("fish");
  const CameraModel camera;
  DatasetConfig dc = DatasetConfig::preset_config("fish");
  dc.count = 2000;

  const std::vector<TrainingItem> items = generate_training_items(model, camera, dc, 50001);

  // Desk-scale rescaling of the fish preset: smaller per-node candidate pools
  // keep single-core training in budget; larger leaves keep late-round
  // corrections low-variance so refinement stays stable once converged.
  CascadeConfig cc = CascadeConfig::preset("fish");
  cc.rounds = 7;
  cc.train_inits = 3;
  cc.ik_forest.tree_count = 3;
  cc.ik_forest.max_depth = 12;
  cc.ik_forest.candidate_count = 192;
  cc.ik_forest.threshold_count = 8;
  cc.ik_forest.min_leaf = 20;
  cc.metric_forest.tree_count = 16;
  cc.metric_forest.max_depth = 16;
  cc.metric_forest.candidate_count = 512;
  cc.metric_forest.threshold_count = 12;
  cc.metric_perturbations = 16;
  ModelBundle bundle = train_bundle(model, camera, cc, items, 50002);
  const double train_seconds = seconds_since(start);

  const int test_count = 200;
  const int kt = 40;
  double err_sum = 0.0;
  double init_sum = 0.0;
  std::vector<double> round_curve(static_cast<size_t>(cc.rounds) + 1, 0.0);

  FishArtifacts artifacts(model, dc, std::move(bundle));
  for (int i = 0; i < test_count; ++i) {
    const GeneratedItem item = generate_item(model, camera, dc, 50003, i);
    const JointPositions truth = forward_kinematics(model, item.pose).positions;
    const PreprocessResult pre = preprocess(item.image, camera);

    // Mean hypothesis error before any refinement.
    InitialPoseConfig init_config;
    init_config.count = kt;
    RngStream init_rng(substream(50004, static_cast<std::uint64_t>(i)));
    double image_init_sum = 0.0;
    const std::vector<Pose> inits = generate_initial_poses(model, pre, init_config, init_rng);
    for (const Pose& p : inits) {
      image_init_sum += average_joint_error(forward_kinematics(model, p).positions, truth);
    }
    init_sum += image_init_sum / static_cast<double>(inits.size());

    // Aggregate error as a function of the round budget, measured at the real
    // operating point (all hypotheses refined r rounds, metric-selected).
    // The same per-image seed reuses identical hypotheses at every budget;
    // the full-budget pass also feeds criterion 6.
    const std::uint64_t est_seed = substream(50005, static_cast<std::uint64_t>(i));
    for (int r = 0; r <= cc.rounds; ++r) {
      std::vector<CandidateResult> candidates;
      const bool full = r == cc.rounds;
      const PoseEstimate est =
          estimate(item.image, artifacts.bundle, est_seed, kt, r, full ? &candidates : nullptr);
      const double err = average_joint_error(est.positions, truth);
      round_curve[static_cast<size_t>(r)] += err;
      if (!full) continue;

      err_sum += err;
      std::vector<double> predicted, actual;
      predicted.reserve(candidates.size());
      actual.reserve(candidates.size());
      for (const CandidateResult& cand : candidates) {
        predicted.push_back(cand.predicted_error);
        actual.push_back(average_joint_error(cand.positions, truth));
      }
      artifacts.candidate_predicted.push_back(std::move(predicted));
      artifacts.candidate_true.push_back(std::move(actual));
      artifacts.chosen_index.push_back(est.chosen_index);
    }
  }

  const double mean_err = err_sum / test_count;
  const double mean_init = init_sum / test_count;
  for (double& v : round_curve) v /= test_count;
  const bool curve_ok =
      round_curve[static_cast<size_t>(cc.rounds)] <=
      round_curve[static_cast<size_t>(cc.rounds) - 1] + 1e-9;
  const double total_seconds = seconds_since(start);

  g_fish.emplace(std::move(artifacts));  // later criteria reuse the estimator
  const bool pass = mean_err < 2.0 && mean_err < 0.1 * mean_init && curve_ok &&
                    total_seconds < 1800.0;
  return {pass,
          format("fish 2000/%d: mean error %.3f mm (<2 mm; initial %.1f mm, ratio %.3f <0.1); "
                 "round curve %.2f -> %.2f -> %.2f mm over final rounds (non-increasing: %s); "
                 "train %.0fs, total %.0fs (<1800s)",
                 test_count, mean_err, mean_init, mean_err / mean_init,
                 round_curve[static_cast<size_t>(cc.rounds) - 2],
                 round_curve[static_cast<size_t>(cc.rounds) - 1],
                 round_curve[static_cast<size_t>(cc.rounds)], curve_ok ? "yes" : "NO",
                 train_seconds, total_seconds)};
}

Outcome criterion6() {
  if (!g_fish) return {false, "estimator from criterion 5 unavailable"};
  const FishArtifacts& fish = *g_fish;
  std::vector<double> predicted, actual;
  int wins = 0;
  const int images = static_cast<int>(fish.candidate_predicted.size());
  for (int i = 0; i < images; ++i) {
    const auto& pred = fish.candidate_predicted[static_cast<size_t>(i)];
    const auto& truth = fish.candidate_true[static_cast<size_t>(i)];
    predicted.insert(predicted.end(), pred.begin(), pred.end());
    actual.insert(actual.end(), truth.begin(), truth.end());
    const double chosen = truth[static_cast<size_t>(fish.chosen_index[static_cast<size_t>(i)])];
    const double mean =
        std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
    if (chosen < mean) ++wins;
  }
  const double rho = spearman(predicted, actual);
  const double win_rate = static_cast<double>(wins) / images;
  const bool pass = rho >= 0.8 && win_rate >= 0.75;
  return {pass,
          format("metric vs truth over %zu candidates: Spearman rho %.3f (>=0.8); selected "
                 "candidate beats the candidate mean on %.0f%% of images (>=75%%)",
                 predicted.size(), rho, 100.0 * win_rate)};
}

Outcome criterion7() {
  if (!g_fish) return {false, "estimator from criterion 5 unavailable"};
  const FishArtifacts& fish = *g_fish;
  const CameraModel& camera = fish.bundle.cascade.camera;

  DatasetConfig dc = fish.data;
  dc.noise_mm = 2.0;
  SequenceMotionConfig motion;
  motion.frames = 100;

  // Deterministically scan for a motion whose every frame renders.
  std::optional<PoseSequence> sequence;
  for (std::uint64_t attempt = 0; attempt < 64 && !sequence; ++attempt) {
    const PoseSequence candidate = generate_motion_sequence(fish.model, dc, motion, 70001 + attempt);
    try {
      for (int f = 0; f < motion.frames; ++f) {
        (void)render_sequence_frame(fish.model, camera, candidate.frames[static_cast<size_t>(f)].pose,
                                    dc.noise_mm, 70002, f);
      }
      sequence = candidate;
    } catch (const OffScreen&) {
    }
  }
  if (!sequence) return {false, "no fully renderable 100-frame motion found"};

  TrackerConfig config;
  config.particle_count = 200;
  // Candidate errors live in the low-millimetre range; the measurement
  // bandwidth has to sit on that scale for the likelihood to discriminate.
  config.measurement.sigma = 2.0;
  TrackerConfig zero_noise = config;
  zero_noise.particle_count = 20;
  zero_noise.measurement.brownian.covariance = Mat6::Zero();

  double tracker_sum = 0.0;
  double estimator_sum = 0.0;
  double worst_weight_gap = 0.0;
  double worst_zero_gap = 0.0;
  const int zero_frames = 5;

  ParticleSet particles;
  ParticleSet zero_particles;
  Pose zero_reference;
  for (int f = 0; f < motion.frames; ++f) {
    const Pose& truth_pose = sequence->frames[static_cast<size_t>(f)].pose;
    const DepthImage image =
        render_sequence_frame(fish.model, camera, truth_pose, dc.noise_mm, 70002, f);
    const JointPositions truth = forward_kinematics(fish.model, truth_pose).positions;

    const PoseEstimate est =
        estimate(image, fish.bundle, substream(70003, static_cast<std::uint64_t>(f)), 40);
    estimator_sum += average_joint_error(est.positions, truth);

    if (f == 0) {
      tracker_sum += average_joint_error(est.positions, truth);
      particles = init_particles(est.pose, config.particle_count);
      zero_particles = init_particles(est.pose, zero_noise.particle_count);
      zero_reference = est.pose;
      continue;
    }

    const TrackStepResult step = track_step(particles, image, fish.bundle, config, 70004);
    tracker_sum += average_joint_error(step.estimate.positions, truth);
    double weight_sum = 0.0;
    for (const Particle& p : step.next.particles) weight_sum += p.weight;
    worst_weight_gap = std::max(worst_weight_gap, std::abs(weight_sum - 1.0));
    particles = step.next;

    if (f < zero_frames) {
      // With zero process noise every particle repeats the same deterministic
      // full cascade refinement of the previous pose.
      const TrackStepResult zero_step =
          track_step(zero_particles, image, fish.bundle, zero_noise, 70005);
      const DepthCrop crop(image);
      refine_pose(crop, fish.bundle.cascade, &zero_reference, -1, /*skip_base=*/true);
      const JointPositions reference =
          forward_kinematics(fish.model, zero_reference).positions;
      for (size_t j = 0; j < reference.size(); ++j) {
        worst_zero_gap = std::max(
            worst_zero_gap,
            (zero_step.estimate.positions[j] - reference[j]).norm());
      }
      zero_particles = zero_step.next;
    }
  }

  const double tracker_mean = tracker_sum / motion.frames;
  const double estimator_mean = estimator_sum / motion.frames;
  const bool pass = tracker_mean < estimator_mean && worst_weight_gap <= 1e-9 &&
                    worst_zero_gap <= 1e-6;
  return {pass,
          format("100 noisy frames: tracker mean %.3f mm vs per-frame %.3f mm (must be lower); "
                 "max |sum(w)-1| %.1e (<=1e-9); zero-noise tracker vs direct refinement "
                 "%.1e mm (<=1e-6)",
                 tracker_mean, estimator_mean, worst_weight_gap, worst_zero_gap)};
}

Outcome criterion8() {
  const SkeletalModel model = SkeletalModel::preset("fish");
  const DatasetConfig dc = DatasetConfig::preset_config("fish");
  const ActionDatasetConfig actions;

  std::vector<PoseSequence> train_set, test_set;
  for (int i = 0; i < 200; ++i) {
    train_set.push_back(generate_action_sequence(model, dc, actions, 80001, i));
  }
  for (int i = 0; i < 100; ++i) {
    test_set.push_back(generate_action_sequence(model, dc, actions, 80002, i));
  }
  const std::vector<std::string> catalogue = synthetic_action_catalogue();

  ActionTrainConfig tangent_config;
  ActionTrainConfig position_config;
  position_config.mode = FeatureMode::JointPosition;
  const ActionModel tangent = train_action(model, train_set, catalogue, tangent_config, 80003);
  const ActionModel positions = train_action(model, train_set, catalogue, position_config, 80003);

  int tangent_correct = 0, position_correct = 0;
  for (const PoseSequence& seq : test_set) {
    if (classify_sequence(tangent, seq) == seq.label) ++tangent_correct;
    if (classify_sequence(positions, seq) == seq.label) ++position_correct;
  }
  const double tangent_acc = tangent_correct / 100.0;
  const double position_acc = position_correct / 100.0;
  const int compact_dim = feature_dimension(model, FeatureMode::Tangent, true);

  const bool pass = tangent_acc >= position_acc + 0.05 && compact_dim == 252;
  return {pass,
          format("4-class 200/100: tangent accuracy %.0f%% vs joint-position %.0f%% "
                 "(margin >=5 points); compact feature length %d (==252)",
                 100.0 * tangent_acc, 100.0 * position_acc, compact_dim)};
}

Outcome criterion9() {
  if (!g_fish) return {false, "estimator from criterion 5 unavailable"};
  const std::string dir = scratch_path("bench");
  std::filesystem::create_directories(dir);
  const std::string bundle_path = dir + "/fish.lpb";
  save_bundle(g_fish->bundle, bundle_path);

  const std::string csv_path = dir + "/bench.csv";
  const std::string command = std::string(LIEPOSE_CLI_PATH) + " bench --model " + bundle_path +
                              " --kt 40 --rounds 7 --frames 50 --seed 90001 --threads 1 --out " +
                              csv_path + " > " + dir + "/out.txt 2> " + dir + "/err.txt";
  const int status = std::system(command.c_str());
  const int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (exit_code != 0) {
    return {false, format("bench subcommand exited %d", exit_code)};
  }
  const std::string csv = read_text_file(csv_path);
  const size_t at = csv.find("fps,");
  if (at == std::string::npos) {
    return {false, "bench report lacks an fps row"};
  }
  const double fps = std::atof(csv.c_str() + at + 4);
  return {fps >= 20.0,
          format("single-thread fish estimation via bench (K_t=40, 7 rounds, 50 frames): "
                 "%.1f FPS (>=20)",
                 fps)};
}

int run_cli(const std::string& args, const std::string& log_tag) {
  const std::string log_dir = scratch_path("cli_logs");
  std::filesystem::create_directories(log_dir);
  const std::string command = std::string(LIEPOSE_CLI_PATH) + " " + args + " > " + log_dir + "/" +
                              log_tag + ".out 2> " + log_dir + "/" + log_tag + ".err";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// The whole toolchain at miniature scale, entirely through the CLI.
bool run_pipeline(const std::string& root, const std::string& tag) {
  std::filesystem::create_directories(root);
  const std::vector<std::string> commands = {
      "synth-gen --preset mouse --kind pose --count 4 --seed 201 --out " + root + "/pose",
      "train-pose --in " + root + "/pose --out " + root + "/model.lpb --seed 202 --rounds 1 --kt 2",
      "estimate --in " + root + "/pose --model " + root + "/model.lpb --out " + root +
          "/est --seed 203 --kt 2",
      "eval --in " + root + "/pose --poses " + root + "/est/poses.jsonl --out " + root + "/eval",
      "synth-gen --preset mouse --kind sequence --count 3 --seed 204 --out " + root + "/seq",
      "track --in " + root + "/seq --model " + root + "/model.lpb --out " + root +
          "/track --seed 205 --kr 5 --kt 2 --rounds 1",
      "synth-gen --preset mouse --kind action --count 8 --seed 206 --out " + root + "/act",
      "train-action --in " + root + "/act --out " + root + "/action.lxa --seed 207",
      "recognize --in " + root + "/act --model " + root + "/action.lxa --out " + root + "/rec",
  };
  for (size_t i = 0; i < commands.size(); ++i) {
    if (run_cli(commands[i], tag + "_" + std::to_string(i)) != 0) return false;
  }
  return true;
}

Outcome criterion10() {
  const std::string root_a = scratch_path("repro_a");
  const std::string root_b = scratch_path("repro_b");
  if (!run_pipeline(root_a, "repro_a")) return {false, "first pipeline run failed"};
  if (!run_pipeline(root_b, "repro_b")) return {false, "second pipeline run failed"};

  const auto list_files = [](const std::string& root) {
    std::vector<std::string> relative;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
      if (entry.is_regular_file()) {
        relative.push_back(std::filesystem::relative(entry.path(), root).string());
      }
    }
    std::sort(relative.begin(), relative.end());
    return relative;
  };
  const std::vector<std::string> relative = list_files(root_a);
  if (list_files(root_b) != relative) {
    return {false, "reruns produced different file sets"};
  }
  size_t compared = 0;
  for (const std::string& name : relative) {
    if (read_file(root_a + "/" + name) != read_file(root_b + "/" + name)) {
      return {false, format("reruns differ at %s", name.c_str())};
    }
    ++compared;
  }
  return {compared > 0,
          format("full pipeline rerun: %zu files (datasets, models, estimates, tracks, "
                 "recognitions, reports) byte-identical",
                 compared)};
}

}  // namespace

int main() {
  std::filesystem::remove_all(kScratch);
  std::filesystem::create_directories(kScratch);

  run_criterion(1, criterion1);
  run_criterion(2, criterion2);
  run_criterion(3, criterion3);
  run_criterion(4, criterion4);
  run_criterion(5, criterion5);
  run_criterion(6, criterion6);
  run_criterion(7, criterion7);
  run_criterion(8, criterion8);
  run_criterion(9, criterion9);
  run_criterion(10, criterion10);

  if (g_failures == 0) {
    std::printf("all 10 acceptance checks passed\n");
    return 0;
  }
  std::printf("%d acceptance check(s) failed\n", g_failures);
  return 1;
}
