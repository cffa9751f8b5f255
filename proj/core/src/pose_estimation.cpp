#include "liepose/pose_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "liepose/errors.hpp"
#include "liepose/features.hpp"
#include "liepose/io_util.hpp"
#include "liepose/parallel.hpp"
#include "liepose/rng.hpp"

namespace liepose {

namespace {

constexpr char kBundleMagic[4] = {'L', 'P', 'B', '1'};
constexpr std::uint32_t kBundleVersion = 1;

// Substream tags: every random decision in training/estimation hangs off the
// user seed through one of these, so runs are reproducible independent of
// thread count or call order.
constexpr std::uint64_t kTagTrainInit = 0xC1;
constexpr std::uint64_t kTagIkForest = 0xC2;
constexpr std::uint64_t kTagMetricPerturb = 0xC3;
constexpr std::uint64_t kTagMetricForest = 0xC4;
constexpr std::uint64_t kTagEstimate = 0xC5;

bool has_dof(const SkeletalModel& model, int joint) {
  for (bool b : model.joint(joint).dof_mask) {
    if (b) return true;
  }
  return false;
}

/// Everything a pose-indexed probe needs about one example: the image plus
/// the orientation and position of the joint the regressor is attached to.
struct ProbeContext {
  const DepthCrop* image = nullptr;
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();
};

class IkFeatureSpace final : public FeatureSpace {
 public:
  IkFeatureSpace(const CameraModel& camera, double halfwidth, std::vector<ProbeContext> contexts)
      : camera_(camera), halfwidth_(halfwidth), contexts_(std::move(contexts)) {}

  int example_count() const override { return static_cast<int>(contexts_.size()); }

  FeatureDesc sample(RngStream& rng) const override {
    FeatureDesc f;
    f.u = sample_cube_offset(halfwidth_, rng);
    f.v = sample_cube_offset(halfwidth_, rng);
    return f;
  }

  double evaluate(const FeatureDesc& f, int example) const override {
    const ProbeContext& c = contexts_[static_cast<std::size_t>(example)];
    return pose_indexed_feature(*c.image, camera_, c.rotation, c.position, f.u, f.v);
  }

 private:
  const CameraModel& camera_;
  double halfwidth_;
  std::vector<ProbeContext> contexts_;
};

/// One scored pose for metric training: probes may land on any joint, so the
/// whole frame set is kept.
struct MetricExample {
  const DepthCrop* image = nullptr;
  std::vector<Mat3> rotations;
  std::vector<Vec3> positions;
};

class MetricFeatureSpace final : public FeatureSpace {
 public:
  MetricFeatureSpace(const CameraModel& camera, double halfwidth, int joint_count,
                     std::vector<MetricExample> examples)
      : camera_(camera),
        halfwidth_(halfwidth),
        joint_count_(joint_count),
        examples_(std::move(examples)) {}

  int example_count() const override { return static_cast<int>(examples_.size()); }

  FeatureDesc sample(RngStream& rng) const override {
    FeatureDesc f;
    f.joint = static_cast<std::int32_t>(rng.uniform_index(static_cast<std::uint64_t>(joint_count_)));
    f.u = sample_cube_offset(halfwidth_, rng);
    f.v = sample_cube_offset(halfwidth_, rng);
    return f;
  }

  double evaluate(const FeatureDesc& f, int example) const override {
    const MetricExample& e = examples_[static_cast<std::size_t>(example)];
    const auto j = static_cast<std::size_t>(f.joint);
    return pose_indexed_feature(*e.image, camera_, e.rotations[j], e.positions[j], f.u, f.v);
  }

 private:
  const CameraModel& camera_;
  double halfwidth_;
  int joint_count_;
  std::vector<MetricExample> examples_;
};

void write_forest_config(ByteWriter& w, const ForestConfig& c) {
  w.u32(static_cast<std::uint32_t>(c.tree_count));
  w.u32(static_cast<std::uint32_t>(c.max_depth));
  w.u32(static_cast<std::uint32_t>(c.candidate_count));
  w.u32(static_cast<std::uint32_t>(c.threshold_count));
  w.u32(static_cast<std::uint32_t>(c.min_leaf));
  w.u8(static_cast<std::uint8_t>(c.energy));
  w.f64(c.bandwidth_omega);
  w.f64(c.bandwidth_nu);
}

ForestConfig read_forest_config(ByteReader& r) {
  ForestConfig c;
  c.tree_count = static_cast<int>(r.u32());
  c.max_depth = static_cast<int>(r.u32());
  c.candidate_count = static_cast<int>(r.u32());
  c.threshold_count = static_cast<int>(r.u32());
  c.min_leaf = static_cast<int>(r.u32());
  const std::uint8_t energy = r.u8();
  if (energy > 1) {
    throw CorruptStream("bundle: invalid energy mode");
  }
  c.energy = static_cast<EnergyMode>(energy);
  c.bandwidth_omega = r.f64();
  c.bandwidth_nu = r.f64();
  return c;
}

/// Validates that every split feature of a metric forest probes an existing
/// joint, so scoring never indexes out of range on untrusted files.
void check_metric_joints(const Forest& forest, int joint_count) {
  for (const Tree& tree : forest.trees) {
    for (const TreeNode& node : tree.nodes) {
      if (node.is_leaf) continue;
      if (node.feature.joint < 0 || node.feature.joint >= joint_count) {
        throw CorruptStream("bundle: metric feature joint out of range");
      }
    }
  }
}

}  // namespace

CascadeConfig CascadeConfig::preset(const std::string& name) {
  CascadeConfig c;
  if (name == "fish") {
    c.rounds = 7;
    c.init_count = 40;
    c.train_inits = 40;
    c.patch_halfwidth = 25.0;
    c.ik_forest.tree_count = 3;
    c.ik_forest.max_depth = 24;
    c.metric_forest.tree_count = 20;
    c.metric_forest.max_depth = 15;
  } else if (name == "mouse") {
    c.rounds = 3;
    c.init_count = 40;
    c.train_inits = 40;
    c.patch_halfwidth = 100.0;
    c.ik_forest.tree_count = 10;
    c.ik_forest.max_depth = 24;
    c.metric_forest.tree_count = 20;
    c.metric_forest.max_depth = 15;
  } else if (name == "hand") {
    c.rounds = 3;
    c.init_count = 20;
    c.train_inits = 20;
    c.patch_halfwidth = 100.0;
    c.ik_forest.tree_count = 10;
    c.ik_forest.max_depth = 24;
    c.metric_forest.tree_count = 20;
    c.metric_forest.max_depth = 20;
  } else {
    throw InvalidArgument("unknown cascade preset: " + name);
  }
  return c;
}

TrainingItem make_training_item(const DepthImage& image, const Pose& truth,
                                const CameraModel& camera) {
  const PreprocessResult pre = preprocess(image, camera);
  TrainingItem item{DepthCrop(image), truth, pre.centroid};
  return item;
}

std::vector<int> flatten_stage_order(const SkeletalModel& model) {
  const SubchainPlan plan = model.subchains_for_estimation();
  std::vector<int> order;
  for (const auto& stage : plan.stages) {
    order.insert(order.end(), stage.begin(), stage.end());
  }
  return order;
}

Cascade train_cascade(const SkeletalModel& model, const CameraModel& camera,
                      const CascadeConfig& config, const std::vector<TrainingItem>& items,
                      std::uint64_t seed) {
  if (items.empty()) {
    throw InvalidArgument("cascade training needs at least one item");
  }
  if (config.rounds < 1 || config.train_inits < 1) {
    throw InvalidArgument("cascade training needs rounds >= 1 and train_inits >= 1");
  }
  const int joint_count = model.joint_count();
  const int rounds = config.rounds;

  Cascade cascade(model, camera, config);
  cascade.stage_order = flatten_stage_order(model);
  cascade.regressors.assign(static_cast<std::size_t>(joint_count), {});

  std::vector<FkResult> truth_fk;
  truth_fk.reserve(items.size());
  for (const TrainingItem& item : items) {
    truth_fk.push_back(forward_kinematics(model, item.truth));
  }

  // Initial hypotheses, drawn exactly like test-time candidates but anchored
  // at the stored centroid; states evolve jointly with the regressors.
  struct TrainState {
    int item = 0;
    Pose pose;
    std::vector<RigidTransform> cumulative;  // valid for already-finished joints
  };
  std::vector<TrainState> states;
  states.reserve(items.size() * static_cast<std::size_t>(config.train_inits));
  InitialPoseConfig init_config;
  init_config.count = config.train_inits;
  for (std::size_t i = 0; i < items.size(); ++i) {
    PreprocessResult pre;
    pre.centroid = items[i].centroid;
    RngStream rng(substream(seed, kTagTrainInit, static_cast<std::uint64_t>(i)));
    std::vector<Pose> inits = generate_initial_poses(model, pre, init_config, rng);
    for (Pose& p : inits) {
      TrainState s;
      s.item = static_cast<int>(i);
      s.pose = std::move(p);
      s.cumulative.resize(static_cast<std::size_t>(joint_count));
      states.push_back(std::move(s));
    }
  }
  const int state_count = static_cast<int>(states.size());

  for (int j : cascade.stage_order) {
    const int parent = model.joint(j).parent;
    std::vector<Forest>& row = cascade.regressors[static_cast<std::size_t>(j)];
    row.reserve(static_cast<std::size_t>(rounds));

    const auto local_cumulative = [&](const TrainState& st) {
      const RigidTransform local = joint_local_transform(model, st.pose, j);
      return parent < 0 ? local : st.cumulative[static_cast<std::size_t>(parent)] * local;
    };

    if (!has_dof(model, j)) {
      for (int c = 0; c < rounds; ++c) {
        row.push_back(Forest::trivial_regressor());
      }
      parallel_for(state_count, config.threads, [&](int s) {
        TrainState& st = states[static_cast<std::size_t>(s)];
        st.cumulative[static_cast<std::size_t>(j)] = local_cumulative(st);
      });
      continue;
    }

    for (int c = 0; c < rounds; ++c) {
      std::vector<ProbeContext> contexts(static_cast<std::size_t>(state_count));
      std::vector<RigidTransform> current(static_cast<std::size_t>(state_count));
      parallel_for(state_count, config.threads, [&](int s) {
        const TrainState& st = states[static_cast<std::size_t>(s)];
        const RigidTransform g = local_cumulative(st);
        current[static_cast<std::size_t>(s)] = g;
        ProbeContext ctx;
        ctx.image = &items[static_cast<std::size_t>(st.item)].image;
        ctx.rotation = g.R;
        ctx.position = g * (st.pose.scale * model.home_positions()[static_cast<std::size_t>(j)]);
        contexts[static_cast<std::size_t>(s)] = ctx;
      });

      // Labels: masked logarithm of the remaining correction toward truth.
      TrainingLabels labels;
      std::vector<ProbeContext> kept;
      labels.twists.reserve(static_cast<std::size_t>(state_count));
      kept.reserve(static_cast<std::size_t>(state_count));
      for (int s = 0; s < state_count; ++s) {
        const TrainState& st = states[static_cast<std::size_t>(s)];
        const RigidTransform& truth =
            truth_fk[static_cast<std::size_t>(st.item)].transforms[static_cast<std::size_t>(j)];
        Vec6 label;
        try {
          label = mask_twist(
              model, j,
              log_se3(current[static_cast<std::size_t>(s)].inverse() * truth).to_vector());
        } catch (const AngleNearPi&) {
          ++cascade.dropped_labels;
          continue;
        }
        labels.twists.push_back(label);
        kept.push_back(contexts[static_cast<std::size_t>(s)]);
      }

      Forest forest;
      if (labels.twists.empty()) {
        forest = Forest::trivial_regressor();
      } else {
        IkFeatureSpace space(camera, config.patch_halfwidth, std::move(kept));
        ForestConfig fc = config.ik_forest;
        fc.threads = config.threads;
        forest = train_forest(space, labels, ForestKind::IkRegressor, fc,
                              substream(seed, kTagIkForest, static_cast<std::uint64_t>(j),
                                        static_cast<std::uint64_t>(c)));
      }

      // Apply the freshly trained regressor to every state (corrections that
      // land on the log branch cut are skipped, matching inference).
      parallel_for(state_count, config.threads, [&](int s) {
        TrainState& st = states[static_cast<std::size_t>(s)];
        const ProbeContext& ctx = contexts[static_cast<std::size_t>(s)];
        const Vec6 r = predict_twist(forest, [&](const FeatureDesc& f) {
          return pose_indexed_feature(*ctx.image, camera, ctx.rotation, ctx.position, f.u, f.v);
        });
        compose_joint_update(model, j, r, &st.pose);
      });
      row.push_back(std::move(forest));
    }

    parallel_for(state_count, config.threads, [&](int s) {
      TrainState& st = states[static_cast<std::size_t>(s)];
      st.cumulative[static_cast<std::size_t>(j)] = local_cumulative(st);
    });
  }
  return cascade;
}

Forest train_metric(const SkeletalModel& model, const CameraModel& camera,
                    const CascadeConfig& config, const std::vector<TrainingItem>& items,
                    std::uint64_t seed) {
  if (items.empty()) {
    throw InvalidArgument("metric training needs at least one item");
  }
  if (config.metric_perturbations < 1) {
    throw InvalidArgument("metric training needs at least one pose per image");
  }
  const int joint_count = model.joint_count();

  std::vector<MetricExample> examples;
  TrainingLabels labels;
  examples.reserve(items.size() * static_cast<std::size_t>(config.metric_perturbations));
  labels.scalars.reserve(examples.capacity());

  for (std::size_t i = 0; i < items.size(); ++i) {
    const FkResult truth_fk = forward_kinematics(model, items[i].truth);
    RngStream rng(substream(seed, kTagMetricPerturb, static_cast<std::uint64_t>(i)));
    for (int p = 0; p < config.metric_perturbations; ++p) {
      Pose pose = items[i].truth;
      // The first copy stays at the truth (label exactly 0); the rest share
      // one uniform magnitude so the metric sees the whole error range.
      if (p > 0) {
        const double magnitude = rng.uniform();
        Vec6 base = Vec6::Zero();
        base[2] = magnitude * rng.normal(0.0, config.metric_sigma_omega);
        base[3] = magnitude * rng.normal(0.0, config.metric_sigma_nu);
        base[4] = magnitude * rng.normal(0.0, config.metric_sigma_nu);
        base[5] = magnitude * rng.normal(0.0, config.metric_sigma_nu);
        compose_joint_update(model, 0, base, &pose);
        for (int j = 1; j < joint_count; ++j) {
          Vec6 r = Vec6::Zero();
          bool any = false;
          for (int d = 0; d < 6; ++d) {
            if (model.joint(j).dof_mask[static_cast<std::size_t>(d)]) {
              r[d] = magnitude * rng.normal(0.0, config.metric_sigma_joint);
              any = true;
            }
          }
          if (any) {
            compose_joint_update(model, j, r, &pose);
          }
        }
      }
      const FkResult fk = forward_kinematics(model, pose);
      MetricExample e;
      e.image = &items[i].image;
      e.rotations.reserve(static_cast<std::size_t>(joint_count));
      e.positions.reserve(static_cast<std::size_t>(joint_count));
      for (int j = 0; j < joint_count; ++j) {
        e.rotations.push_back(fk.transforms[static_cast<std::size_t>(j)].R);
        e.positions.push_back(fk.positions[static_cast<std::size_t>(j)]);
      }
      examples.push_back(std::move(e));
      labels.scalars.push_back(average_joint_error(fk.positions, truth_fk.positions));
    }
  }

  MetricFeatureSpace space(camera, config.patch_halfwidth, joint_count, std::move(examples));
  ForestConfig fc = config.metric_forest;
  fc.threads = config.threads;
  return train_forest(space, labels, ForestKind::Metric, fc, substream(seed, kTagMetricForest));
}

int refine_pose(const DepthCrop& image, const Cascade& cascade, Pose* pose, int rounds,
                bool skip_base) {
  const SkeletalModel& model = cascade.model;
  const int trained = cascade.config.rounds;
  const int run_rounds = rounds < 0 ? trained : std::min(rounds, trained);
  int skipped = 0;
  std::vector<RigidTransform> cumulative(static_cast<std::size_t>(model.joint_count()));
  for (int j : cascade.stage_order) {
    const int parent = model.joint(j).parent;
    const auto joint_transform = [&]() {
      const RigidTransform local = joint_local_transform(model, *pose, j);
      return parent < 0 ? local : cumulative[static_cast<std::size_t>(parent)] * local;
    };
    if (has_dof(model, j) && !(skip_base && parent < 0)) {
      const std::vector<Forest>& row = cascade.regressors[static_cast<std::size_t>(j)];
      const int row_rounds = std::min(run_rounds, static_cast<int>(row.size()));
      for (int c = 0; c < row_rounds; ++c) {
        const RigidTransform g = joint_transform();
        const Vec3 x = g * (pose->scale * model.home_positions()[static_cast<std::size_t>(j)]);
        const Vec6 r = predict_twist(row[static_cast<std::size_t>(c)], [&](const FeatureDesc& f) {
          return pose_indexed_feature(image, cascade.camera, g.R, x, f.u, f.v);
        });
        if (!compose_joint_update(model, j, r, pose)) {
          ++skipped;
        }
      }
    }
    cumulative[static_cast<std::size_t>(j)] = joint_transform();
  }
  return skipped;
}

double score_pose(const DepthCrop& image, const CameraModel& camera, const Forest& metric,
                  const FkResult& fk) {
  return predict_scalar(metric, [&](const FeatureDesc& f) {
    const auto j = static_cast<std::size_t>(f.joint);
    return pose_indexed_feature(image, camera, fk.transforms[j].R, fk.positions[j], f.u, f.v);
  });
}

double average_joint_error(const JointPositions& a, const JointPositions& b) {
  if (a.size() != b.size()) {
    throw LengthMismatch("joint position sequences differ in length: " +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  if (a.empty()) {
    throw LengthMismatch("joint position sequences are empty");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += (a[i] - b[i]).norm();
  }
  return sum / static_cast<double>(a.size());
}

ModelBundle train_bundle(const SkeletalModel& model, const CameraModel& camera,
                         const CascadeConfig& config, const std::vector<TrainingItem>& items,
                         std::uint64_t seed) {
  ModelBundle bundle{train_cascade(model, camera, config, items, seed),
                     train_metric(model, camera, config, items, seed)};
  return bundle;
}

PoseEstimate estimate(const DepthImage& image, const ModelBundle& bundle, std::uint64_t seed,
                      int kt, int rounds, std::vector<CandidateResult>* candidates_out) {
  const Cascade& cascade = bundle.cascade;
  const PreprocessResult pre = preprocess(image, cascade.camera);
  const DepthCrop crop(image);

  InitialPoseConfig init_config;
  init_config.count = kt < 0 ? cascade.config.init_count : kt;
  if (init_config.count < 1) {
    throw InvalidArgument("estimation needs at least one candidate");
  }
  RngStream rng(substream(seed, kTagEstimate));
  const std::vector<Pose> inits =
      generate_initial_poses(cascade.model, pre, init_config, rng);

  std::vector<CandidateResult> results(inits.size());
  parallel_for(static_cast<int>(inits.size()), cascade.config.threads, [&](int i) {
    Pose pose = inits[static_cast<std::size_t>(i)];
    refine_pose(crop, cascade, &pose, rounds);
    FkResult fk = forward_kinematics(cascade.model, pose);
    CandidateResult r;
    r.predicted_error = score_pose(crop, cascade.camera, bundle.metric, fk);
    r.pose = std::move(pose);
    r.positions = std::move(fk.positions);
    results[static_cast<std::size_t>(i)] = std::move(r);
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    if (results[i].predicted_error < results[best].predicted_error) {
      best = i;
    }
  }
  PoseEstimate out;
  out.pose = results[best].pose;
  out.positions = results[best].positions;
  out.predicted_error = results[best].predicted_error;
  out.chosen_index = static_cast<int>(best);
  if (candidates_out != nullptr) {
    *candidates_out = std::move(results);
  }
  return out;
}

void save_bundle(const ModelBundle& bundle, const std::string& path) {
  const Cascade& cascade = bundle.cascade;
  ByteWriter w;
  w.bytes(kBundleMagic, sizeof(kBundleMagic));
  w.u32(kBundleVersion);

  const CameraModel& cam = cascade.camera;
  w.f64(cam.focal);
  w.f64(cam.cx);
  w.f64(cam.cy);
  w.u32(static_cast<std::uint32_t>(cam.width));
  w.u32(static_cast<std::uint32_t>(cam.height));
  w.f64(cam.near_mm);
  w.f64(cam.far_mm);

  w.str(cascade.model.to_json());

  const CascadeConfig& c = cascade.config;
  w.u32(static_cast<std::uint32_t>(c.rounds));
  w.u32(static_cast<std::uint32_t>(c.init_count));
  w.u32(static_cast<std::uint32_t>(c.train_inits));
  w.f64(c.patch_halfwidth);
  w.u32(static_cast<std::uint32_t>(c.metric_perturbations));
  w.f64(c.metric_sigma_omega);
  w.f64(c.metric_sigma_nu);
  w.f64(c.metric_sigma_joint);
  write_forest_config(w, c.ik_forest);
  write_forest_config(w, c.metric_forest);

  w.u64(cascade.dropped_labels);

  const auto joint_count = static_cast<std::uint32_t>(cascade.model.joint_count());
  w.u32(joint_count);
  w.u32(static_cast<std::uint32_t>(c.rounds));
  for (const auto& row : cascade.regressors) {
    for (const Forest& forest : row) {
      write_forest(w, forest);
    }
  }
  write_forest(w, bundle.metric);

  write_file_atomic(path, w.data());
}

ModelBundle load_bundle(const std::string& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const MissingInput&) {
    throw ModelNotFound("model bundle not found: " + path);
  }
  ByteReader r(bytes);

  char magic[4];
  r.bytes(magic, sizeof(magic));
  if (std::string(magic, 4) != std::string(kBundleMagic, 4)) {
    throw CorruptStream("bundle: bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kBundleVersion) {
    throw VersionMismatch("bundle: unsupported version " + std::to_string(version));
  }

  CameraModel cam;
  cam.focal = r.f64();
  cam.cx = r.f64();
  cam.cy = r.f64();
  cam.width = static_cast<int>(r.u32());
  cam.height = static_cast<int>(r.u32());
  cam.near_mm = r.f64();
  cam.far_mm = r.f64();

  SkeletalModel model = SkeletalModel::from_json(r.str());

  CascadeConfig config;
  config.rounds = static_cast<int>(r.u32());
  config.init_count = static_cast<int>(r.u32());
  config.train_inits = static_cast<int>(r.u32());
  config.patch_halfwidth = r.f64();
  config.metric_perturbations = static_cast<int>(r.u32());
  config.metric_sigma_omega = r.f64();
  config.metric_sigma_nu = r.f64();
  config.metric_sigma_joint = r.f64();
  config.ik_forest = read_forest_config(r);
  config.metric_forest = read_forest_config(r);

  const std::uint64_t dropped = r.u64();

  const auto joint_count = static_cast<int>(r.u32());
  const auto rounds = static_cast<int>(r.u32());
  if (joint_count != model.joint_count()) {
    throw CorruptStream("bundle: regressor grid does not match the model");
  }
  if (rounds != config.rounds || rounds < 1) {
    throw CorruptStream("bundle: regressor grid does not match the configuration");
  }

  Cascade cascade(std::move(model), cam, config);
  cascade.stage_order = flatten_stage_order(cascade.model);
  cascade.dropped_labels = dropped;
  cascade.regressors.resize(static_cast<std::size_t>(joint_count));
  for (auto& row : cascade.regressors) {
    row.reserve(static_cast<std::size_t>(rounds));
    for (int c = 0; c < rounds; ++c) {
      Forest forest = read_forest(r);
      if (forest.kind != ForestKind::IkRegressor) {
        throw CorruptStream("bundle: regressor grid holds a non-regressor forest");
      }
      row.push_back(std::move(forest));
    }
  }
  Forest metric = read_forest(r);
  if (metric.kind != ForestKind::Metric) {
    throw CorruptStream("bundle: scoring forest has the wrong kind");
  }
  check_metric_joints(metric, joint_count);
  if (!r.done()) {
    throw CorruptStream("bundle: trailing bytes");
  }
  return ModelBundle{std::move(cascade), std::move(metric)};
}

}  // namespace liepose
