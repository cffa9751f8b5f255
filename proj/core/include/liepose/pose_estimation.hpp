#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "liepose/camera.hpp"
#include "liepose/depth_image.hpp"
#include "liepose/forest.hpp"
#include "liepose/render.hpp"
#include "liepose/skeleton.hpp"

namespace liepose {

/// Hyperparameters of the cascaded estimator. The defaults are overridden per
/// model family by preset(); tests shrink the forest knobs for speed.
struct CascadeConfig {
  int rounds = 7;                 // corrections applied per joint (C)
  int init_count = 40;            // candidate hypotheses per image at test time (K_t)
  int train_inits = 40;           // training initializations drawn per image (K)
  double patch_halfwidth = 25.0;  // probe offset cube half-width, mm
  ForestConfig ik_forest;         // per-(joint, round) regressor training knobs
  ForestConfig metric_forest;     // candidate-scoring forest training knobs
  int metric_perturbations = 8;   // scored poses generated per training image
  double metric_sigma_omega = 0.3;   // in-plane base rotation jitter, rad
  double metric_sigma_nu = 10.0;     // base translation jitter, mm
  double metric_sigma_joint = 0.15;  // per-coordinate joint angle jitter, rad
  int threads = 1;                   // forest-level training parallelism

  static CascadeConfig preset(const std::string& name);
};

/// One training image with its ground truth. The depth crop retains only the
/// foreground window (sampling off the crop is background by construction),
/// and the centroid anchors the training-time pose initializations.
struct TrainingItem {
  DepthCrop image;
  Pose truth;
  Vec3 centroid = Vec3::Zero();
};

/// Crops the image and records the foreground centroid alongside the truth.
TrainingItem make_training_item(const DepthImage& image, const Pose& truth,
                                const CameraModel& camera);

/// A trained cascade: a rounds-by-joints grid of regression forests plus the
/// joint visit order they were trained in. Zero-DoF joints hold trivial
/// regressors so the grid stays rectangular.
struct Cascade {
  SkeletalModel model;
  CameraModel camera;
  CascadeConfig config;
  std::vector<std::vector<Forest>> regressors;  // regressors[joint][round]
  std::vector<int> stage_order;                 // flattened joint visit order
  std::uint64_t dropped_labels = 0;  // training labels lost to the log branch cut

  Cascade(SkeletalModel m, CameraModel cam, CascadeConfig cfg)
      : model(std::move(m)), camera(cam), config(std::move(cfg)) {}
};

/// Joint visit order used for both training and refinement: base first, then
/// each kinematic sub-chain root-outward (for a single chain this is simply
/// joint-index order).
std::vector<int> flatten_stage_order(const SkeletalModel& model);

/// Trains the full grid of per-(joint, round) regressors. For every item,
/// `config.train_inits` independent hypotheses are drawn around the stored
/// centroid and refined jointly with the regressors as they are produced:
/// at each (joint, round) the labels are the masked relative-transform
/// logarithms against the truth, the freshly trained forest is immediately
/// applied to all training states, and the walk moves on.
Cascade train_cascade(const SkeletalModel& model, const CameraModel& camera,
                      const CascadeConfig& config, const std::vector<TrainingItem>& items,
                      std::uint64_t seed);

/// Trains the candidate-scoring forest: each image contributes
/// `config.metric_perturbations` jittered copies of its truth (one shared
/// uniform magnitude factor per copy), labelled with the resulting average
/// joint position error in mm.
Forest train_metric(const SkeletalModel& model, const CameraModel& camera,
                    const CascadeConfig& config, const std::vector<TrainingItem>& items,
                    std::uint64_t seed);

/// Refines a pose hypothesis in place by running every joint's correction
/// forests in the trained visit order. `rounds` < 0 runs all trained rounds;
/// smaller values stop each joint's correction sequence early (used to
/// measure per-round convergence). With `skip_base` the base joint keeps its
/// incoming twist and only the remaining joints are re-inferred (the tracker
/// propagates the base through its motion model instead). Returns the number
/// of corrections skipped because composition landed on the log branch cut.
int refine_pose(const DepthCrop& image, const Cascade& cascade, Pose* pose, int rounds = -1,
                bool skip_base = false);

/// Metric score of a posed hypothesis on an image: predicted mean joint
/// error in mm (lower is better).
double score_pose(const DepthCrop& image, const CameraModel& camera, const Forest& metric,
                  const FkResult& fk);

/// Mean Euclidean distance between matched joint positions (mm). Throws
/// LengthMismatch when the sequences disagree in size.
double average_joint_error(const JointPositions& a, const JointPositions& b);

/// A complete trained estimator.
struct ModelBundle {
  Cascade cascade;
  Forest metric;
};

ModelBundle train_bundle(const SkeletalModel& model, const CameraModel& camera,
                         const CascadeConfig& config, const std::vector<TrainingItem>& items,
                         std::uint64_t seed);

struct CandidateResult {
  Pose pose;
  JointPositions positions;
  double predicted_error = 0.0;  // metric output, mm
};

struct PoseEstimate {
  Pose pose;
  JointPositions positions;
  double predicted_error = 0.0;
  int chosen_index = 0;  // index of the winning hypothesis
};

/// Full single-image estimation: preprocess, draw hypotheses at the observed
/// centroid, refine each through the cascade, score with the metric forest,
/// and return the lowest-scoring candidate (ties break toward the lowest
/// index). `kt` / `rounds` < 0 take the trained defaults. When given,
/// `candidates_out` receives every scored hypothesis in draw order.
PoseEstimate estimate(const DepthImage& image, const ModelBundle& bundle, std::uint64_t seed,
                      int kt = -1, int rounds = -1,
                      std::vector<CandidateResult>* candidates_out = nullptr);

/// Versioned little-endian bundle container, magic "LPB1": camera, model
/// JSON, cascade configuration, the regressor grid, and the metric forest.
/// Round-trips bit-exactly. A missing file raises ModelNotFound; malformed
/// content raises CorruptStream / VersionMismatch.
void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

}  // namespace liepose
