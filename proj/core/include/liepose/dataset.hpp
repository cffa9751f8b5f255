#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "liepose/action.hpp"
#include "liepose/camera.hpp"
#include "liepose/depth_image.hpp"
#include "liepose/pose_estimation.hpp"
#include "liepose/render.hpp"
#include "liepose/rng.hpp"
#include "liepose/skeleton.hpp"

namespace liepose {

/// Pose sampling ranges for synthetic captures. Presets size the ranges to
/// each model's articulation and typical camera distance.
struct DatasetConfig {
  int count = 100;
  double noise_mm = 0.0;       // additive Gaussian depth noise per foreground pixel
  double joint_angle = 0.15;   // rad, per articulated coordinate
  double tilt = 0.1;           // rad, base out-of-plane components
  double z_low = 500.0;        // mm
  double z_high = 700.0;
  double xy = 60.0;            // mm, lateral placement half-range
  double scale_low = 0.9;
  double scale_high = 1.1;

  static DatasetConfig preset_config(const std::string& name);
};

/// Smooth random motion used by tracking sequences: per-frame Brownian base
/// steps plus a clamped random walk on the articulated coordinates.
struct SequenceMotionConfig {
  int frames = 100;
  double base_step_omega = 0.03;  // rad per frame
  double base_step_nu = 2.0;      // mm per frame
  double joint_step = 0.03;       // rad per frame, clamped to the joint range
};

/// Synthetic action benchmark: four balanced motion classes (see
/// synthetic_action_catalogue) with randomized absolute start poses, so
/// relative-motion features carry the class signal while absolute joint
/// positions do not.
struct ActionDatasetConfig {
  int sequence_count = 300;
  int min_len = 7;
  int max_len = 135;
  double speed = 3.0;        // mm per frame along the body axis
  double turn_rate = 0.08;   // rad per frame for the turning classes
  double wiggle = 0.01;      // rad, base heading noise
  double drift_nu = 0.3;     // mm, translation noise per axis
  double joint_step = 0.02;  // rad, articulation random-walk step
  double joint_drift = 0.01; // rad per frame toward the turn side
};

/// One synthetic capture: the rendered (optionally noisy) depth image and the
/// exact pose it was rendered from.
struct GeneratedItem {
  DepthImage image;
  Pose pose;
};

/// Draws a pose uniformly over the configured ranges: scale, two base tilt
/// components, a full in-plane rotation, a position box, and every
/// articulated coordinate independently.
Pose sample_pose(const SkeletalModel& model, const DatasetConfig& config, RngStream& rng);

/// Deterministic item generator: item `index` of a dataset is a pure function
/// of (seed, index). Off-screen draws are retried on a per-attempt substream.
GeneratedItem generate_item(const SkeletalModel& model, const CameraModel& camera,
                            const DatasetConfig& config, std::uint64_t seed, int index);

/// Streams `config.count` items into cropped training form (images are
/// discarded after cropping, keeping memory proportional to foreground).
std::vector<TrainingItem> generate_training_items(const SkeletalModel& model,
                                                  const CameraModel& camera,
                                                  const DatasetConfig& config,
                                                  std::uint64_t seed);

/// Writes img_XXXXX.pgm / img_XXXXX.json pairs plus manifest.json.
void generate_dataset(const SkeletalModel& model, const CameraModel& camera,
                      const DatasetConfig& config, std::uint64_t seed,
                      const std::string& out_dir);

/// Smoothly moving ground-truth pose sequence (no rendering involved).
PoseSequence generate_motion_sequence(const SkeletalModel& model, const DatasetConfig& config,
                                      const SequenceMotionConfig& motion, std::uint64_t seed);

/// Renders one frame of a sequence, adding per-frame noise when noise_mm > 0.
DepthImage render_sequence_frame(const SkeletalModel& model, const CameraModel& camera,
                                 const Pose& pose, double noise_mm, std::uint64_t seed,
                                 int index);

/// Writes frame_XXXXX.pgm frames, truth.jsonl, and manifest.json. Motions
/// that wander off screen are resampled wholesale on a new substream.
void generate_sequence_dataset(const SkeletalModel& model, const CameraModel& camera,
                               const DatasetConfig& config, const SequenceMotionConfig& motion,
                               std::uint64_t seed, const std::string& out_dir);

/// Labelled synthetic action clip; label = index mod 4 for exact class
/// balance, length uniform on [min_len, max_len].
PoseSequence generate_action_sequence(const SkeletalModel& model, const DatasetConfig& config,
                                      const ActionDatasetConfig& actions, std::uint64_t seed,
                                      int index);

/// Writes seq_XXXXX.jsonl clips plus manifest.json (kind "action").
void generate_action_dataset(const SkeletalModel& model, const DatasetConfig& config,
                             const ActionDatasetConfig& actions, std::uint64_t seed,
                             const std::string& out_dir);

/// On-disk dataset description. `kind` is "pose", "sequence", or "action";
/// the skeletal model and camera ride along so datasets are self-contained.
struct DatasetManifest {
  std::string kind = "pose";
  std::string preset;
  int count = 0;
  double noise_mm = 0.0;
  std::uint64_t seed = 0;
  CameraModel camera;
  SkeletalModel model;
  std::vector<std::string> class_names;  // action datasets only

  explicit DatasetManifest(SkeletalModel m) : model(std::move(m)) {}
};

DatasetManifest load_manifest(const std::string& dir);

std::string item_image_path(const std::string& dir, int index);
std::string item_sidecar_path(const std::string& dir, int index);
std::string sequence_frame_path(const std::string& dir, int index);
std::string sequence_truth_path(const std::string& dir);
std::string action_sequence_path(const std::string& dir, int index);

struct LoadedItem {
  DepthImage image;
  Pose truth;
  JointPositions truth_positions;
};

/// Reads one image + sidecar pair of a pose dataset.
LoadedItem load_item(const std::string& dir, const DatasetManifest& manifest, int index);

/// Per-item errors condensed to a mean and a cumulative error distribution:
/// `threshold_count` evenly spaced thresholds from 0 to the maximum error,
/// each mapped to the fraction of items at or below it (monotone, in [0,1]).
struct EvalReport {
  std::vector<double> errors;
  double mean = 0.0;
  std::vector<std::pair<double, double>> ced;  // threshold mm -> fraction
};

EvalReport make_report(const std::vector<double>& errors, int threshold_count = 64);

void write_errors_csv(const std::string& path, const std::vector<double>& errors);
void write_ced_csv(const std::string& path, const std::vector<std::pair<double, double>>& ced);
void write_summary_csv(const std::string& path,
                       const std::vector<std::pair<std::string, double>>& rows);
void write_confusion_csv(const std::string& path, const std::vector<std::string>& class_names,
                         const std::vector<std::vector<int>>& matrix);

}  // namespace liepose
