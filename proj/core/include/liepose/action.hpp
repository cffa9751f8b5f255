#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "liepose/forest.hpp"
#include "liepose/skeleton.hpp"

namespace liepose {

/// Every sequence is resampled to this many frames before features are taken.
inline constexpr int kNormalizedLength = 32;

struct TimedPose {
  double time = 0.0;
  Pose pose;
};

/// An ordered motion clip; label indexes the class catalogue the sequence was
/// produced under (-1 = unlabeled).
struct PoseSequence {
  std::vector<TimedPose> frames;
  int label = -1;
};

/// The nine fish behaviour classes, in catalogue order.
std::vector<std::string> fish_action_catalogue();

/// The four synthetic motion classes used by the generated benchmark set.
std::vector<std::string> synthetic_action_catalogue();

/// Resamples a sequence to `target_len` frames at fractional source indices
/// k*(n-1)/(target_len-1). Integer indices copy their frame exactly (so a
/// 32-frame input passes through bit-identically and endpoints are always
/// preserved); in between, the base transform moves along its geodesic while
/// non-base coordinates, scale, and time interpolate linearly. Throws
/// TooShort on fewer than 2 frames.
PoseSequence normalize_sequence(const PoseSequence& seq, int target_len = kNormalizedLength);

enum class FeatureMode : std::uint8_t {
  Tangent = 0,        // relative-transform logarithms in the group's tangent space
  JointPosition = 1,  // raw 3-D joint positions (the baseline representation)
};

/// Per-frame descriptor width for a mode; the full feature is 7 pyramid
/// segments x (mean, std) x this width.
int frame_descriptor_dimension(const SkeletalModel& model, FeatureMode mode, bool compact);

/// Total feature vector length: 7 * 2 * frame_descriptor_dimension.
int feature_dimension(const SkeletalModel& model, FeatureMode mode, bool compact);

/// Temporal-pyramid features over a normalized (32-frame) sequence.
///
/// Tangent frame descriptor: the base joint's frame-to-frame logarithm (6),
/// then per non-base joint the parent-to-joint logarithm (6) and the joint's
/// own frame-to-frame logarithm (6), then the explicit base twist (6) for
/// absolute location/orientation. The compact variant keeps the base
/// frame-to-frame block and averages the parent-to-joint logarithms over two
/// joint groups (indices 1-9 and 10-end), 18 per frame — 252 in total for the
/// fish model. JointPosition mode uses all joint positions (3 per joint).
///
/// Pyramid: frame blocks [0,8) [8,16) [16,24) [24,32), then [0,16) [16,32),
/// then [0,32); per segment the per-coordinate mean followed by the
/// per-coordinate standard deviation (n-1 denominator).
std::vector<double> extract_features(const SkeletalModel& model, const PoseSequence& seq,
                                     FeatureMode mode, bool compact);

struct ActionTrainConfig {
  ActionTrainConfig() {
    forest.tree_count = 50;
    forest.max_depth = 20;
    forest.candidate_count = 512;
  }
  ForestConfig forest;
  FeatureMode mode = FeatureMode::Tangent;
  bool compact = false;
  int threads = 1;
};

/// A trained classifier together with everything recognition needs: the
/// skeletal model for feature extraction and the class catalogue.
struct ActionModel {
  SkeletalModel model;
  Forest forest;
  std::vector<std::string> class_names;
  FeatureMode mode = FeatureMode::Tangent;
  bool compact = false;
  int feature_dim = 0;

  explicit ActionModel(SkeletalModel m) : model(std::move(m)) {}
};

/// Trains the action forest on labelled sequences (labels index
/// `class_names`). Sequences are normalized and featurized internally.
ActionModel train_action(const SkeletalModel& model, const std::vector<PoseSequence>& sequences,
                         const std::vector<std::string>& class_names,
                         const ActionTrainConfig& config, std::uint64_t seed);

/// Class of a feature vector (optionally with the averaged class histogram).
/// Throws DimensionMismatch when the vector length does not match the model.
int classify(const ActionModel& model, const std::vector<double>& features,
             std::vector<double>* histogram = nullptr);

/// Normalize + extract + classify in one step.
int classify_sequence(const ActionModel& model, const PoseSequence& seq,
                      std::vector<double>* histogram = nullptr);

/// Versioned little-endian container, magic "LXA1": skeletal model JSON,
/// feature mode, class catalogue, and the forest. Round-trips bit-exactly.
/// Missing file raises ModelNotFound; malformed content CorruptStream /
/// VersionMismatch.
void save_action_model(const ActionModel& model, const std::string& path);
ActionModel load_action_model(const std::string& path);

/// JSON-lines persistence: one frame per line with fields "t", "scale",
/// "twists" (J arrays of 6), and — on labelled sequences — "label".
std::string sequence_to_jsonl(const PoseSequence& seq);
PoseSequence sequence_from_jsonl(const std::string& text, int joint_count);
void save_sequence(const PoseSequence& seq, const std::string& path);
PoseSequence load_sequence(const std::string& path, int joint_count);

}  // namespace liepose
