#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "liepose/lie.hpp"
#include "liepose/rng.hpp"

namespace liepose {

enum class ForestKind : std::uint8_t {
  IkRegressor = 0,      // twist labels, mean-shift prediction
  Metric = 1,           // scalar mm labels, mean prediction
  ActionClassifier = 2  // class labels, averaged-histogram prediction
};

enum class EnergyMode : std::uint8_t {
  Variance = 0,  // default: sum of squared deviations from the node mean
  Literal = 1    // |S| * ||mean||_2, the verbatim alternative (see node_energy)
};

struct ForestConfig {
  int tree_count = 3;
  int max_depth = 24;         // L
  int candidate_count = 8000; // m candidate features per node
  int threshold_count = 20;   // |Lambda|
  int min_leaf = 5;           // l_n: nodes with fewer examples become leaves
  EnergyMode energy = EnergyMode::Variance;
  double bandwidth_omega = 0.1; // mean-shift kernel width on omega coords, rad
  double bandwidth_nu = 5.0;    // mean-shift kernel width on nu coords, mm
  int threads = 1;              // tree-level training parallelism
};

/// Serializable description of one split feature. Live fields depend on the
/// forest kind: IK regressors use the probe offsets (u, v) at the current
/// joint; the metric adds an explicit joint index; the action classifier
/// thresholds a single coordinate of the feature vector (axis).
struct FeatureDesc {
  Vec3 u = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  std::int32_t joint = -1;
  std::int32_t axis = -1;
};

/// Training-time view of the example set. The trainer draws candidate
/// features and asks for their values on stored examples; the underlying
/// context (depth images, pose states, or feature vectors) stays with the
/// caller.
class FeatureSpace {
 public:
  virtual ~FeatureSpace() = default;
  virtual int example_count() const = 0;
  virtual FeatureDesc sample(RngStream& rng) const = 0;
  virtual double evaluate(const FeatureDesc& f, int example) const = 0;
};

/// Labels for the whole example set; the active member follows the kind.
struct TrainingLabels {
  std::vector<Vec6> twists;     // IkRegressor
  std::vector<double> scalars;  // Metric
  std::vector<int> classes;     // ActionClassifier, ids in [0, class_count)
  int class_count = 0;
};

struct TreeNode {
  bool is_leaf = true;
  // Split payload:
  FeatureDesc feature;
  double threshold = 0.0;       // route left iff value > threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  // Leaf payload:
  Vec6 mean = Vec6::Zero();     // IK mean twist; Metric scalar in mean[0]
  std::vector<Vec6> votes;      // IK vote set for mean-shift pooling
  std::vector<double> histogram; // ActionClassifier class probabilities
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct Forest {
  ForestKind kind = ForestKind::IkRegressor;
  ForestConfig config;
  int class_count = 0;
  std::vector<Tree> trees;
  std::uint64_t degenerate_leaves = 0;  // nodes leafed because all candidates were constant

  /// Single-tree, single-leaf regressor always predicting the zero twist;
  /// used for zero-DoF joints so cascades stay fully populated.
  static Forest trivial_regressor();
};

/// Node energy E(S) over `subset` (indices into the label arrays), in subset
/// order. Variance mode: two-pass sum of squared deviations from the mean
/// (classification uses the one-hot equivalent n - sum_c n_c^2/n). Literal
/// mode: |S| * ||mean||_2 for twist/scalar labels; classification always uses
/// the variance form.
double node_energy(const TrainingLabels& labels, ForestKind kind, EnergyMode mode,
                   const std::vector<int>& subset);

/// Candidate threshold ladder over an empirical range: `count` values
/// strictly inside (lo, hi), uniformly spaced:
///   eps_r = lo + (hi - lo) * (r + 1) / (count + 1).
std::vector<double> split_thresholds(double lo, double hi, int count);

struct SplitChoice {
  int feature = -1;        // index into the candidate list
  double threshold = 0.0;
  double gain = 0.0;
  bool valid = false;      // false when every candidate is constant on the node
};

/// Scans every (candidate, threshold) pair and returns the gain maximizer.
/// values[f][i] is candidate f on the i-th node example, and the example
/// order of `values` rows must match `node_examples` (label indices). The
/// gain of a split into S_l, S_r is evaluated as
///   E(S) - (|S_l|/|S|) * E(S_l) - (|S_r|/|S|) * E(S_r)
/// with node_energy on subsets in scan order. Ties keep the first pair
/// scanned (features outer, thresholds inner).
SplitChoice choose_split(const TrainingLabels& labels, ForestKind kind, EnergyMode mode,
                         const std::vector<int>& node_examples,
                         const std::vector<std::vector<double>>& values,
                         int threshold_count);

/// Trains a forest. Each tree gets a bootstrap resample (with replacement)
/// and a private rng substream derived from `seed` and the tree index, so
/// results are byte-identical for any `config.threads`.
Forest train_forest(const FeatureSpace& space, const TrainingLabels& labels,
                    ForestKind kind, const ForestConfig& config, std::uint64_t seed);

/// Inference-time feature evaluator: maps a stored FeatureDesc to its value
/// in the caller's current context (image + pose state, or feature vector).
using FeatureEval = std::function<double(const FeatureDesc&)>;

/// Regression: pools the reached leaves' vote sets across trees and returns
/// the mean-shift mode (Gaussian kernel, diagonal bandwidth, <= 20
/// iterations, seeded at the pooled mean).
Vec6 predict_twist(const Forest& forest, const FeatureEval& eval);

/// Metric: mean of reached leaf means across trees, clamped to >= 0.
double predict_scalar(const Forest& forest, const FeatureEval& eval);

/// Classification: averages reached leaf histograms across trees; argmax
/// class, ties broken toward the smallest id. Optionally copies the averaged
/// histogram out.
int predict_class(const Forest& forest, const FeatureEval& eval,
                  std::vector<double>* histogram = nullptr);

/// Mean-shift mode seeking over a vote set (exposed for direct testing).
Vec6 mean_shift_mode(const std::vector<Vec6>& votes, double bandwidth_omega,
                     double bandwidth_nu, int max_iterations = 20);

/// Versioned little-endian binary format, magic "LXF1"; round-trips
/// bit-exactly. Throws VersionMismatch / CorruptStream on bad input.
std::vector<std::uint8_t> serialize_forest(const Forest& forest);
Forest deserialize_forest(const std::uint8_t* data, std::size_t size);
Forest deserialize_forest(const std::vector<std::uint8_t>& bytes);
void save_forest(const Forest& forest, const std::string& path);
Forest load_forest(const std::string& path);

/// Serialize into / parse from an existing buffer (used by model bundles).
void write_forest(class ByteWriter& writer, const Forest& forest);
Forest read_forest(class ByteReader& reader);

}  // namespace liepose
