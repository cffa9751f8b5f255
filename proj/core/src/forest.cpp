#include "liepose/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "liepose/errors.hpp"
#include "liepose/io_util.hpp"
#include "liepose/parallel.hpp"

namespace liepose {
namespace {

constexpr char kMagic[4] = {'L', 'X', 'F', '1'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr double kPureNodeEnergy = 1e-12;

void check_labels(const FeatureSpace& space, const TrainingLabels& labels, ForestKind kind) {
  const auto n = static_cast<size_t>(space.example_count());
  switch (kind) {
    case ForestKind::IkRegressor:
      if (labels.twists.size() != n) throw InvalidArgument("twist label count does not match example count");
      break;
    case ForestKind::Metric:
      if (labels.scalars.size() != n) throw InvalidArgument("scalar label count does not match example count");
      break;
    case ForestKind::ActionClassifier:
      if (labels.classes.size() != n) throw InvalidArgument("class label count does not match example count");
      if (labels.class_count <= 0) throw InvalidArgument("class_count must be positive");
      for (int c : labels.classes) {
        if (c < 0 || c >= labels.class_count) throw InvalidArgument("class label out of range");
      }
      break;
  }
}

TreeNode make_leaf(const TrainingLabels& labels, ForestKind kind,
                   const std::vector<int>& examples) {
  TreeNode node;
  node.is_leaf = true;
  const double n = static_cast<double>(examples.size());
  switch (kind) {
    case ForestKind::IkRegressor: {
      node.votes.reserve(examples.size());
      Vec6 sum = Vec6::Zero();
      for (int i : examples) {
        node.votes.push_back(labels.twists[static_cast<size_t>(i)]);
        sum += node.votes.back();
      }
      if (!examples.empty()) node.mean = sum / n;
      break;
    }
    case ForestKind::Metric: {
      double sum = 0.0;
      for (int i : examples) sum += labels.scalars[static_cast<size_t>(i)];
      if (!examples.empty()) node.mean[0] = sum / n;
      break;
    }
    case ForestKind::ActionClassifier: {
      node.histogram.assign(static_cast<size_t>(labels.class_count), 0.0);
      for (int i : examples) node.histogram[static_cast<size_t>(labels.classes[static_cast<size_t>(i)])] += 1.0;
      if (!examples.empty()) {
        for (double& h : node.histogram) h /= n;
      }
      break;
    }
  }
  return node;
}

struct TreeBuilder {
  const FeatureSpace& space;
  const TrainingLabels& labels;
  ForestKind kind;
  const ForestConfig& config;
  RngStream rng;
  Tree tree;
  std::uint64_t degenerate = 0;

  std::int32_t build(const std::vector<int>& examples, int depth) {
    const auto index = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();

    const int n = static_cast<int>(examples.size());
    bool leaf = depth >= config.max_depth || n < config.min_leaf;
    if (!leaf && node_energy(labels, kind, config.energy, examples) <= kPureNodeEnergy) {
      leaf = true;
    }

    SplitChoice choice;
    std::vector<FeatureDesc> candidates;
    if (!leaf) {
      candidates.reserve(static_cast<size_t>(config.candidate_count));
      std::vector<std::vector<double>> values(static_cast<size_t>(config.candidate_count));
      for (int f = 0; f < config.candidate_count; ++f) {
        candidates.push_back(space.sample(rng));
        auto& row = values[static_cast<size_t>(f)];
        row.reserve(examples.size());
        for (int i : examples) row.push_back(space.evaluate(candidates.back(), i));
      }
      choice = choose_split(labels, kind, config.energy, examples, values, config.threshold_count);
      if (!choice.valid) {
        leaf = true;
        ++degenerate;
      } else if (config.energy == EnergyMode::Variance && choice.gain <= 0.0) {
        leaf = true;
      }
      if (!leaf) {
        // Materialize the chosen partition before the candidate matrix dies.
        std::vector<int> left_set, right_set;
        const auto& row = values[static_cast<size_t>(choice.feature)];
        for (size_t i = 0; i < examples.size(); ++i) {
          (row[i] > choice.threshold ? left_set : right_set).push_back(examples[i]);
        }
        values.clear();
        tree.nodes[static_cast<size_t>(index)].is_leaf = false;
        tree.nodes[static_cast<size_t>(index)].feature = candidates[static_cast<size_t>(choice.feature)];
        tree.nodes[static_cast<size_t>(index)].threshold = choice.threshold;
        const std::int32_t left = build(left_set, depth + 1);
        const std::int32_t right = build(right_set, depth + 1);
        tree.nodes[static_cast<size_t>(index)].left = left;
        tree.nodes[static_cast<size_t>(index)].right = right;
        return index;
      }
    }

    tree.nodes[static_cast<size_t>(index)] = make_leaf(labels, kind, examples);
    return index;
  }
};

const TreeNode& route(const Tree& tree, const FeatureEval& eval) {
  const TreeNode* node = &tree.nodes[0];
  while (!node->is_leaf) {
    const double value = eval(node->feature);
    node = &tree.nodes[static_cast<size_t>(value > node->threshold ? node->left : node->right)];
  }
  return *node;
}

void write_feature(ByteWriter& w, const FeatureDesc& f) {
  for (int k = 0; k < 3; ++k) w.f64(f.u[k]);
  for (int k = 0; k < 3; ++k) w.f64(f.v[k]);
  w.i32(f.joint);
  w.i32(f.axis);
}

FeatureDesc read_feature(ByteReader& r) {
  FeatureDesc f;
  for (int k = 0; k < 3; ++k) f.u[k] = r.f64();
  for (int k = 0; k < 3; ++k) f.v[k] = r.f64();
  f.joint = r.i32();
  f.axis = r.i32();
  return f;
}

}  // namespace

Forest Forest::trivial_regressor() {
  Forest forest;
  forest.kind = ForestKind::IkRegressor;
  forest.config.tree_count = 1;
  forest.config.max_depth = 0;
  forest.config.candidate_count = 0;
  Tree tree;
  TreeNode leaf;
  leaf.is_leaf = true;
  leaf.votes.push_back(Vec6::Zero());
  tree.nodes.push_back(std::move(leaf));
  forest.trees.push_back(std::move(tree));
  return forest;
}

double node_energy(const TrainingLabels& labels, ForestKind kind, EnergyMode mode,
                   const std::vector<int>& subset) {
  if (subset.empty()) return 0.0;
  const double n = static_cast<double>(subset.size());
  switch (kind) {
    case ForestKind::IkRegressor: {
      Vec6 mean = Vec6::Zero();
      for (int i : subset) mean += labels.twists[static_cast<size_t>(i)];
      mean /= n;
      if (mode == EnergyMode::Literal) return n * mean.norm();
      double e = 0.0;
      for (int i : subset) e += (labels.twists[static_cast<size_t>(i)] - mean).squaredNorm();
      return e;
    }
    case ForestKind::Metric: {
      double mean = 0.0;
      for (int i : subset) mean += labels.scalars[static_cast<size_t>(i)];
      mean /= n;
      if (mode == EnergyMode::Literal) return n * std::abs(mean);
      double e = 0.0;
      for (int i : subset) {
        const double d = labels.scalars[static_cast<size_t>(i)] - mean;
        e += d * d;
      }
      return e;
    }
    case ForestKind::ActionClassifier: {
      // One-hot variance: n - sum_c n_c^2 / n. The literal mode has no
      // classification analogue, so both modes score counts this way.
      std::vector<double> counts(static_cast<size_t>(labels.class_count), 0.0);
      for (int i : subset) counts[static_cast<size_t>(labels.classes[static_cast<size_t>(i)])] += 1.0;
      double sq = 0.0;
      for (double c : counts) sq += c * c;
      return n - sq / n;
    }
  }
  return 0.0;
}

std::vector<double> split_thresholds(double lo, double hi, int count) {
  std::vector<double> eps;
  eps.reserve(static_cast<size_t>(std::max(count, 0)));
  for (int r = 0; r < count; ++r) {
    eps.push_back(lo + (hi - lo) * static_cast<double>(r + 1) / static_cast<double>(count + 1));
  }
  return eps;
}

SplitChoice choose_split(const TrainingLabels& labels, ForestKind kind, EnergyMode mode,
                         const std::vector<int>& node_examples,
                         const std::vector<std::vector<double>>& values,
                         int threshold_count) {
  SplitChoice best;
  const size_t n = node_examples.size();
  if (n == 0) return best;
  const double energy_all = node_energy(labels, kind, mode, node_examples);
  const double total = static_cast<double>(n);

  std::vector<int> left_set, right_set;
  left_set.reserve(n);
  right_set.reserve(n);

  for (size_t f = 0; f < values.size(); ++f) {
    const auto& row = values[f];
    double lo = row[0], hi = row[0];
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(hi > lo)) continue;  // constant candidate carries no information
    for (double eps : split_thresholds(lo, hi, threshold_count)) {
      left_set.clear();
      right_set.clear();
      for (size_t i = 0; i < n; ++i) {
        (row[i] > eps ? left_set : right_set).push_back(node_examples[i]);
      }
      if (left_set.empty() || right_set.empty()) continue;  // uninformative
      const double gain = energy_all -
                          (static_cast<double>(left_set.size()) / total) *
                              node_energy(labels, kind, mode, left_set) -
                          (static_cast<double>(right_set.size()) / total) *
                              node_energy(labels, kind, mode, right_set);
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

Forest train_forest(const FeatureSpace& space, const TrainingLabels& labels,
                    ForestKind kind, const ForestConfig& config, std::uint64_t seed) {
  check_labels(space, labels, kind);
  const int n = space.example_count();
  if (n <= 0) throw InvalidArgument("cannot train a forest on an empty example set");
  if (config.tree_count <= 0) throw InvalidArgument("tree_count must be positive");

  Forest forest;
  forest.kind = kind;
  forest.config = config;
  forest.class_count = (kind == ForestKind::ActionClassifier) ? labels.class_count : 0;
  forest.trees.resize(static_cast<size_t>(config.tree_count));

  std::vector<std::uint64_t> degenerate(static_cast<size_t>(config.tree_count), 0);
  parallel_for(config.tree_count, config.threads, [&](int t) {
    RngStream rng(substream(seed, static_cast<std::uint64_t>(t)));
    std::vector<int> bootstrap(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      bootstrap[static_cast<size_t>(i)] = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    }
    TreeBuilder builder{space, labels, kind, config, std::move(rng), Tree{}, 0};
    builder.build(bootstrap, 0);
    forest.trees[static_cast<size_t>(t)] = std::move(builder.tree);
    degenerate[static_cast<size_t>(t)] = builder.degenerate;
  });
  for (std::uint64_t d : degenerate) forest.degenerate_leaves += d;
  return forest;
}

Vec6 mean_shift_mode(const std::vector<Vec6>& votes, double bandwidth_omega,
                     double bandwidth_nu, int max_iterations) {
  if (votes.empty()) return Vec6::Zero();
  Vec6 x = Vec6::Zero();
  for (const Vec6& y : votes) x += y;
  x /= static_cast<double>(votes.size());

  Vec6 inv_b2;
  for (int k = 0; k < 3; ++k) inv_b2[k] = 1.0 / (bandwidth_omega * bandwidth_omega);
  for (int k = 3; k < 6; ++k) inv_b2[k] = 1.0 / (bandwidth_nu * bandwidth_nu);

  for (int iter = 0; iter < max_iterations; ++iter) {
    Vec6 num = Vec6::Zero();
    double den = 0.0;
    for (const Vec6& y : votes) {
      const Vec6 d = x - y;
      const double w = std::exp(-0.5 * d.cwiseProduct(d).dot(inv_b2));
      num += w * y;
      den += w;
    }
    if (den <= 0.0) break;  // all votes beyond kernel support: keep the mean
    const Vec6 nx = num / den;
    const bool converged = (nx - x).norm() < 1e-9;
    x = nx;
    if (converged) break;
  }
  return x;
}

Vec6 predict_twist(const Forest& forest, const FeatureEval& eval) {
  if (forest.kind != ForestKind::IkRegressor) {
    throw InvalidArgument("predict_twist requires an ik-regressor forest");
  }
  std::vector<Vec6> pooled;
  for (const Tree& tree : forest.trees) {
    const TreeNode& leaf = route(tree, eval);
    pooled.insert(pooled.end(), leaf.votes.begin(), leaf.votes.end());
  }
  return mean_shift_mode(pooled, forest.config.bandwidth_omega, forest.config.bandwidth_nu);
}

double predict_scalar(const Forest& forest, const FeatureEval& eval) {
  if (forest.kind != ForestKind::Metric) {
    throw InvalidArgument("predict_scalar requires a metric forest");
  }
  double sum = 0.0;
  for (const Tree& tree : forest.trees) sum += route(tree, eval).mean[0];
  return std::max(0.0, sum / static_cast<double>(forest.trees.size()));
}

int predict_class(const Forest& forest, const FeatureEval& eval, std::vector<double>* histogram) {
  if (forest.kind != ForestKind::ActionClassifier) {
    throw InvalidArgument("predict_class requires an action-classifier forest");
  }
  std::vector<double> hist(static_cast<size_t>(forest.class_count), 0.0);
  for (const Tree& tree : forest.trees) {
    const TreeNode& leaf = route(tree, eval);
    for (size_t c = 0; c < hist.size(); ++c) hist[c] += leaf.histogram[c];
  }
  for (double& h : hist) h /= static_cast<double>(forest.trees.size());
  int best = 0;
  for (size_t c = 1; c < hist.size(); ++c) {
    if (hist[c] > hist[static_cast<size_t>(best)]) best = static_cast<int>(c);
  }
  if (histogram) *histogram = std::move(hist);
  return best;
}

void write_forest(ByteWriter& w, const Forest& forest) {
  w.bytes(kMagic, 4);
  w.u32(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(forest.kind));
  w.u8(static_cast<std::uint8_t>(forest.config.energy));
  w.u32(static_cast<std::uint32_t>(forest.config.tree_count));
  w.u32(static_cast<std::uint32_t>(forest.config.max_depth));
  w.u32(static_cast<std::uint32_t>(forest.config.candidate_count));
  w.u32(static_cast<std::uint32_t>(forest.config.threshold_count));
  w.u32(static_cast<std::uint32_t>(forest.config.min_leaf));
  w.f64(forest.config.bandwidth_omega);
  w.f64(forest.config.bandwidth_nu);
  w.u32(static_cast<std::uint32_t>(forest.class_count));
  w.u64(forest.degenerate_leaves);
  w.u32(static_cast<std::uint32_t>(forest.trees.size()));
  for (const Tree& tree : forest.trees) {
    w.u32(static_cast<std::uint32_t>(tree.nodes.size()));
    for (const TreeNode& node : tree.nodes) {
      w.u8(node.is_leaf ? 1 : 0);
      if (!node.is_leaf) {
        write_feature(w, node.feature);
        w.f64(node.threshold);
        w.u32(static_cast<std::uint32_t>(node.left));
        w.u32(static_cast<std::uint32_t>(node.right));
        continue;
      }
      switch (forest.kind) {
        case ForestKind::IkRegressor:
          for (int k = 0; k < 6; ++k) w.f64(node.mean[k]);
          w.u32(static_cast<std::uint32_t>(node.votes.size()));
          for (const Vec6& vote : node.votes) {
            for (int k = 0; k < 6; ++k) w.f64(vote[k]);
          }
          break;
        case ForestKind::Metric:
          w.f64(node.mean[0]);
          break;
        case ForestKind::ActionClassifier:
          w.u32(static_cast<std::uint32_t>(node.histogram.size()));
          for (double h : node.histogram) w.f64(h);
          break;
      }
    }
  }
}

Forest read_forest(ByteReader& r) {
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw CorruptStream("bad forest magic header");
  }
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw VersionMismatch("unsupported forest format version " + std::to_string(version));
  }
  Forest forest;
  const std::uint8_t kind = r.u8();
  if (kind > 2) throw CorruptStream("unknown forest kind");
  forest.kind = static_cast<ForestKind>(kind);
  const std::uint8_t energy = r.u8();
  if (energy > 1) throw CorruptStream("unknown energy mode");
  forest.config.energy = static_cast<EnergyMode>(energy);
  forest.config.tree_count = static_cast<int>(r.u32());
  forest.config.max_depth = static_cast<int>(r.u32());
  forest.config.candidate_count = static_cast<int>(r.u32());
  forest.config.threshold_count = static_cast<int>(r.u32());
  forest.config.min_leaf = static_cast<int>(r.u32());
  forest.config.bandwidth_omega = r.f64();
  forest.config.bandwidth_nu = r.f64();
  forest.class_count = static_cast<int>(r.u32());
  forest.degenerate_leaves = r.u64();
  const std::uint32_t tree_count = r.u32();
  forest.trees.resize(tree_count);
  for (Tree& tree : forest.trees) {
    const std::uint32_t node_count = r.u32();
    if (node_count == 0) throw CorruptStream("tree with no nodes");
    tree.nodes.resize(node_count);
    for (TreeNode& node : tree.nodes) {
      node.is_leaf = r.u8() != 0;
      if (!node.is_leaf) {
        node.feature = read_feature(r);
        node.threshold = r.f64();
        node.left = static_cast<std::int32_t>(r.u32());
        node.right = static_cast<std::int32_t>(r.u32());
        if (node.left < 0 || node.right < 0 ||
            node.left >= static_cast<std::int32_t>(node_count) ||
            node.right >= static_cast<std::int32_t>(node_count)) {
          throw CorruptStream("tree child index out of range");
        }
        continue;
      }
      switch (forest.kind) {
        case ForestKind::IkRegressor: {
          for (int k = 0; k < 6; ++k) node.mean[k] = r.f64();
          const std::uint32_t nvotes = r.u32();
          node.votes.resize(nvotes);
          for (Vec6& vote : node.votes) {
            for (int k = 0; k < 6; ++k) vote[k] = r.f64();
          }
          break;
        }
        case ForestKind::Metric:
          node.mean[0] = r.f64();
          break;
        case ForestKind::ActionClassifier: {
          const std::uint32_t bins = r.u32();
          if (bins != static_cast<std::uint32_t>(forest.class_count)) {
            throw CorruptStream("leaf histogram size does not match class count");
          }
          node.histogram.resize(bins);
          for (double& h : node.histogram) h = r.f64();
          break;
        }
      }
    }
  }
  return forest;
}

std::vector<std::uint8_t> serialize_forest(const Forest& forest) {
  ByteWriter w;
  write_forest(w, forest);
  return w.data();
}

Forest deserialize_forest(const std::uint8_t* data, std::size_t size) {
  ByteReader r(data, size);
  Forest forest = read_forest(r);
  if (!r.done()) throw CorruptStream("trailing bytes after forest data");
  return forest;
}

Forest deserialize_forest(const std::vector<std::uint8_t>& bytes) {
  return deserialize_forest(bytes.data(), bytes.size());
}

void save_forest(const Forest& forest, const std::string& path) {
  write_file_atomic(path, serialize_forest(forest));
}

Forest load_forest(const std::string& path) {
  return deserialize_forest(read_file(path));
}

}  // namespace liepose
