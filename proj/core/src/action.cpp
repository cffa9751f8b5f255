#include "liepose/action.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "liepose/errors.hpp"
#include "liepose/io_util.hpp"
#include "liepose/parallel.hpp"

namespace liepose {

namespace {

constexpr char kActionMagic[4] = {'L', 'X', 'A', '1'};
constexpr std::uint32_t kActionVersion = 1;
constexpr std::uint64_t kTagActionForest = 0xE1;

// Relative transforms between adjacent frames / joints sit far from the log
// branch cut in any physically continuous sequence; a pathological frame
// degrades to a zero descriptor instead of failing extraction.
Vec6 safe_log(const RigidTransform& g) {
  try {
    return log_se3(g).to_vector();
  } catch (const AngleNearPi&) {
    return Vec6::Zero();
  }
}

class AxisFeatureSpace final : public FeatureSpace {
 public:
  AxisFeatureSpace(int dim, const std::vector<std::vector<double>>& rows)
      : dim_(dim), rows_(rows) {}

  int example_count() const override { return static_cast<int>(rows_.size()); }

  FeatureDesc sample(RngStream& rng) const override {
    FeatureDesc f;
    f.axis = static_cast<std::int32_t>(rng.uniform_index(static_cast<std::uint64_t>(dim_)));
    return f;
  }

  double evaluate(const FeatureDesc& f, int example) const override {
    return rows_[static_cast<std::size_t>(example)][static_cast<std::size_t>(f.axis)];
  }

 private:
  int dim_;
  const std::vector<std::vector<double>>& rows_;
};

void check_action_axes(const Forest& forest, int dim) {
  for (const Tree& tree : forest.trees) {
    for (const TreeNode& node : tree.nodes) {
      if (node.is_leaf) continue;
      if (node.feature.axis < 0 || node.feature.axis >= dim) {
        throw CorruptStream("action model: split axis out of range");
      }
    }
  }
}

}  // namespace

std::vector<std::string> fish_action_catalogue() {
  return {"Scoot", "J-turn", "C-turn", "R-turn", "Surface", "Dive", "Zigzag", "Thrash", "Freeze"};
}

std::vector<std::string> synthetic_action_catalogue() {
  return {"straight", "left-turn", "right-turn", "freeze"};
}

PoseSequence normalize_sequence(const PoseSequence& seq, int target_len) {
  if (target_len < 2) {
    throw InvalidArgument("normalization target must be at least 2 frames");
  }
  const int n = static_cast<int>(seq.frames.size());
  if (n < 2) {
    throw TooShort("sequence has " + std::to_string(n) + " frame(s); need at least 2");
  }
  const std::size_t joint_count = seq.frames[0].pose.twists.size();
  for (const TimedPose& tp : seq.frames) {
    if (tp.pose.twists.size() != joint_count) {
      throw InvalidArgument("sequence frames disagree in joint count");
    }
  }

  PoseSequence out;
  out.label = seq.label;
  out.frames.reserve(static_cast<std::size_t>(target_len));
  for (int k = 0; k < target_len; ++k) {
    // k*(n-1) is an exact integer product, so integer source indices (the
    // endpoints always, every index when lengths divide) compare f == 0 and
    // copy their frame bit-exactly.
    const double s =
        static_cast<double>(k) * static_cast<double>(n - 1) / static_cast<double>(target_len - 1);
    const int a = static_cast<int>(std::floor(s));
    const double f = s - static_cast<double>(a);
    if (f == 0.0) {
      out.frames.push_back(seq.frames[static_cast<std::size_t>(a)]);
      continue;
    }
    const TimedPose& pa = seq.frames[static_cast<std::size_t>(a)];
    const TimedPose& pb = seq.frames[static_cast<std::size_t>(a) + 1];
    TimedPose tp;
    tp.time = (1.0 - f) * pa.time + f * pb.time;
    tp.pose = pa.pose;
    tp.pose.scale = (1.0 - f) * pa.pose.scale + f * pb.pose.scale;
    try {
      const RigidTransform ga = exp_se3(pa.pose.twists[0]);
      const RigidTransform gb = exp_se3(pb.pose.twists[0]);
      tp.pose.twists[0] = log_se3(geodesic(ga, gb, f));
    } catch (const AngleNearPi&) {
      // Antipodal endpoints have no unique geodesic; snap to the nearer one.
      tp.pose.twists[0] = (f < 0.5 ? pa : pb).pose.twists[0];
    }
    for (std::size_t j = 1; j < joint_count; ++j) {
      tp.pose.twists[j] = pa.pose.twists[j] * (1.0 - f) + pb.pose.twists[j] * f;
    }
    out.frames.push_back(std::move(tp));
  }
  return out;
}

int frame_descriptor_dimension(const SkeletalModel& model, FeatureMode mode, bool compact) {
  if (mode == FeatureMode::JointPosition) {
    if (compact) {
      throw InvalidArgument("compact grouping applies to tangent features only");
    }
    return 3 * model.joint_count();
  }
  if (compact) {
    if (model.joint_count() < 11) {
      throw InvalidArgument("compact grouping needs at least 11 joints");
    }
    return 18;
  }
  return 6 + 12 * (model.joint_count() - 1) + 6;
}

int feature_dimension(const SkeletalModel& model, FeatureMode mode, bool compact) {
  return 7 * 2 * frame_descriptor_dimension(model, mode, compact);
}

std::vector<double> extract_features(const SkeletalModel& model, const PoseSequence& seq,
                                     FeatureMode mode, bool compact) {
  const int frames = static_cast<int>(seq.frames.size());
  if (frames != kNormalizedLength) {
    throw InvalidArgument("feature extraction needs a normalized " +
                          std::to_string(kNormalizedLength) + "-frame sequence");
  }
  const int dim = frame_descriptor_dimension(model, mode, compact);
  const int joint_count = model.joint_count();

  std::vector<FkResult> fk;
  fk.reserve(static_cast<std::size_t>(frames));
  for (const TimedPose& tp : seq.frames) {
    fk.push_back(forward_kinematics(model, tp.pose));
  }

  std::vector<std::vector<double>> desc(
      static_cast<std::size_t>(frames), std::vector<double>(static_cast<std::size_t>(dim), 0.0));

  if (mode == FeatureMode::JointPosition) {
    for (int t = 0; t < frames; ++t) {
      auto& row = desc[static_cast<std::size_t>(t)];
      for (int j = 0; j < joint_count; ++j) {
        const Vec3& p = fk[static_cast<std::size_t>(t)].positions[static_cast<std::size_t>(j)];
        row[static_cast<std::size_t>(3 * j + 0)] = p.x();
        row[static_cast<std::size_t>(3 * j + 1)] = p.y();
        row[static_cast<std::size_t>(3 * j + 2)] = p.z();
      }
    }
  } else {
    // Frame-to-frame logarithms per joint; the final frame repeats the last
    // available delta so every frame carries a full descriptor.
    std::vector<std::vector<Vec6>> temporal(
        static_cast<std::size_t>(joint_count),
        std::vector<Vec6>(static_cast<std::size_t>(frames), Vec6::Zero()));
    for (int j = 0; j < joint_count; ++j) {
      for (int t = 0; t + 1 < frames; ++t) {
        temporal[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)] =
            safe_log(fk[static_cast<std::size_t>(t)].transforms[static_cast<std::size_t>(j)]
                         .inverse() *
                     fk[static_cast<std::size_t>(t) + 1].transforms[static_cast<std::size_t>(j)]);
      }
      temporal[static_cast<std::size_t>(j)][static_cast<std::size_t>(frames) - 1] =
          temporal[static_cast<std::size_t>(j)][static_cast<std::size_t>(frames) - 2];
    }

    for (int t = 0; t < frames; ++t) {
      auto& row = desc[static_cast<std::size_t>(t)];
      const FkResult& frame = fk[static_cast<std::size_t>(t)];
      int cursor = 0;
      const auto put6 = [&row, &cursor](const Vec6& v) {
        for (int i = 0; i < 6; ++i) row[static_cast<std::size_t>(cursor++)] = v[i];
      };
      put6(temporal[0][static_cast<std::size_t>(t)]);
      if (compact) {
        Vec6 head = Vec6::Zero();
        Vec6 tail = Vec6::Zero();
        int head_count = 0;
        int tail_count = 0;
        for (int j = 1; j < joint_count; ++j) {
          const int parent = model.joint(j).parent;
          const Vec6 spatial =
              safe_log(frame.transforms[static_cast<std::size_t>(parent)].inverse() *
                       frame.transforms[static_cast<std::size_t>(j)]);
          if (j <= 9) {
            head += spatial;
            ++head_count;
          } else {
            tail += spatial;
            ++tail_count;
          }
        }
        put6(head / head_count);
        put6(tail / tail_count);
      } else {
        for (int j = 1; j < joint_count; ++j) {
          const int parent = model.joint(j).parent;
          put6(safe_log(frame.transforms[static_cast<std::size_t>(parent)].inverse() *
                        frame.transforms[static_cast<std::size_t>(j)]));
          put6(temporal[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)]);
        }
        put6(seq.frames[static_cast<std::size_t>(t)].pose.twists[0].to_vector());
      }
    }
  }

  // {4,2,1} temporal pyramid: per segment the coordinate means, then the
  // coordinate standard deviations (n-1 denominator).
  constexpr int kSegmentStart[7] = {0, 8, 16, 24, 0, 16, 0};
  constexpr int kSegmentLength[7] = {8, 8, 8, 8, 16, 16, 32};
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(7 * 2 * dim));
  std::vector<double> means(static_cast<std::size_t>(dim));
  for (int s = 0; s < 7; ++s) {
    const int begin = kSegmentStart[s];
    const int length = kSegmentLength[s];
    for (int d = 0; d < dim; ++d) {
      double sum = 0.0;
      for (int t = begin; t < begin + length; ++t) {
        sum += desc[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)];
      }
      means[static_cast<std::size_t>(d)] = sum / length;
      out.push_back(means[static_cast<std::size_t>(d)]);
    }
    for (int d = 0; d < dim; ++d) {
      double ss = 0.0;
      for (int t = begin; t < begin + length; ++t) {
        const double delta =
            desc[static_cast<std::size_t>(t)][static_cast<std::size_t>(d)] -
            means[static_cast<std::size_t>(d)];
        ss += delta * delta;
      }
      out.push_back(std::sqrt(std::max(0.0, ss / (length - 1))));
    }
  }
  return out;
}

ActionModel train_action(const SkeletalModel& model, const std::vector<PoseSequence>& sequences,
                         const std::vector<std::string>& class_names,
                         const ActionTrainConfig& config, std::uint64_t seed) {
  if (sequences.empty()) {
    throw InvalidArgument("action training needs at least one sequence");
  }
  if (class_names.empty()) {
    throw InvalidArgument("action training needs a class catalogue");
  }
  const int class_count = static_cast<int>(class_names.size());
  TrainingLabels labels;
  labels.class_count = class_count;
  labels.classes.resize(sequences.size());
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const int label = sequences[i].label;
    if (label < 0 || label >= class_count) {
      throw InvalidArgument("sequence " + std::to_string(i) + " has label " +
                            std::to_string(label) + " outside the catalogue");
    }
    labels.classes[i] = label;
  }

  const int dim = feature_dimension(model, config.mode, config.compact);
  std::vector<std::vector<double>> rows(sequences.size());
  parallel_for(static_cast<int>(sequences.size()), config.threads, [&](int i) {
    rows[static_cast<std::size_t>(i)] =
        extract_features(model, normalize_sequence(sequences[static_cast<std::size_t>(i)]),
                         config.mode, config.compact);
  });

  AxisFeatureSpace space(dim, rows);
  ForestConfig fc = config.forest;
  fc.threads = config.threads;

  ActionModel out(model);
  out.forest = train_forest(space, labels, ForestKind::ActionClassifier, fc,
                            substream(seed, kTagActionForest));
  out.class_names = class_names;
  out.mode = config.mode;
  out.compact = config.compact;
  out.feature_dim = dim;
  return out;
}

int classify(const ActionModel& model, const std::vector<double>& features,
             std::vector<double>* histogram) {
  if (static_cast<int>(features.size()) != model.feature_dim) {
    throw DimensionMismatch("feature vector has " + std::to_string(features.size()) +
                            " coordinates; the classifier expects " +
                            std::to_string(model.feature_dim));
  }
  return predict_class(
      model.forest,
      [&](const FeatureDesc& f) { return features[static_cast<std::size_t>(f.axis)]; },
      histogram);
}

int classify_sequence(const ActionModel& model, const PoseSequence& seq,
                      std::vector<double>* histogram) {
  const PoseSequence normalized = normalize_sequence(seq);
  return classify(model, extract_features(model.model, normalized, model.mode, model.compact),
                  histogram);
}

void save_action_model(const ActionModel& model, const std::string& path) {
  ByteWriter w;
  w.bytes(kActionMagic, sizeof(kActionMagic));
  w.u32(kActionVersion);
  w.str(model.model.to_json());
  w.u8(static_cast<std::uint8_t>(model.mode));
  w.u8(model.compact ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(model.feature_dim));
  w.u32(static_cast<std::uint32_t>(model.class_names.size()));
  for (const std::string& name : model.class_names) {
    w.str(name);
  }
  write_forest(w, model.forest);
  write_file_atomic(path, w.data());
}

ActionModel load_action_model(const std::string& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const MissingInput&) {
    throw ModelNotFound("action model not found: " + path);
  }
  ByteReader r(bytes);

  char magic[4];
  r.bytes(magic, sizeof(magic));
  if (std::string(magic, 4) != std::string(kActionMagic, 4)) {
    throw CorruptStream("action model: bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kActionVersion) {
    throw VersionMismatch("action model: unsupported version " + std::to_string(version));
  }

  ActionModel out(SkeletalModel::from_json(r.str()));
  const std::uint8_t mode = r.u8();
  if (mode > 1) {
    throw CorruptStream("action model: invalid feature mode");
  }
  out.mode = static_cast<FeatureMode>(mode);
  const std::uint8_t compact = r.u8();
  if (compact > 1) {
    throw CorruptStream("action model: invalid compact flag");
  }
  out.compact = compact == 1;
  if (out.mode == FeatureMode::JointPosition && out.compact) {
    throw CorruptStream("action model: compact joint-position layout does not exist");
  }
  out.feature_dim = static_cast<int>(r.u32());
  const std::uint32_t class_count = r.u32();
  out.class_names.reserve(class_count);
  for (std::uint32_t i = 0; i < class_count; ++i) {
    out.class_names.push_back(r.str());
  }
  out.forest = read_forest(r);
  if (!r.done()) {
    throw CorruptStream("action model: trailing bytes");
  }
  if (out.forest.kind != ForestKind::ActionClassifier) {
    throw CorruptStream("action model: forest has the wrong kind");
  }
  if (out.forest.class_count != static_cast<int>(class_count) || class_count == 0) {
    throw CorruptStream("action model: class catalogue does not match the forest");
  }
  if (out.feature_dim != feature_dimension(out.model, out.mode, out.compact)) {
    throw CorruptStream("action model: feature dimension does not match the skeletal model");
  }
  check_action_axes(out.forest, out.feature_dim);
  return out;
}

std::string sequence_to_jsonl(const PoseSequence& seq) {
  std::string out;
  for (const TimedPose& tp : seq.frames) {
    nlohmann::json line;
    line["t"] = tp.time;
    line["scale"] = tp.pose.scale;
    nlohmann::json twists = nlohmann::json::array();
    for (const TwistVector& x : tp.pose.twists) {
      const Vec6 v = x.to_vector();
      twists.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
    }
    line["twists"] = std::move(twists);
    if (seq.label >= 0) {
      line["label"] = seq.label;
    }
    out += line.dump();
    out += '\n';
  }
  return out;
}

PoseSequence sequence_from_jsonl(const std::string& text, int joint_count) {
  PoseSequence seq;
  std::istringstream stream(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      TimedPose tp;
      tp.time = j.at("t").get<double>();
      tp.pose.scale = j.at("scale").get<double>();
      const auto& twists = j.at("twists");
      if (static_cast<int>(twists.size()) != joint_count) {
        throw CorruptStream("sequence line " + std::to_string(line_no) + " has " +
                            std::to_string(twists.size()) + " twists; expected " +
                            std::to_string(joint_count));
      }
      tp.pose.twists.reserve(static_cast<std::size_t>(joint_count));
      for (const auto& entry : twists) {
        if (entry.size() != 6) {
          throw CorruptStream("sequence line " + std::to_string(line_no) +
                              " has a twist that is not 6 numbers");
        }
        Vec6 v;
        for (int i = 0; i < 6; ++i) v[i] = entry[static_cast<std::size_t>(i)].get<double>();
        tp.pose.twists.push_back(TwistVector::from_vector(v));
      }
      if (j.contains("label")) {
        const int label = j["label"].get<int>();
        if (seq.label >= 0 && label != seq.label) {
          throw CorruptStream("sequence carries conflicting labels");
        }
        seq.label = label;
      }
      seq.frames.push_back(std::move(tp));
    } catch (const nlohmann::json::exception& e) {
      throw CorruptStream("sequence line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return seq;
}

void save_sequence(const PoseSequence& seq, const std::string& path) {
  write_file_atomic(path, sequence_to_jsonl(seq));
}

PoseSequence load_sequence(const std::string& path, int joint_count) {
  return sequence_from_jsonl(read_text_file(path), joint_count);
}

}  // namespace liepose
