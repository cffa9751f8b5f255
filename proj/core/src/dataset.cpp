#include "liepose/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <utility>

#include "json.hpp"
#include "liepose/errors.hpp"
#include "liepose/io_util.hpp"
#include "liepose/lie.hpp"

namespace liepose {

namespace {

constexpr std::uint64_t kTagPoseItem = 0xF1;
constexpr std::uint64_t kTagMotion = 0xF2;
constexpr std::uint64_t kTagFrameNoise = 0xF3;
constexpr std::uint64_t kTagAction = 0xF4;
constexpr std::uint64_t kTagSequenceAttempt = 0xF5;
constexpr int kMaxRenderAttempts = 100;

std::string indexed_path(const std::string& dir, const char* stem, int index, const char* ext) {
  char name[64];
  std::snprintf(name, sizeof(name), "%s_%05d.%s", stem, index, ext);
  return dir + "/" + name;
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create directory " + dir + " (" + ec.message() + ")");
  }
}

nlohmann::json camera_to_json(const CameraModel& cam) {
  nlohmann::json j;
  j["focal"] = cam.focal;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["width"] = cam.width;
  j["height"] = cam.height;
  j["near_mm"] = cam.near_mm;
  j["far_mm"] = cam.far_mm;
  return j;
}

CameraModel camera_from_json(const nlohmann::json& j) {
  CameraModel cam;
  cam.focal = j.at("focal").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  cam.near_mm = j.at("near_mm").get<double>();
  cam.far_mm = j.at("far_mm").get<double>();
  return cam;
}

nlohmann::json twists_to_json(const Pose& pose) {
  nlohmann::json arr = nlohmann::json::array();
  for (const TwistVector& x : pose.twists) {
    const Vec6 v = x.to_vector();
    arr.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
  }
  return arr;
}

Pose pose_from_json_fields(const nlohmann::json& j, int joint_count) {
  Pose pose;
  pose.scale = j.at("scale").get<double>();
  const auto& twists = j.at("twists");
  if (static_cast<int>(twists.size()) != joint_count) {
    throw CorruptStream("sidecar has " + std::to_string(twists.size()) + " twists; expected " +
                        std::to_string(joint_count));
  }
  pose.twists.reserve(static_cast<std::size_t>(joint_count));
  for (const auto& entry : twists) {
    if (entry.size() != 6) {
      throw CorruptStream("sidecar twist is not 6 numbers");
    }
    Vec6 v;
    for (int i = 0; i < 6; ++i) v[i] = entry[static_cast<std::size_t>(i)].get<double>();
    pose.twists.push_back(TwistVector::from_vector(v));
  }
  return pose;
}

void write_manifest(const std::string& dir, const SkeletalModel& model, const CameraModel& camera,
                    const std::string& kind, int count, double noise_mm, std::uint64_t seed,
                    const std::vector<std::string>& class_names) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["kind"] = kind;
  j["preset"] = model.name();
  j["count"] = count;
  j["noise_mm"] = noise_mm;
  j["seed"] = seed;
  j["camera"] = camera_to_json(camera);
  j["model"] = nlohmann::json::parse(model.to_json());
  if (!class_names.empty()) {
    j["class_names"] = class_names;
  }
  write_file_atomic(dir + "/manifest.json", j.dump(2));
}

/// Sets one articulated coordinate of a non-base joint.
void bump_joint_coordinate(Pose* pose, int joint, int coord, double value) {
  Vec6 x = pose->twists[static_cast<std::size_t>(joint)].to_vector();
  x[coord] = value;
  pose->twists[static_cast<std::size_t>(joint)] = TwistVector::from_vector(x);
}

}  // namespace

DatasetConfig DatasetConfig::preset_config(const std::string& name) {
  DatasetConfig c;
  if (name == "fish") {
    return c;
  }
  if (name == "mouse" || name == "hand") {
    c.joint_angle = 0.25;
    c.z_low = 600.0;
    c.z_high = 900.0;
    c.xy = 80.0;
    return c;
  }
  throw InvalidArgument("unknown dataset preset: " + name);
}

Pose sample_pose(const SkeletalModel& model, const DatasetConfig& config, RngStream& rng) {
  Pose pose = Pose::rest(model);
  pose.scale = rng.uniform(config.scale_low, config.scale_high);
  const double tilt_x = rng.uniform(-config.tilt, config.tilt);
  const double tilt_y = rng.uniform(-config.tilt, config.tilt);
  const double theta = rng.uniform(-kPi, kPi);
  const Vec3 omega(tilt_x, tilt_y, theta);
  const double px = rng.uniform(-config.xy, config.xy);
  const double py = rng.uniform(-config.xy, config.xy);
  const double pz = rng.uniform(config.z_low, config.z_high);
  // The base twist is assembled from the rotation and the target position
  // directly (nu = V(omega)^-1 p), so no group logarithm is involved.
  pose.twists[0] = TwistVector(omega, se3_translation_factor_inverse(omega) * Vec3(px, py, pz));
  for (int j = 1; j < model.joint_count(); ++j) {
    const auto& mask = model.joint(j).dof_mask;
    for (int d = 0; d < 6; ++d) {
      if (mask[static_cast<std::size_t>(d)]) {
        bump_joint_coordinate(&pose, j, d, rng.uniform(-config.joint_angle, config.joint_angle));
      }
    }
  }
  return pose;
}

GeneratedItem generate_item(const SkeletalModel& model, const CameraModel& camera,
                            const DatasetConfig& config, std::uint64_t seed, int index) {
  for (int attempt = 0; attempt < kMaxRenderAttempts; ++attempt) {
    RngStream rng(substream(seed, kTagPoseItem, static_cast<std::uint64_t>(index),
                            static_cast<std::uint64_t>(attempt)));
    Pose pose = sample_pose(model, config, rng);
    DepthImage image(0, 0);
    try {
      image = render_depth(model, pose, camera);
    } catch (const OffScreen&) {
      continue;
    }
    if (config.noise_mm > 0.0) {
      add_depth_noise(image, config.noise_mm, rng);
    }
    GeneratedItem item{std::move(image), std::move(pose)};
    return item;
  }
  throw OffScreen("item " + std::to_string(index) + " never landed on screen after " +
                  std::to_string(kMaxRenderAttempts) + " attempts");
}

std::vector<TrainingItem> generate_training_items(const SkeletalModel& model,
                                                  const CameraModel& camera,
                                                  const DatasetConfig& config,
                                                  std::uint64_t seed) {
  std::vector<TrainingItem> items;
  items.reserve(static_cast<std::size_t>(config.count));
  for (int i = 0; i < config.count; ++i) {
    const GeneratedItem gen = generate_item(model, camera, config, seed, i);
    items.push_back(make_training_item(gen.image, gen.pose, camera));
  }
  return items;
}

void generate_dataset(const SkeletalModel& model, const CameraModel& camera,
                      const DatasetConfig& config, std::uint64_t seed,
                      const std::string& out_dir) {
  ensure_directory(out_dir);
  for (int i = 0; i < config.count; ++i) {
    const GeneratedItem gen = generate_item(model, camera, config, seed, i);
    write_pgm16(gen.image, item_image_path(out_dir, i));
    const FkResult fk = forward_kinematics(model, gen.pose);
    nlohmann::json side;
    side["format_version"] = 1;
    side["scale"] = gen.pose.scale;
    side["twists"] = twists_to_json(gen.pose);
    nlohmann::json positions = nlohmann::json::array();
    for (const Vec3& p : fk.positions) {
      positions.push_back({p.x(), p.y(), p.z()});
    }
    side["positions"] = std::move(positions);
    write_file_atomic(item_sidecar_path(out_dir, i), side.dump());
  }
  write_manifest(out_dir, model, camera, "pose", config.count, config.noise_mm, seed, {});
}

PoseSequence generate_motion_sequence(const SkeletalModel& model, const DatasetConfig& config,
                                      const SequenceMotionConfig& motion, std::uint64_t seed) {
  if (motion.frames < 1) {
    throw InvalidArgument("a motion sequence needs at least one frame");
  }
  RngStream rng(substream(seed, kTagMotion));
  Pose pose = sample_pose(model, config, rng);
  PoseSequence seq;
  seq.frames.reserve(static_cast<std::size_t>(motion.frames));
  seq.frames.push_back(TimedPose{0.0, pose});
  for (int f = 1; f < motion.frames; ++f) {
    Vec6 step;
    step[0] = rng.normal(0.0, motion.base_step_omega);
    step[1] = rng.normal(0.0, motion.base_step_omega);
    step[2] = rng.normal(0.0, motion.base_step_omega);
    step[3] = rng.normal(0.0, motion.base_step_nu);
    step[4] = rng.normal(0.0, motion.base_step_nu);
    step[5] = rng.normal(0.0, motion.base_step_nu);
    compose_joint_update(model, 0, step, &pose);
    for (int j = 1; j < model.joint_count(); ++j) {
      const auto& mask = model.joint(j).dof_mask;
      for (int d = 0; d < 6; ++d) {
        if (!mask[static_cast<std::size_t>(d)]) continue;
        const double current = pose.twists[static_cast<std::size_t>(j)].to_vector()[d];
        const double next = std::clamp(current + rng.normal(0.0, motion.joint_step),
                                       -config.joint_angle, config.joint_angle);
        bump_joint_coordinate(&pose, j, d, next);
      }
    }
    seq.frames.push_back(TimedPose{f / 30.0, pose});
  }
  return seq;
}

DepthImage render_sequence_frame(const SkeletalModel& model, const CameraModel& camera,
                                 const Pose& pose, double noise_mm, std::uint64_t seed,
                                 int index) {
  DepthImage image = render_depth(model, pose, camera);
  if (noise_mm > 0.0) {
    RngStream rng(substream(seed, kTagFrameNoise, static_cast<std::uint64_t>(index)));
    add_depth_noise(image, noise_mm, rng);
  }
  return image;
}

void generate_sequence_dataset(const SkeletalModel& model, const CameraModel& camera,
                               const DatasetConfig& config, const SequenceMotionConfig& motion,
                               std::uint64_t seed, const std::string& out_dir) {
  ensure_directory(out_dir);
  for (int attempt = 0; attempt < kMaxRenderAttempts; ++attempt) {
    const PoseSequence seq = generate_motion_sequence(
        model, config, motion, substream(seed, kTagSequenceAttempt, static_cast<std::uint64_t>(attempt)));
    // Validation pass: the whole motion must stay on screen before anything
    // is written, so a rejected attempt leaves no partial files behind.
    bool on_screen = true;
    for (int f = 0; f < motion.frames && on_screen; ++f) {
      try {
        (void)render_depth(model, seq.frames[static_cast<std::size_t>(f)].pose, camera);
      } catch (const OffScreen&) {
        on_screen = false;
      }
    }
    if (!on_screen) continue;
    for (int f = 0; f < motion.frames; ++f) {
      const DepthImage image = render_sequence_frame(
          model, camera, seq.frames[static_cast<std::size_t>(f)].pose, config.noise_mm, seed, f);
      write_pgm16(image, sequence_frame_path(out_dir, f));
    }
    save_sequence(seq, sequence_truth_path(out_dir));
    write_manifest(out_dir, model, camera, "sequence", motion.frames, config.noise_mm, seed, {});
    return;
  }
  throw OffScreen("no sampled motion stayed on screen after " +
                  std::to_string(kMaxRenderAttempts) + " attempts");
}

PoseSequence generate_action_sequence(const SkeletalModel& model, const DatasetConfig& config,
                                      const ActionDatasetConfig& actions, std::uint64_t seed,
                                      int index) {
  if (actions.min_len < 2 || actions.max_len < actions.min_len) {
    throw InvalidArgument("action clip length range is invalid");
  }
  RngStream rng(substream(seed, kTagAction, static_cast<std::uint64_t>(index)));
  PoseSequence seq;
  seq.label = index % 4;
  const int length =
      actions.min_len +
      static_cast<int>(rng.uniform_index(
          static_cast<std::uint64_t>(actions.max_len - actions.min_len + 1)));

  Pose pose = sample_pose(model, config, rng);
  seq.frames.reserve(static_cast<std::size_t>(length));
  seq.frames.push_back(TimedPose{0.0, pose});

  // Per-class motion parameters; every class draws the same variates so the
  // classes differ only in their motion statistics.
  const bool frozen = seq.label == 3;
  const double turn = seq.label == 1 ? actions.turn_rate : seq.label == 2 ? -actions.turn_rate : 0.0;
  const double speed = frozen ? 0.0 : actions.speed;
  const double heading_noise = frozen ? 0.2 * actions.wiggle : actions.wiggle;
  const double drift_noise = frozen ? 0.05 : actions.drift_nu;
  const double joint_noise = frozen ? 0.1 * actions.joint_step : actions.joint_step;
  const double joint_drift =
      seq.label == 1 ? actions.joint_drift : seq.label == 2 ? -actions.joint_drift : 0.0;

  for (int f = 1; f < length; ++f) {
    Vec6 step = Vec6::Zero();
    step[2] = turn + rng.normal(0.0, heading_noise);
    step[3] = rng.normal(0.0, drift_noise);
    step[4] = speed + rng.normal(0.0, drift_noise);
    step[5] = rng.normal(0.0, drift_noise);
    compose_joint_update(model, 0, step, &pose);
    for (int j = 1; j < model.joint_count(); ++j) {
      const auto& mask = model.joint(j).dof_mask;
      for (int d = 0; d < 6; ++d) {
        if (!mask[static_cast<std::size_t>(d)]) continue;
        const double current = pose.twists[static_cast<std::size_t>(j)].to_vector()[d];
        const double next = std::clamp(current + joint_drift + rng.normal(0.0, joint_noise),
                                       -config.joint_angle, config.joint_angle);
        bump_joint_coordinate(&pose, j, d, next);
      }
    }
    seq.frames.push_back(TimedPose{f / 30.0, pose});
  }
  return seq;
}

void generate_action_dataset(const SkeletalModel& model, const DatasetConfig& config,
                             const ActionDatasetConfig& actions, std::uint64_t seed,
                             const std::string& out_dir) {
  ensure_directory(out_dir);
  for (int i = 0; i < actions.sequence_count; ++i) {
    save_sequence(generate_action_sequence(model, config, actions, seed, i),
                  action_sequence_path(out_dir, i));
  }
  const CameraModel camera;
  write_manifest(out_dir, model, camera, "action", actions.sequence_count, 0.0, seed,
                 synthetic_action_catalogue());
}

DatasetManifest load_manifest(const std::string& dir) {
  const std::string text = read_text_file(dir + "/manifest.json");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptStream(std::string("manifest parse failure: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != 1) {
      throw VersionMismatch("unsupported manifest version " + std::to_string(version));
    }
    DatasetManifest m(SkeletalModel::from_json(j.at("model").dump()));
    m.kind = j.at("kind").get<std::string>();
    if (m.kind != "pose" && m.kind != "sequence" && m.kind != "action") {
      throw CorruptStream("manifest kind must be pose, sequence, or action");
    }
    m.preset = j.at("preset").get<std::string>();
    m.count = j.at("count").get<int>();
    m.noise_mm = j.at("noise_mm").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.camera = camera_from_json(j.at("camera"));
    if (j.contains("class_names")) {
      m.class_names = j["class_names"].get<std::vector<std::string>>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptStream(std::string("manifest schema failure: ") + e.what());
  }
}

std::string item_image_path(const std::string& dir, int index) {
  return indexed_path(dir, "img", index, "pgm");
}

std::string item_sidecar_path(const std::string& dir, int index) {
  return indexed_path(dir, "img", index, "json");
}

std::string sequence_frame_path(const std::string& dir, int index) {
  return indexed_path(dir, "frame", index, "pgm");
}

std::string sequence_truth_path(const std::string& dir) { return dir + "/truth.jsonl"; }

std::string action_sequence_path(const std::string& dir, int index) {
  return indexed_path(dir, "seq", index, "jsonl");
}

LoadedItem load_item(const std::string& dir, const DatasetManifest& manifest, int index) {
  LoadedItem item;
  item.image = read_pgm16(item_image_path(dir, index));
  const std::string text = read_text_file(item_sidecar_path(dir, index));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptStream(std::string("sidecar parse failure: ") + e.what());
  }
  try {
    item.truth = pose_from_json_fields(j, manifest.model.joint_count());
    const auto& positions = j.at("positions");
    if (static_cast<int>(positions.size()) != manifest.model.joint_count()) {
      throw CorruptStream("sidecar position count does not match the model");
    }
    item.truth_positions.reserve(positions.size());
    for (const auto& p : positions) {
      if (p.size() != 3) {
        throw CorruptStream("sidecar position is not 3 numbers");
      }
      item.truth_positions.emplace_back(p[0].get<double>(), p[1].get<double>(),
                                        p[2].get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptStream(std::string("sidecar schema failure: ") + e.what());
  }
  return item;
}

EvalReport make_report(const std::vector<double>& errors, int threshold_count) {
  if (errors.empty()) {
    throw InvalidArgument("a report needs at least one error value");
  }
  if (threshold_count < 2) {
    throw InvalidArgument("a report needs at least two thresholds");
  }
  EvalReport report;
  report.errors = errors;
  double sum = 0.0;
  double max_error = 0.0;
  for (double e : errors) {
    sum += e;
    max_error = std::max(max_error, e);
  }
  report.mean = sum / static_cast<double>(errors.size());

  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  report.ced.reserve(static_cast<std::size_t>(threshold_count));
  const auto n = static_cast<double>(sorted.size());
  for (int k = 0; k < threshold_count; ++k) {
    const double threshold =
        max_error * static_cast<double>(k) / static_cast<double>(threshold_count - 1);
    const auto below =
        std::upper_bound(sorted.begin(), sorted.end(), threshold) - sorted.begin();
    report.ced.emplace_back(threshold, static_cast<double>(below) / n);
  }
  return report;
}

namespace {

std::string csv_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void write_errors_csv(const std::string& path, const std::vector<double>& errors) {
  std::string out = "index,error_mm\n";
  for (std::size_t i = 0; i < errors.size(); ++i) {
    out += std::to_string(i) + "," + csv_value(errors[i]) + "\n";
  }
  write_file_atomic(path, out);
}

void write_ced_csv(const std::string& path,
                   const std::vector<std::pair<double, double>>& ced) {
  std::string out = "threshold_mm,fraction\n";
  for (const auto& [threshold, fraction] : ced) {
    out += csv_value(threshold) + "," + csv_value(fraction) + "\n";
  }
  write_file_atomic(path, out);
}

void write_summary_csv(const std::string& path,
                       const std::vector<std::pair<std::string, double>>& rows) {
  std::string out = "metric,value\n";
  for (const auto& [name, value] : rows) {
    out += name + "," + csv_value(value) + "\n";
  }
  write_file_atomic(path, out);
}

void write_confusion_csv(const std::string& path, const std::vector<std::string>& class_names,
                         const std::vector<std::vector<int>>& matrix) {
  if (matrix.size() != class_names.size()) {
    throw InvalidArgument("confusion matrix does not match the class catalogue");
  }
  std::string out = "truth";
  for (const std::string& name : class_names) {
    out += "," + name;
  }
  out += "\n";
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    if (matrix[i].size() != class_names.size()) {
      throw InvalidArgument("confusion matrix row " + std::to_string(i) + " has the wrong width");
    }
    out += class_names[i];
    for (int count : matrix[i]) {
      out += "," + std::to_string(count);
    }
    out += "\n";
  }
  write_file_atomic(path, out);
}

}  // namespace liepose
