// liepose: dataset synthesis, model training, estimation, tracking, action
// recognition, evaluation, and benchmarking from one binary.
//
// Exit codes: 0 success, 1 usage error, 2 missing input file, 3 corrupt or
// otherwise unusable data. Every failure prints a single JSON line to stderr
// with fields "kind" and "message".

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "liepose/action.hpp"
#include "liepose/dataset.hpp"
#include "liepose/errors.hpp"
#include "liepose/io_util.hpp"
#include "liepose/parallel.hpp"
#include "liepose/pose_estimation.hpp"
#include "liepose/rng.hpp"
#include "liepose/tracker.hpp"

namespace {

using namespace liepose;

constexpr std::uint64_t kTagCliEstimate = 0xA1;
constexpr std::uint64_t kTagCliTrackInit = 0xA2;
constexpr std::uint64_t kTagCliBench = 0xA3;

void emit_error(const std::string& kind, const std::string& message) {
  const nlohmann::json j{{"kind", kind}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

void make_output_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create directory " + dir + " (" + ec.message() + ")");
  }
}

DatasetManifest load_manifest_of_kind(const std::string& dir, const std::string& kind,
                                      const std::string& command) {
  DatasetManifest manifest = load_manifest(dir);
  if (manifest.kind != kind) {
    throw InvalidArgument(command + " needs a " + kind + " dataset; " + dir + " holds kind '" +
                          manifest.kind + "'");
  }
  return manifest;
}

EnergyMode parse_energy(const std::string& name) {
  return name == "literal" ? EnergyMode::Literal : EnergyMode::Variance;
}

FeatureMode parse_feature_mode(const std::string& name) {
  return name == "jointpos" ? FeatureMode::JointPosition : FeatureMode::Tangent;
}

/// Options shared by all subcommands; only the parsed subcommand reads them.
struct Options {
  std::string preset;
  std::string kind = "pose";
  std::string in_dir;
  std::string out_path;
  std::string model_path;
  std::string poses_path;
  std::string mode = "tangent";
  std::string energy = "variance";
  std::uint64_t seed = 1;
  int count = 100;
  int frames = 50;
  int threads = 1;
  int kt = -1;
  int kr = 200;
  int rounds = -1;
  double noise_mm = 0.0;
  double sigma = 10.0;
  bool compact = false;
};

void run_synth_gen(const Options& o) {
  const SkeletalModel model = SkeletalModel::preset(o.preset);
  const CameraModel camera;
  DatasetConfig config = DatasetConfig::preset_config(o.preset);
  config.count = o.count;
  config.noise_mm = o.noise_mm;
  if (o.kind == "pose") {
    generate_dataset(model, camera, config, o.seed, o.out_path);
  } else if (o.kind == "sequence") {
    SequenceMotionConfig motion;
    motion.frames = o.count;
    generate_sequence_dataset(model, camera, config, motion, o.seed, o.out_path);
  } else {
    ActionDatasetConfig actions;
    actions.sequence_count = o.count;
    generate_action_dataset(model, config, actions, o.seed, o.out_path);
  }
  std::printf("wrote %s dataset (%s, count=%d, noise=%g mm, seed=%llu) to %s\n", o.kind.c_str(),
              o.preset.c_str(), o.count, o.noise_mm,
              static_cast<unsigned long long>(o.seed), o.out_path.c_str());
}

void run_train_pose(const Options& o) {
  const DatasetManifest manifest = load_manifest_of_kind(o.in_dir, "pose", "train-pose");
  if (manifest.count < 1) {
    throw InvalidArgument("dataset " + o.in_dir + " is empty");
  }
  std::vector<TrainingItem> items;
  items.reserve(static_cast<std::size_t>(manifest.count));
  for (int i = 0; i < manifest.count; ++i) {
    const LoadedItem item = load_item(o.in_dir, manifest, i);
    items.push_back(make_training_item(item.image, item.truth, manifest.camera));
  }
  CascadeConfig config = CascadeConfig::preset(manifest.preset);
  if (o.rounds > 0) config.rounds = o.rounds;
  if (o.kt > 0) {
    config.init_count = o.kt;
    config.train_inits = o.kt;
  }
  config.threads = o.threads;
  config.ik_forest.threads = o.threads;
  config.metric_forest.threads = o.threads;
  config.ik_forest.energy = parse_energy(o.energy);
  config.metric_forest.energy = parse_energy(o.energy);
  const ModelBundle bundle = train_bundle(manifest.model, manifest.camera, config, items, o.seed);
  save_bundle(bundle, o.out_path);
  std::printf("trained %s estimator on %d images (%d rounds, %llu labels dropped) -> %s\n",
              manifest.preset.c_str(), manifest.count, bundle.cascade.config.rounds,
              static_cast<unsigned long long>(bundle.cascade.dropped_labels), o.out_path.c_str());
}

void run_estimate(const Options& o) {
  const DatasetManifest manifest = load_manifest_of_kind(o.in_dir, "pose", "estimate");
  const ModelBundle bundle = load_bundle(o.model_path);
  if (bundle.cascade.model.joint_count() != manifest.model.joint_count()) {
    throw InvalidArgument("model bundle and dataset disagree on joint count");
  }
  const int n = manifest.count;
  if (n < 1) {
    throw InvalidArgument("dataset " + o.in_dir + " is empty");
  }
  make_output_directory(o.out_path);

  std::vector<Pose> poses(static_cast<std::size_t>(n));
  std::vector<double> errors(static_cast<std::size_t>(n));
  std::vector<double> predicted(static_cast<std::size_t>(n));
  parallel_for(n, o.threads, [&](int i) {
    const LoadedItem item = load_item(o.in_dir, manifest, i);
    PoseEstimate est = estimate(item.image, bundle,
                                substream(o.seed, kTagCliEstimate, static_cast<std::uint64_t>(i)),
                                o.kt, o.rounds);
    errors[static_cast<std::size_t>(i)] = average_joint_error(est.positions, item.truth_positions);
    predicted[static_cast<std::size_t>(i)] = est.predicted_error;
    poses[static_cast<std::size_t>(i)] = std::move(est.pose);
  });

  PoseSequence out_seq;
  out_seq.frames.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out_seq.frames.push_back(TimedPose{static_cast<double>(i), poses[static_cast<std::size_t>(i)]});
  }
  save_sequence(out_seq, o.out_path + "/poses.jsonl");
  write_errors_csv(o.out_path + "/errors.csv", errors);
  write_errors_csv(o.out_path + "/predicted.csv", predicted);
  const EvalReport report = make_report(errors);
  write_ced_csv(o.out_path + "/ced.csv", report.ced);
  write_summary_csv(o.out_path + "/summary.csv",
                    {{"images", static_cast<double>(n)}, {"mean_error_mm", report.mean}});
  std::printf("estimated %d images: mean error %.4f mm -> %s\n", n, report.mean,
              o.out_path.c_str());
}

void run_track(const Options& o) {
  const DatasetManifest manifest = load_manifest_of_kind(o.in_dir, "sequence", "track");
  const ModelBundle bundle = load_bundle(o.model_path);
  if (bundle.cascade.model.joint_count() != manifest.model.joint_count()) {
    throw InvalidArgument("model bundle and dataset disagree on joint count");
  }
  const int n = manifest.count;
  if (n < 1) {
    throw InvalidArgument("sequence " + o.in_dir + " is empty");
  }
  make_output_directory(o.out_path);

  bool have_truth = true;
  PoseSequence truth;
  try {
    truth = load_sequence(sequence_truth_path(o.in_dir), manifest.model.joint_count());
  } catch (const MissingInput&) {
    have_truth = false;
  }
  if (have_truth && static_cast<int>(truth.frames.size()) != n) {
    throw LengthMismatch("truth covers " + std::to_string(truth.frames.size()) + " frames; the manifest lists " +
                         std::to_string(n));
  }

  std::vector<Pose> poses(static_cast<std::size_t>(n));
  std::vector<JointPositions> positions(static_cast<std::size_t>(n));
  std::vector<double> predicted(static_cast<std::size_t>(n));

  const DepthImage first = read_pgm16(sequence_frame_path(o.in_dir, 0));
  PoseEstimate start =
      estimate(first, bundle, substream(o.seed, kTagCliTrackInit), o.kt, o.rounds);
  poses[0] = start.pose;
  positions[0] = std::move(start.positions);
  predicted[0] = start.predicted_error;

  TrackerConfig config;
  config.particle_count = o.kr;
  config.measurement.sigma = o.sigma;
  config.rounds = o.rounds;
  config.threads = o.threads;
  ParticleSet set = init_particles(poses[0], o.kr);
  TrackStats stats;
  for (int f = 1; f < n; ++f) {
    const DepthImage image = read_pgm16(sequence_frame_path(o.in_dir, f));
    TrackStepResult step = track_step(set, image, bundle, config, o.seed, &stats);
    poses[static_cast<std::size_t>(f)] = step.estimate.pose;
    positions[static_cast<std::size_t>(f)] = std::move(step.estimate.positions);
    predicted[static_cast<std::size_t>(f)] = step.estimate.predicted_error;
    set = std::move(step.next);
  }

  PoseSequence out_seq;
  out_seq.frames.reserve(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) {
    const double t = have_truth ? truth.frames[static_cast<std::size_t>(f)].time : f / 30.0;
    out_seq.frames.push_back(TimedPose{t, poses[static_cast<std::size_t>(f)]});
  }
  save_sequence(out_seq, o.out_path + "/track.jsonl");
  write_errors_csv(o.out_path + "/predicted.csv", predicted);

  std::vector<std::pair<std::string, double>> summary{
      {"frames", static_cast<double>(n)},
      {"particles", static_cast<double>(o.kr)},
      {"degenerate_weight_events", static_cast<double>(stats.degenerate_weight_events)},
      {"base_log_fallbacks", static_cast<double>(stats.base_log_fallbacks)},
      {"branch_cut_skips", static_cast<double>(stats.branch_cut_skips)}};
  if (have_truth) {
    std::vector<double> errors(static_cast<std::size_t>(n));
    for (int f = 0; f < n; ++f) {
      const FkResult fk =
          forward_kinematics(manifest.model, truth.frames[static_cast<std::size_t>(f)].pose);
      errors[static_cast<std::size_t>(f)] =
          average_joint_error(positions[static_cast<std::size_t>(f)], fk.positions);
    }
    write_errors_csv(o.out_path + "/errors.csv", errors);
    const EvalReport report = make_report(errors);
    write_ced_csv(o.out_path + "/ced.csv", report.ced);
    summary.emplace_back("mean_error_mm", report.mean);
    std::printf("tracked %d frames: mean error %.4f mm -> %s\n", n, report.mean,
                o.out_path.c_str());
  } else {
    std::printf("tracked %d frames (no ground truth found) -> %s\n", n, o.out_path.c_str());
  }
  write_summary_csv(o.out_path + "/summary.csv", summary);
}

void run_train_action(const Options& o) {
  const DatasetManifest manifest = load_manifest_of_kind(o.in_dir, "action", "train-action");
  if (manifest.class_names.empty()) {
    throw CorruptStream("action manifest lists no class names");
  }
  if (manifest.count < 1) {
    throw InvalidArgument("dataset " + o.in_dir + " is empty");
  }
  std::vector<PoseSequence> sequences;
  sequences.reserve(static_cast<std::size_t>(manifest.count));
  for (int i = 0; i < manifest.count; ++i) {
    sequences.push_back(
        load_sequence(action_sequence_path(o.in_dir, i), manifest.model.joint_count()));
  }
  ActionTrainConfig config;
  config.mode = parse_feature_mode(o.mode);
  config.compact = o.compact;
  config.threads = o.threads;
  config.forest.threads = o.threads;
  const ActionModel model =
      train_action(manifest.model, sequences, manifest.class_names, config, o.seed);
  save_action_model(model, o.out_path);
  std::printf("trained action classifier on %d sequences (%zu classes, %d features) -> %s\n",
              manifest.count, model.class_names.size(), model.feature_dim, o.out_path.c_str());
}

void run_recognize(const Options& o) {
  const ActionModel model = load_action_model(o.model_path);
  const DatasetManifest manifest = load_manifest_of_kind(o.in_dir, "action", "recognize");
  if (model.model.joint_count() != manifest.model.joint_count()) {
    throw InvalidArgument("action model and dataset disagree on joint count");
  }
  const int n = manifest.count;
  if (n < 1) {
    throw InvalidArgument("dataset " + o.in_dir + " is empty");
  }
  make_output_directory(o.out_path);

  const int classes = static_cast<int>(model.class_names.size());
  std::vector<int> predictions(static_cast<std::size_t>(n));
  std::vector<int> labels(static_cast<std::size_t>(n));
  parallel_for(n, o.threads, [&](int i) {
    const PoseSequence seq =
        load_sequence(action_sequence_path(o.in_dir, i), manifest.model.joint_count());
    predictions[static_cast<std::size_t>(i)] = classify_sequence(model, seq);
    labels[static_cast<std::size_t>(i)] = seq.label;
  });

  std::string pred_csv = "index,truth,predicted\n";
  std::vector<std::vector<int>> confusion(static_cast<std::size_t>(classes),
                                          std::vector<int>(static_cast<std::size_t>(classes), 0));
  int labeled = 0;
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    const int truth = labels[static_cast<std::size_t>(i)];
    const int pred = predictions[static_cast<std::size_t>(i)];
    pred_csv += std::to_string(i) + "," + std::to_string(truth) + "," + std::to_string(pred) + "\n";
    if (truth < 0) continue;
    if (truth >= classes) {
      throw CorruptStream("sequence " + std::to_string(i) + " carries label " +
                          std::to_string(truth) + " outside the model's catalogue");
    }
    ++labeled;
    if (truth == pred) ++correct;
    ++confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)];
  }
  write_file_atomic(o.out_path + "/predictions.csv", pred_csv);
  std::vector<std::pair<std::string, double>> summary{{"sequences", static_cast<double>(n)},
                                                      {"labeled", static_cast<double>(labeled)}};
  if (labeled > 0) {
    write_confusion_csv(o.out_path + "/confusion.csv", model.class_names, confusion);
    summary.emplace_back("accuracy", static_cast<double>(correct) / labeled);
    std::printf("recognized %d sequences: accuracy %.4f -> %s\n", n,
                static_cast<double>(correct) / labeled, o.out_path.c_str());
  } else {
    std::printf("recognized %d sequences (no labels present) -> %s\n", n, o.out_path.c_str());
  }
  write_summary_csv(o.out_path + "/summary.csv", summary);
}

void run_eval(const Options& o) {
  const DatasetManifest manifest = load_manifest(o.in_dir);
  if (manifest.kind != "pose" && manifest.kind != "sequence") {
    throw InvalidArgument("eval needs a pose or sequence dataset; " + o.in_dir + " holds kind '" +
                          manifest.kind + "'");
  }
  const int n = manifest.count;
  if (n < 1) {
    throw InvalidArgument("dataset " + o.in_dir + " is empty");
  }
  const PoseSequence predicted = load_sequence(o.poses_path, manifest.model.joint_count());
  if (static_cast<int>(predicted.frames.size()) != n) {
    throw LengthMismatch("predictions cover " + std::to_string(predicted.frames.size()) +
                         " frames; the dataset holds " + std::to_string(n));
  }
  make_output_directory(o.out_path);

  PoseSequence truth_seq;
  if (manifest.kind == "sequence") {
    truth_seq = load_sequence(sequence_truth_path(o.in_dir), manifest.model.joint_count());
    if (static_cast<int>(truth_seq.frames.size()) != n) {
      throw LengthMismatch("truth covers " + std::to_string(truth_seq.frames.size()) +
                           " frames; the manifest lists " + std::to_string(n));
    }
  }

  std::vector<double> errors(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const FkResult fk =
        forward_kinematics(manifest.model, predicted.frames[static_cast<std::size_t>(i)].pose);
    JointPositions truth_positions;
    if (manifest.kind == "pose") {
      truth_positions = load_item(o.in_dir, manifest, i).truth_positions;
    } else {
      truth_positions =
          forward_kinematics(manifest.model, truth_seq.frames[static_cast<std::size_t>(i)].pose)
              .positions;
    }
    errors[static_cast<std::size_t>(i)] = average_joint_error(fk.positions, truth_positions);
  }
  write_errors_csv(o.out_path + "/errors.csv", errors);
  const EvalReport report = make_report(errors);
  write_ced_csv(o.out_path + "/ced.csv", report.ced);
  write_summary_csv(o.out_path + "/summary.csv",
                    {{"images", static_cast<double>(n)}, {"mean_error_mm", report.mean}});
  std::printf("evaluated %d poses: mean error %.4f mm -> %s\n", n, report.mean,
              o.out_path.c_str());
}

void run_bench(const Options& o) {
  const ModelBundle bundle = load_bundle(o.model_path);
  const SkeletalModel& model = bundle.cascade.model;
  DatasetConfig config = DatasetConfig::preset_config(model.name());
  config.noise_mm = o.noise_mm;
  if (o.frames < 1) {
    throw InvalidArgument("bench needs at least one frame");
  }
  std::vector<DepthImage> images;
  images.reserve(static_cast<std::size_t>(o.frames));
  const std::uint64_t data_seed = substream(o.seed, kTagCliBench);
  for (int i = 0; i < o.frames; ++i) {
    images.push_back(generate_item(model, bundle.cascade.camera, config, data_seed, i).image);
  }

  // One untimed warm-up estimate, then the measured loop.
  (void)estimate(images[0], bundle, substream(o.seed, kTagCliBench, 0ull), o.kt, o.rounds);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < o.frames; ++i) {
    (void)estimate(images[static_cast<std::size_t>(i)], bundle,
                   substream(o.seed, kTagCliBench, static_cast<std::uint64_t>(i)), o.kt, o.rounds);
  }
  const auto stop = std::chrono::steady_clock::now();
  const double wall = std::chrono::duration<double>(stop - start).count();
  const double fps = static_cast<double>(o.frames) / wall;
  std::printf("frames=%d wall_s=%.6f fps=%.2f\n", o.frames, wall, fps);
  if (!o.out_path.empty()) {
    write_summary_csv(o.out_path, {{"frames", static_cast<double>(o.frames)},
                                   {"wall_s", wall},
                                   {"fps", fps}});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Articulated pose estimation, tracking, and action recognition on depth images"};
  app.require_subcommand(1);
  Options o;

  const std::vector<std::string> presets{"fish", "mouse", "hand"};

  CLI::App* synth = app.add_subcommand("synth-gen", "Generate a synthetic depth dataset");
  synth->add_option("--preset", o.preset, "Skeleton preset")
      ->required()
      ->check(CLI::IsMember(presets));
  synth->add_option("--kind", o.kind, "Dataset kind: pose, sequence, or action")
      ->check(CLI::IsMember({"pose", "sequence", "action"}));
  synth->add_option("--count", o.count, "Images / frames / sequences to generate");
  synth->add_option("--noise-mm", o.noise_mm, "Gaussian depth noise sigma (mm)");
  synth->add_option("--seed", o.seed, "Random seed");
  synth->add_option("--out", o.out_path, "Output directory")->required();
  synth->callback([&] { run_synth_gen(o); });

  CLI::App* train = app.add_subcommand("train-pose", "Train a pose estimator on a pose dataset");
  train->add_option("--in", o.in_dir, "Pose dataset directory")->required();
  train->add_option("--out", o.out_path, "Output model bundle path")->required();
  train->add_option("--seed", o.seed, "Random seed");
  train->add_option("--threads", o.threads, "Worker threads");
  train->add_option("--rounds", o.rounds, "Cascade rounds (default: preset)");
  train->add_option("--kt", o.kt, "Pose hypotheses per image (default: preset)");
  train->add_option("--energy-mode", o.energy, "Split energy: variance or literal")
      ->check(CLI::IsMember({"variance", "literal"}));
  train->callback([&] { run_train_pose(o); });

  CLI::App* est = app.add_subcommand("estimate", "Estimate poses for every image of a dataset");
  est->add_option("--in", o.in_dir, "Pose dataset directory")->required();
  est->add_option("--model", o.model_path, "Trained model bundle")->required();
  est->add_option("--out", o.out_path, "Output directory")->required();
  est->add_option("--seed", o.seed, "Random seed");
  est->add_option("--kt", o.kt, "Pose hypotheses per image (default: trained value)");
  est->add_option("--rounds", o.rounds, "Cascade rounds (default: trained value)");
  est->add_option("--threads", o.threads, "Worker threads");
  est->callback([&] { run_estimate(o); });

  CLI::App* track = app.add_subcommand("track", "Track a pose through a depth sequence");
  track->add_option("--in", o.in_dir, "Sequence dataset directory")->required();
  track->add_option("--model", o.model_path, "Trained model bundle")->required();
  track->add_option("--out", o.out_path, "Output directory")->required();
  track->add_option("--seed", o.seed, "Random seed");
  track->add_option("--kr", o.kr, "Particle count");
  track->add_option("--sigma", o.sigma, "Measurement width (mm)");
  track->add_option("--kt", o.kt, "Hypotheses for the first frame (default: trained value)");
  track->add_option("--rounds", o.rounds, "Cascade rounds (default: trained value)");
  track->add_option("--threads", o.threads, "Worker threads");
  track->callback([&] { run_track(o); });

  CLI::App* ta = app.add_subcommand("train-action", "Train an action classifier");
  ta->add_option("--in", o.in_dir, "Action dataset directory")->required();
  ta->add_option("--out", o.out_path, "Output action model path")->required();
  ta->add_option("--seed", o.seed, "Random seed");
  ta->add_option("--threads", o.threads, "Worker threads");
  ta->add_option("--mode", o.mode, "Feature mode: tangent or jointpos")
      ->check(CLI::IsMember({"tangent", "jointpos"}));
  ta->add_flag("--compact", o.compact, "Use the compact pooled tangent layout");
  ta->callback([&] { run_train_action(o); });

  CLI::App* rec = app.add_subcommand("recognize", "Classify action sequences");
  rec->add_option("--in", o.in_dir, "Action dataset directory")->required();
  rec->add_option("--model", o.model_path, "Trained action model")->required();
  rec->add_option("--out", o.out_path, "Output directory")->required();
  rec->add_option("--threads", o.threads, "Worker threads");
  rec->callback([&] { run_recognize(o); });

  CLI::App* ev = app.add_subcommand("eval", "Score predicted poses against dataset ground truth");
  ev->add_option("--in", o.in_dir, "Pose or sequence dataset directory")->required();
  ev->add_option("--poses", o.poses_path, "Predicted poses (JSON-lines)")->required();
  ev->add_option("--out", o.out_path, "Output directory")->required();
  ev->callback([&] { run_eval(o); });

  CLI::App* bench = app.add_subcommand("bench", "Measure single-frame estimation throughput");
  bench->add_option("--model", o.model_path, "Trained model bundle")->required();
  bench->add_option("--frames", o.frames, "Frames to time");
  bench->add_option("--seed", o.seed, "Random seed");
  bench->add_option("--kt", o.kt, "Pose hypotheses per image (default: trained value)");
  bench->add_option("--rounds", o.rounds, "Cascade rounds (default: trained value)");
  bench->add_option("--threads", o.threads, "Worker threads");
  bench->add_option("--noise-mm", o.noise_mm, "Depth noise on the timed frames (mm)");
  bench->add_option("--out", o.out_path, "Optional CSV report path");
  bench->callback([&] { run_bench(o); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    emit_error("Usage", e.what());
    return 1;
  } catch (const InvalidArgument& e) {
    emit_error(e.kind(), e.what());
    return 1;
  } catch (const MissingInput& e) {
    emit_error(e.kind(), e.what());
    return 2;
  } catch (const ModelNotFound& e) {
    emit_error(e.kind(), e.what());
    return 2;
  } catch (const Error& e) {
    emit_error(e.kind(), e.what());
    return 3;
  } catch (const std::exception& e) {
    emit_error("Internal", e.what());
    return 3;
  }
  return 0;
}
