// geodet command line: scene generation, clustering, weight inspection,
// toy training, detection, evaluation, hyperparameter sweeps and traces.
//
// Exit codes: 0 success, 1 validation or configuration error, 2 I/O error.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "geodet/checkpoint.hpp"
#include "geodet/errors.hpp"
#include "geodet/evaluation.hpp"
#include "geodet/geometry_weights.hpp"
#include "geodet/pipeline.hpp"
#include "geodet/pointcloud_io.hpp"
#include "geodet/superpoint_aggregation.hpp"
#include "geodet/synthetic_scenes.hpp"

namespace fs = std::filesystem;
using namespace geodet;

namespace {

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = first + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ConfigError("invalid number '" + s + "' for " + what);
  return v;
}

// "a..b" -> (a, b)
std::pair<std::string, std::string> split_range(const std::string& s, const std::string& what) {
  const auto pos = s.find("..");
  if (pos == std::string::npos) return {s, s};
  if (pos == 0 || pos + 2 >= s.size()) throw ConfigError("invalid range '" + s + "' for " + what);
  return {s.substr(0, pos), s.substr(pos + 2)};
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    out.push_back(parse_double(s.substr(start, comma - start), what));
    start = comma + 1;
  }
  return out;
}

// Flat "key = value" lines; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::map<std::string, std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

// Binds RunConfig fields to options; values from a config file fill in any
// field whose flag was not given.
struct RunOptions {
  RunConfig config;
  std::string config_file;
  std::map<std::string, CLI::Option*> flags;

  void add(CLI::App* app, bool with_training) {
    app->add_option("--config", config_file, "Flat key = value config file");
    flags["alpha"] = app->add_option("--alpha", config.alpha, "Geometry weight decay coefficient");
    flags["voxel_size"] = app->add_option("--voxel", config.voxel_size, "Superpoint voxel size (m)");
    if (!with_training) return;
    flags["beta"] = app->add_option("--beta", config.beta, "Classification loss weight");
    flags["channels"] = app->add_option("--channels", config.channels, "Feature channels C");
    flags["layers"] = app->add_option("--layers", config.layers, "Encoder blocks");
    flags["hidden"] = app->add_option("--hidden", config.hidden, "MLP hidden width");
    flags["lr"] = app->add_option("--lr", config.lr, "Initial learning rate");
    flags["weight_decay"] = app->add_option("--weight-decay", config.weight_decay, "Decoupled weight decay");
    flags["poly_power"] = app->add_option("--poly-power", config.poly_power, "Polynomial schedule power");
    flags["epochs"] = app->add_option("--epochs", config.epochs, "Training epochs");
    flags["seed"] = app->add_option("--seed", config.seed, "Random seed");
  }

  RunConfig resolve() const {
    RunConfig c = config;
    if (config_file.empty()) return c;
    for (const auto& [key, value] : read_config_file(config_file)) {
      auto it = flags.find(key);
      if (it == flags.end()) continue;
      if (it->second->count() > 0) continue;
      if (key == "alpha") c.alpha = parse_double(value, key);
      else if (key == "beta") c.beta = parse_double(value, key);
      else if (key == "voxel_size") c.voxel_size = parse_double(value, key);
      else if (key == "lr") c.lr = parse_double(value, key);
      else if (key == "weight_decay") c.weight_decay = parse_double(value, key);
      else if (key == "poly_power") c.poly_power = parse_double(value, key);
      else if (key == "channels") c.channels = static_cast<int>(parse_double(value, key));
      else if (key == "layers") c.layers = static_cast<int>(parse_double(value, key));
      else if (key == "hidden") c.hidden = static_cast<int>(parse_double(value, key));
      else if (key == "epochs") c.epochs = static_cast<int>(parse_double(value, key));
      else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_double(value, key));
    }
    return c;
  }
};

void emit(const std::string& out_path, const std::string& contents) {
  if (out_path.empty() || out_path == "-") {
    std::cout << contents;
  } else {
    write_file(out_path, contents);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geodet: geometry-weighted superpoint 3D detection toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic scene suite");
  int gen_scenes = 20;
  std::string gen_objects = "2..4", gen_size = "0.4..1.2", gen_room = "4,4,2.5", gen_out;
  std::uint64_t gen_seed = 7;
  SceneSpec gen_spec;
  gen->add_option("--scenes", gen_scenes, "Number of scenes");
  gen->add_option("--objects", gen_objects, "Object count range, e.g. 2..5");
  gen->add_option("--size", gen_size, "Object extent range in meters, e.g. 0.4..1.2");
  gen->add_option("--room", gen_room, "Room extents x,y,z in meters");
  gen->add_option("--points", gen_spec.points_per_object, "Surface points per object");
  gen->add_option("--clutter", gen_spec.clutter_density, "Clutter points per m^2 of floor and walls");
  gen->add_option("--classes", gen_spec.classes, "Number of synthetic classes");
  gen->add_option("--seed", gen_seed, "Top-level seed; scene i uses seed + i");
  gen->add_option("--out", gen_out, "Output directory")->required();

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Voxel-grid superpoint labels for a PLY cloud");
  std::string cl_input, cl_out;
  double cl_voxel = kDefaultVoxelSize;
  cluster->add_option("--input", cl_input, "Input PLY")->required();
  cluster->add_option("--voxel", cl_voxel, "Voxel size (m)");
  cluster->add_option("--out", cl_out, "Output label file (one id per line)");

  // weights
  auto* weights = app.add_subcommand("weights", "Geometry weights of a PLY cloud");
  std::string w_input, w_out;
  double w_alpha = kDefaultAlpha;
  weights->add_option("--input", w_input, "Input PLY")->required();
  weights->add_option("--alpha", w_alpha, "Decay coefficient");
  weights->add_option("--out", w_out, "Output JSON");

  // train-toy
  auto* train = app.add_subcommand("train-toy", "Train on a scene suite and write a checkpoint");
  RunOptions train_opts;
  std::string tr_scenes, tr_checkpoint, tr_trace, tr_detections, tr_report;
  train->add_option("--scenes", tr_scenes, "Suite directory written by gen")->required();
  train->add_option("--checkpoint", tr_checkpoint, "Output checkpoint JSON")->required();
  train->add_option("--loss-trace", tr_trace, "Optional per-epoch loss JSON");
  train->add_option("--detections", tr_detections, "Optional detections JSON on the training scenes");
  train->add_option("--report", tr_report, "Optional evaluation report JSON on the training scenes");
  train_opts.add(train, true);

  // detect
  auto* detect = app.add_subcommand("detect", "Run a checkpoint over a scene suite");
  std::string dt_scenes, dt_checkpoint, dt_out;
  detect->add_option("--scenes", dt_scenes, "Suite directory")->required();
  detect->add_option("--checkpoint", dt_checkpoint, "Checkpoint JSON")->required();
  detect->add_option("--out", dt_out, "Output detections JSON");

  // eval
  auto* eval = app.add_subcommand("eval", "mAP@0.25 / mAP@0.5 of detections against ground truth");
  std::string ev_det, ev_gt, ev_out;
  eval->add_option("--detections", ev_det, "Detections JSON")->required();
  eval->add_option("--gt", ev_gt, "Ground-truth JSON (gt.json of a suite)")->required();
  eval->add_option("--out", ev_out, "Output report JSON");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Train and evaluate once per hyperparameter value");
  RunOptions sweep_opts;
  std::string sw_scenes, sw_param, sw_values, sw_out;
  sweep->add_option("--scenes", sw_scenes, "Suite directory")->required();
  sweep->add_option("--param", sw_param, "alpha or beta")->required();
  sweep->add_option("--values", sw_values, "Comma-separated values")->required();
  sweep->add_option("--out", sw_out, "Output JSON");
  sweep_opts.add(sweep, true);

  // trace
  auto* trace = app.add_subcommand("trace", "Dump per-stage tensor summaries for one scene");
  std::string tc_input, tc_checkpoint, tc_labels, tc_out;
  trace->add_option("--input", tc_input, "Input PLY")->required();
  trace->add_option("--checkpoint", tc_checkpoint, "Checkpoint JSON")->required();
  trace->add_option("--labels", tc_labels, "Optional precomputed superpoint labels");
  trace->add_option("--out", tc_out, "Output JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      const auto [lo, hi] = split_range(gen_objects, "--objects");
      gen_spec.min_objects = static_cast<int>(parse_double(lo, "--objects"));
      gen_spec.max_objects = static_cast<int>(parse_double(hi, "--objects"));
      const auto [slo, shi] = split_range(gen_size, "--size");
      gen_spec.min_size = parse_double(slo, "--size");
      gen_spec.max_size = parse_double(shi, "--size");
      const auto room = parse_list(gen_room, "--room");
      if (room.size() != 3) throw ConfigError("--room needs three comma-separated extents");
      gen_spec.room = Vec3(room[0], room[1], room[2]);
      const auto entries = generate_suite(gen_scenes, gen_spec, gen_seed, gen_out);
      std::cout << "wrote " << entries.size() << " scenes to " << gen_out << "\n";
    } else if (*cluster) {
      const PointCloud cloud = parse_ply(read_file(cl_input));
      const SuperpointLabels labels = cluster_voxel_grid(cloud, cl_voxel);
      emit(cl_out, write_superpoints(labels));
      std::cerr << cloud.size() << " points -> " << labels.count << " superpoints\n";
    } else if (*weights) {
      const PointCloud cloud = parse_ply(read_file(w_input));
      emit(w_out, weights_to_json(compute_geometry_weights(cloud, w_alpha)));
    } else if (*train) {
      const RunConfig config = train_opts.resolve();
      validate_run_config(config);
      const auto scenes = load_suite(tr_scenes);
      const TrainEvalResult r = train_and_evaluate(config, scenes);
      write_file(tr_checkpoint,
                 save_checkpoint(make_checkpoint(r.train, config, scenes.front().annotation.class_names)));
      if (!tr_trace.empty()) write_file(tr_trace, nlohmann::json{{"loss", r.train.loss_trace}}.dump(1) + "\n");
      if (!tr_detections.empty()) write_file(tr_detections, write_detections(r.detections));
      if (!tr_report.empty()) write_file(tr_report, report_to_json(r.report));
      std::cout << "loss " << r.train.loss_trace.front() << " -> " << r.train.loss_trace.back() << "\n"
                << report_to_table(r.report);
    } else if (*detect) {
      const Checkpoint ck = load_checkpoint(read_file(dt_checkpoint));
      const auto scenes = load_suite(dt_scenes);
      emit(dt_out, write_detections(detect_scenes(ck.params, scenes, ck.alpha, ck.voxel_size)));
    } else if (*eval) {
      const auto detections = parse_detections(read_file(ev_det));
      const GroundTruthSet gt = parse_ground_truth(read_file(ev_gt));
      const EvalReport report = compute_map(detections, gt);
      if (!ev_out.empty()) write_file(ev_out, report_to_json(report));
      std::cout << report_to_table(report);
    } else if (*sweep) {
      const RunConfig config = sweep_opts.resolve();
      const SweepParam param = parse_sweep_param(sw_param);
      const auto values = parse_list(sw_values, "--values");
      const auto scenes = load_suite(sw_scenes);
      const SweepReport report = cmd_sweep(config, param, values, scenes);
      if (!sw_out.empty()) write_file(sw_out, sweep_to_json(report));
      std::cout << sweep_to_table(report);
    } else if (*trace) {
      const Checkpoint ck = load_checkpoint(read_file(tc_checkpoint));
      const PointCloud cloud = parse_ply(read_file(tc_input));
      std::optional<SuperpointLabels> labels;
      if (!tc_labels.empty()) labels = parse_superpoints(read_file(tc_labels), cloud.size());
      emit(tc_out, cmd_pipeline_trace(cloud, ck, labels));
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
