#include "geodet/pipeline.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "geodet/errors.hpp"
#include "geodet/synthetic_scenes.hpp"

namespace geodet {

using nlohmann::json;

namespace {

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <typename T>
json stage_summary(const std::string& name, const T& t) {
  json s{{"name", name}, {"shape", {t.rows(), t.cols()}}};
  if (t.size() > 0) {
    s["min"] = t.minCoeff();
    s["max"] = t.maxCoeff();
    s["mean"] = t.mean();
  }
  return s;
}

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

}  // namespace

void validate_run_config(const RunConfig& c) {
  if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) throw ConfigError("alpha must be > 0");
  if (!(c.beta >= 0.0) || !std::isfinite(c.beta)) throw ConfigError("beta must be >= 0");
  if (c.channels < 1) throw ConfigError("channels must be >= 1");
  if (c.layers < 1) throw ConfigError("layers must be >= 1");
  if (c.hidden < 1) throw ConfigError("hidden must be >= 1");
  if (c.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(c.lr > 0.0) || !std::isfinite(c.lr)) throw ConfigError("lr must be > 0");
  if (!(c.voxel_size > 0.0) || !std::isfinite(c.voxel_size)) throw ConfigError("voxel size must be > 0");
  if (!(c.weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
  if (!(c.poly_power >= 0.0)) throw ConfigError("poly power must be >= 0");
}

TrainConfig to_train_config(const RunConfig& c) {
  TrainConfig t;
  t.model.channels = c.channels;
  t.model.layers = c.layers;
  t.model.hidden = c.hidden;
  t.alpha = c.alpha;
  t.beta = c.beta;
  t.voxel_size = c.voxel_size;
  t.lr = c.lr;
  t.weight_decay = c.weight_decay;
  t.poly_power = c.poly_power;
  t.epochs = c.epochs;
  t.seed = c.seed;
  return t;
}

TrainEvalResult train_and_evaluate(const RunConfig& config, const std::vector<LabeledScene>& scenes) {
  validate_run_config(config);
  TrainEvalResult r;
  r.train = train_toy(scenes, to_train_config(config));
  r.detections = detect_scenes(r.train.params, scenes, config.alpha, config.voxel_size);
  r.report = compute_map(r.detections, ground_truth_of(scenes));
  return r;
}

Checkpoint make_checkpoint(const TrainResult& train, const RunConfig& config,
                           const std::vector<std::string>& class_names) {
  Checkpoint ck;
  ck.params = train.params;
  ck.alpha = config.alpha;
  ck.voxel_size = config.voxel_size;
  ck.class_names = class_names;
  return ck;
}

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "alpha") return SweepParam::Alpha;
  if (name == "beta") return SweepParam::Beta;
  throw ConfigError("sweep parameter must be 'alpha' or 'beta', got '" + name + "'");
}

std::string sweep_param_name(SweepParam param) { return param == SweepParam::Alpha ? "alpha" : "beta"; }

SweepReport cmd_sweep(const RunConfig& config, SweepParam param, const std::vector<double>& values,
                      const std::vector<LabeledScene>& scenes) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  SweepReport report;
  report.param = param;
  for (double v : values) {
    SweepRow row;
    row.value = v;
    RunConfig c = config;
    (param == SweepParam::Alpha ? c.alpha : c.beta) = v;
    try {
      const TrainEvalResult r = train_and_evaluate(c, scenes);
      row.map25 = r.report.map25;
      row.map50 = r.report.map50;
      row.final_loss = r.train.loss_trace.back();
    } catch (const Error& e) {
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string sweep_to_json(const SweepReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row{{"value", r.value},
             {"mAP25", opt_json(r.map25)},
             {"mAP50", opt_json(r.map50)},
             {"final_loss", opt_json(r.final_loss)}};
    if (!r.error.empty()) row["error"] = r.error;
    rows.push_back(std::move(row));
  }
  return json{{"param", sweep_param_name(report.param)}, {"rows", std::move(rows)}}.dump(2) + "\n";
}

std::string sweep_to_table(const SweepReport& report) {
  const std::string name = sweep_param_name(report.param);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-8s  %6s  %6s\n", name.c_str(), "mAP25", "mAP50");
  std::string out = buf;
  for (const auto& r : report.rows) {
    if (!r.error.empty()) {
      std::snprintf(buf, sizeof(buf), "%-8.2f  error: ", r.value);
      out += buf + r.error + "\n";
      continue;
    }
    auto pct = [](const std::optional<double>& v) { return v ? 100.0 * *v : std::nan(""); };
    std::snprintf(buf, sizeof(buf), "%-8.2f  %6.1f  %6.1f\n", r.value, pct(r.map25), pct(r.map50));
    out += buf;
  }
  return out;
}

const std::vector<std::string>& trace_stage_names() {
  static const std::vector<std::string> kStages{"centroid", "distances",    "normalized",   "weights",
                                                "backbone", "gated",        "recalibrated", "scatter_mean",
                                                "scatter_max", "fused",     "encoded",      "boxes"};
  return kStages;
}

std::string cmd_pipeline_trace(const PointCloud& cloud, const Checkpoint& ck,
                               const std::optional<SuperpointLabels>& labels) {
  validate_point_cloud(cloud);
  const ModelParams& p = ck.params;
  json stages = json::array();
  std::string stage;
  try {
    stage = "centroid";
    const Vec3 centroid = compute_centroid(cloud);
    stages.push_back(stage_summary(stage, centroid.transpose()));
    stage = "distances";
    const Vector d = compute_distances(cloud, centroid);
    stages.push_back(stage_summary(stage, d));
    stage = "normalized";
    const Vector nd = minmax_normalize(d);
    stages.push_back(stage_summary(stage, nd));
    stage = "weights";
    const Vector w = geometry_weights(nd, ck.alpha);
    stages.push_back(stage_summary(stage, w));
    stage = "backbone";
    const Matrix features = backbone_forward(cloud, p);
    stages.push_back(stage_summary(stage, features));
    stage = "gated";
    const Matrix gated = gate_features(p.gating, features);
    stages.push_back(stage_summary(stage, gated));
    stage = "recalibrated";
    const Matrix recal = recalibrate(w, gated);
    stages.push_back(stage_summary(stage, recal));
    stage = "scatter_mean";
    const SuperpointLabels lab = labels ? *labels : cluster_voxel_grid(cloud, ck.voxel_size);
    validate_labels(lab, cloud.size());
    const Matrix fd = scatter_mean(lab, recal);
    stages.push_back(stage_summary(stage, fd));
    stage = "scatter_max";
    const ScatterMaxResult fl = scatter_max(lab, gated);
    stages.push_back(stage_summary(stage, fl.values));
    stage = "fused";
    const HybridRepresentation hybrid = fuse(fd, fl.values, superpoint_centroids(cloud, lab));
    stages.push_back(stage_summary(stage, hybrid.features));
    stage = "encoded";
    const Matrix encoded = encoder_forward(hybrid, p);
    stages.push_back(stage_summary(stage, encoded));
    stage = "boxes";
    const Prediction pred = predict(encoded, hybrid.superpoint_centroids, p);
    Matrix boxes(static_cast<Eigen::Index>(pred.boxes.size()), 6);
    for (std::size_t i = 0; i < pred.boxes.size(); ++i) {
      boxes.row(static_cast<Eigen::Index>(i)) << pred.boxes[i].center.transpose(), pred.boxes[i].size.transpose();
    }
    stages.push_back(stage_summary(stage, boxes));
    json doc{{"N", cloud.size()},
             {"M", lab.count},
             {"C", p.config.channels},
             {"alpha", ck.alpha},
             {"voxel_size", ck.voxel_size},
             {"stages", std::move(stages)}};
    return doc.dump(2) + "\n";
  } catch (const ShapeError& e) {
    throw ShapeError("trace stage '" + stage + "': " + e.what());
  }
}

std::string weights_to_json(const GeometryWeights& w) {
  json doc{{"alpha", w.alpha},
           {"centroid", {w.centroid[0], w.centroid[1], w.centroid[2]}},
           {"distances", vector_json(w.distances)},
           {"normalized", vector_json(w.normalized)},
           {"weights", vector_json(w.weights)}};
  return doc.dump(2) + "\n";
}

}  // namespace geodet
