#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "geodet/channel_gating.hpp"
#include "geodet/errors.hpp"
#include "geodet/evaluation.hpp"
#include "geodet/geometry_weights.hpp"
#include "geodet/matching.hpp"
#include "geodet/pipeline.hpp"
#include "geodet/pointcloud_io.hpp"
#include "geodet/superpoint_aggregation.hpp"
#include "geodet/synthetic_scenes.hpp"

namespace py = pybind11;
using namespace geodet;

namespace {

PointCloud make_cloud(const Points3& positions, const std::optional<Points3>& colors) {
  PointCloud cloud;
  cloud.positions = positions;
  cloud.colors = colors ? *colors : Points3::Constant(positions.rows(), 3, 0.5);
  validate_point_cloud(cloud);
  return cloud;
}

SuperpointLabels make_labels(const std::vector<long long>& ids, std::size_t n) {
  SuperpointLabels labels = densify_labels(ids);
  validate_labels(labels, n);
  return labels;
}

Box3D make_box(const Vec3& center, const Vec3& size) {
  Box3D b;
  b.center = center;
  b.size = size;
  return b;
}

py::dict run_to_dict(const TrainEvalResult& r) {
  py::dict out;
  out["loss_trace"] = r.train.loss_trace;
  out["map25"] = r.report.map25;
  out["map50"] = r.report.map50;
  out["report"] = report_to_json(r.report);
  out["detections"] = write_detections(r.detections);
  return out;
}

RunConfig make_run_config(const py::kwargs& kw) {
  RunConfig c;
  for (const auto& [key, value] : kw) {
    const std::string k = py::str(key);
    if (k == "alpha") c.alpha = value.cast<double>();
    else if (k == "beta") c.beta = value.cast<double>();
    else if (k == "channels") c.channels = value.cast<int>();
    else if (k == "layers") c.layers = value.cast<int>();
    else if (k == "hidden") c.hidden = value.cast<int>();
    else if (k == "voxel_size") c.voxel_size = value.cast<double>();
    else if (k == "lr") c.lr = value.cast<double>();
    else if (k == "weight_decay") c.weight_decay = value.cast<double>();
    else if (k == "poly_power") c.poly_power = value.cast<double>();
    else if (k == "epochs") c.epochs = value.cast<int>();
    else if (k == "seed") c.seed = value.cast<std::uint64_t>();
    else throw ConfigError("unknown option '" + k + "'");
  }
  validate_run_config(c);
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Geometry-weighted superpoint detection pipeline";

  auto base = py::register_exception<Error>(m, "GeodetError", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  // Registered after its base so truncated input still maps to ParseError.
  auto parse = py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<TruncationError>(m, "TruncationError", parse.ptr());

  m.def(
      "read_ply",
      [](const std::filesystem::path& path) {
        PointCloud c = parse_ply(read_file(path));
        return py::make_tuple(c.positions, c.colors);
      },
      py::arg("path"), "Returns (positions N x 3, colors N x 3).");
  m.def(
      "write_ply",
      [](const std::filesystem::path& path, const Points3& positions, const std::optional<Points3>& colors,
         bool binary) {
        write_file(path, write_ply(make_cloud(positions, colors),
                                   binary ? PlyFormat::BinaryLittleEndian : PlyFormat::Ascii));
      },
      py::arg("path"), py::arg("positions"), py::arg("colors") = py::none(), py::arg("binary") = true);

  m.def(
      "geometry_weights",
      [](const Points3& positions, double alpha) {
        GeometryWeights w = compute_geometry_weights(make_cloud(positions, std::nullopt), alpha);
        py::dict d;
        d["centroid"] = w.centroid;
        d["distances"] = w.distances;
        d["normalized"] = w.normalized;
        d["weights"] = w.weights;
        return d;
      },
      py::arg("positions"), py::arg("alpha") = kDefaultAlpha);

  m.def(
      "gating_coefficients", [](const RowVector& raw) { return gating_coefficients(GatingParams{raw}); },
      py::arg("raw_weights"));
  m.def(
      "gate_features",
      [](const RowVector& raw, const Matrix& features) { return gate_features(GatingParams{raw}, features); },
      py::arg("raw_weights"), py::arg("features"));

  m.def(
      "cluster_voxel_grid",
      [](const Points3& positions, double voxel_size) {
        return cluster_voxel_grid(make_cloud(positions, std::nullopt), voxel_size).ids;
      },
      py::arg("positions"), py::arg("voxel_size") = kDefaultVoxelSize);
  m.def(
      "scatter_mean",
      [](const std::vector<long long>& ids, const Matrix& features) {
        return scatter_mean(make_labels(ids, static_cast<std::size_t>(features.rows())), features);
      },
      py::arg("labels"), py::arg("features"));
  m.def(
      "scatter_max",
      [](const std::vector<long long>& ids, const Matrix& features) {
        ScatterMaxResult r = scatter_max(make_labels(ids, static_cast<std::size_t>(features.rows())), features);
        return py::make_tuple(r.values, r.argmax);
      },
      py::arg("labels"), py::arg("features"), "Returns (values, argmax point indices).");

  m.def(
      "iou_3d",
      [](const Vec3& ca, const Vec3& sa, const Vec3& cb, const Vec3& sb) {
        return iou_3d(make_box(ca, sa), make_box(cb, sb));
      },
      py::arg("center_a"), py::arg("size_a"), py::arg("center_b"), py::arg("size_b"));
  m.def(
      "diou_loss",
      [](const Vec3& cp, const Vec3& sp, const Vec3& cg, const Vec3& sg) {
        return diou_loss(make_box(cp, sp), make_box(cg, sg));
      },
      py::arg("center_pred"), py::arg("size_pred"), py::arg("center_gt"), py::arg("size_gt"));
  m.def("solve_assignment", &solve_assignment, py::arg("cost"),
        "Minimum-cost one-to-one assignment as (row, col) pairs.");

  m.def("average_precision", &average_precision, py::arg("is_true_positive"), py::arg("gt_count"),
        "All-point interpolated AP of a ranked hit list.");
  m.def(
      "evaluate",
      [](const std::string& detections_json, const std::string& gt_json) {
        return report_to_json(compute_map(parse_detections(detections_json), parse_ground_truth(gt_json)));
      },
      py::arg("detections_json"), py::arg("gt_json"), "Returns the mAP report as JSON text.");

  m.def(
      "generate_suite",
      [](const std::filesystem::path& out_dir, int scenes, std::uint64_t seed, int min_objects, int max_objects,
         int points_per_object, double clutter_density, int classes) {
        SceneSpec spec;
        spec.min_objects = min_objects;
        spec.max_objects = max_objects;
        spec.points_per_object = points_per_object;
        spec.clutter_density = clutter_density;
        spec.classes = classes;
        std::vector<std::string> names;
        for (const auto& e : generate_suite(scenes, spec, seed, out_dir)) names.push_back(e.name);
        return names;
      },
      py::arg("out_dir"), py::arg("scenes") = 10, py::arg("seed") = 7, py::arg("min_objects") = 2,
      py::arg("max_objects") = 4, py::arg("points_per_object") = 150, py::arg("clutter_density") = 1.0,
      py::arg("classes") = 3);

  m.def(
      "train_and_evaluate",
      [](const std::filesystem::path& scenes_dir, const py::kwargs& kw) {
        RunConfig config = make_run_config(kw);
        std::vector<LabeledScene> scenes = load_suite(scenes_dir);
        TrainEvalResult r;
        {
          py::gil_scoped_release release;
          r = train_and_evaluate(config, scenes);
        }
        return run_to_dict(r);
      },
      py::arg("scenes_dir"),
      "Train on a suite directory and evaluate on the same scenes. Keyword options: alpha, beta, "
      "channels, layers, hidden, voxel_size, lr, weight_decay, poly_power, epochs, seed.");

  m.def(
      "sweep",
      [](const std::filesystem::path& scenes_dir, const std::string& param, const std::vector<double>& values,
         const py::kwargs& kw) {
        RunConfig config = make_run_config(kw);
        std::vector<LabeledScene> scenes = load_suite(scenes_dir);
        const SweepParam p = parse_sweep_param(param);
        SweepReport r;
        {
          py::gil_scoped_release release;
          r = cmd_sweep(config, p, values, scenes);
        }
        return sweep_to_json(r);
      },
      py::arg("scenes_dir"), py::arg("param"), py::arg("values"), "Returns the sweep table as JSON text.");
}
