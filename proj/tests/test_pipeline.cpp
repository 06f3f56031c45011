#include <doctest.h>

#include <nlohmann/json.hpp>

#include "geodet/errors.hpp"
#include "geodet/pipeline.hpp"
#include "geodet/synthetic_scenes.hpp"

using namespace geodet;

namespace {

std::vector<LabeledScene> scenes(int n) {
  SceneSpec spec;
  spec.points_per_object = 50;
  spec.clutter_density = 0.0;
  std::vector<LabeledScene> out;
  for (int i = 0; i < n; ++i) {
    spec.seed = 40 + i;
    SyntheticScene s = generate_scene(spec);
    out.push_back({"s" + std::to_string(i), s.cloud, s.annotation});
  }
  return out;
}

RunConfig small() {
  RunConfig c;
  c.channels = 8;
  c.hidden = 8;
  c.layers = 1;
  c.epochs = 2;
  c.voxel_size = 0.5;
  return c;
}

}  // namespace

TEST_CASE("run config bounds") {
  CHECK_NOTHROW(validate_run_config(RunConfig{}));
  auto rejects = [](auto mutate) {
    RunConfig c;
    mutate(c);
    CHECK_THROWS_AS(validate_run_config(c), ConfigError);
  };
  rejects([](RunConfig& c) { c.alpha = 0.0; });
  rejects([](RunConfig& c) { c.beta = -0.1; });
  rejects([](RunConfig& c) { c.channels = 0; });
  rejects([](RunConfig& c) { c.layers = 0; });
  rejects([](RunConfig& c) { c.epochs = 0; });
  rejects([](RunConfig& c) { c.lr = 0.0; });
  rejects([](RunConfig& c) { c.alpha = std::nan(""); });
  RunConfig ok;
  ok.beta = 0.0;
  CHECK_NOTHROW(validate_run_config(ok));
}

TEST_CASE("run config maps onto the training config") {
  RunConfig c = small();
  c.alpha = 1.25;
  c.lr = 3e-3;
  const TrainConfig t = to_train_config(c);
  CHECK(t.alpha == 1.25);
  CHECK(t.lr == 3e-3);
  CHECK(t.model.channels == 8);
  CHECK(t.epochs == 2);
  CHECK(t.voxel_size == 0.5);
}

TEST_CASE("train and evaluate produces a consistent report") {
  const auto sc = scenes(2);
  const TrainEvalResult r = train_and_evaluate(small(), sc);
  CHECK(r.train.loss_trace.size() == 2);
  CHECK(r.detections.size() == 2);
  CHECK(r.report.map25 >= r.report.map50);
  const EvalReport again = compute_map(r.detections, ground_truth_of(sc));
  CHECK(report_to_json(again) == report_to_json(r.report));
  const Checkpoint ck = make_checkpoint(r.train, small(), sc[0].annotation.class_names);
  CHECK(ck.voxel_size == 0.5);
  CHECK(params_equal(load_checkpoint(save_checkpoint(ck)).params, r.train.params));
}

TEST_CASE("sweep records bad values and continues") {
  RunConfig c = small();
  c.epochs = 1;
  const SweepReport rep = cmd_sweep(c, SweepParam::Alpha, {1.0, -1.0, 2.0}, scenes(1));
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].error.empty());
  CHECK(rep.rows[0].map25.has_value());
  CHECK_FALSE(rep.rows[1].error.empty());
  CHECK_FALSE(rep.rows[1].map25.has_value());
  CHECK(rep.rows[2].error.empty());
  const auto j = nlohmann::json::parse(sweep_to_json(rep));
  CHECK(j["param"] == "alpha");
  CHECK(j["rows"][1].contains("error"));
  CHECK(sweep_to_table(rep).find("error") != std::string::npos);
}

TEST_CASE("sweep parameter names") {
  CHECK(parse_sweep_param("alpha") == SweepParam::Alpha);
  CHECK(parse_sweep_param("beta") == SweepParam::Beta);
  CHECK(sweep_param_name(SweepParam::Beta) == "beta");
  CHECK_THROWS_AS(parse_sweep_param("gamma"), ConfigError);
}

TEST_CASE("trace lists every stage in order") {
  const auto sc = scenes(1);
  ModelConfig mc;
  mc.channels = 4;
  mc.hidden = 4;
  mc.layers = 1;
  mc.classes = static_cast<int>(sc[0].annotation.class_names.size());
  Checkpoint ck;
  ck.params = init_params(mc, 1);
  ck.voxel_size = 0.5;
  ck.class_names = sc[0].annotation.class_names;
  const auto j = nlohmann::json::parse(cmd_pipeline_trace(sc[0].cloud, ck));
  const auto& names = trace_stage_names();
  REQUIRE(j["stages"].size() == names.size());
  for (std::size_t i = 0; i < names.size(); ++i) CHECK(j["stages"][i]["name"] == names[i]);
  CHECK(j["N"] == sc[0].cloud.size());
  CHECK(j["stages"][3]["max"].get<double>() == 1.0);
  CHECK(j["stages"].back()["shape"][0] == j["M"]);
}

TEST_CASE("trace names the stage that rejects bad labels") {
  const auto sc = scenes(1);
  ModelConfig mc;
  mc.classes = 3;
  Checkpoint ck;
  ck.params = init_params(mc, 1);
  SuperpointLabels bad;
  bad.ids.assign(3, 0);
  bad.count = 1;
  CHECK_THROWS_AS(cmd_pipeline_trace(sc[0].cloud, ck, bad), ShapeError);
}

TEST_CASE("weights JSON carries every field") {
  PointCloud c;
  c.positions = Points3::Zero(3, 3);
  c.positions(1, 0) = 1.0;
  c.colors = Points3::Zero(3, 3);
  const auto j = nlohmann::json::parse(weights_to_json(compute_geometry_weights(c, 2.0)));
  CHECK(j["alpha"] == 2.0);
  CHECK(j["weights"].size() == 3);
  CHECK(j["normalized"].size() == 3);
}
