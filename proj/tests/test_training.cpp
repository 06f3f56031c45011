#include <doctest.h>

#include "geodet/checkpoint.hpp"
#include "geodet/errors.hpp"
#include "geodet/synthetic_scenes.hpp"
#include "geodet/training.hpp"

using namespace geodet;

namespace {

std::vector<LabeledScene> tiny_suite(int n, std::uint64_t seed) {
  SceneSpec spec;
  spec.points_per_object = 60;
  spec.clutter_density = 0.0;
  std::vector<LabeledScene> out;
  for (int i = 0; i < n; ++i) {
    spec.seed = seed + i;
    SyntheticScene s = generate_scene(spec);
    out.push_back({"scene_" + std::to_string(i), s.cloud, s.annotation});
  }
  return out;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.model.channels = 8;
  c.model.hidden = 8;
  c.model.layers = 1;
  c.voxel_size = 0.5;
  c.epochs = 3;
  return c;
}

}  // namespace

TEST_CASE("poly schedule") {
  CHECK(poly_lr(1.0, 0, 10, 0.9) == 1.0);
  CHECK(poly_lr(2e-4, 5, 10, 0.9) == doctest::Approx(2e-4 * std::pow(0.5, 0.9)).epsilon(1e-15));
  CHECK(poly_lr(1.0, 10, 10, 0.9) == 0.0);
  CHECK(poly_lr(1.0, 3, 10, 0.0) == 1.0);
}

TEST_CASE("derived seeds differ by stream and are reproducible") {
  CHECK(derive_seed(7, 0) == derive_seed(7, 0));
  CHECK(derive_seed(7, 0) != derive_seed(7, 1));
  CHECK(derive_seed(7, 0) != derive_seed(8, 0));
}

TEST_CASE("one AdamW step by hand") {
  ModelConfig mc;
  mc.channels = 2;
  mc.hidden = 2;
  mc.layers = 1;
  ModelParams p = init_params(mc, 1);
  ModelParams g = p.zeros_like();
  g.proj_b[0] = 0.5;
  g.proj_b[1] = -2.0;
  const ModelParams before = p;
  AdamW opt(p, 0.9, 0.999, 1e-8, 0.05);
  opt.step(p, g, 0.01);
  // First step: m_hat = g, v_hat = g^2, so the update is lr * (sign(g) + wd * p) up to eps.
  CHECK(p.proj_b[0] == doctest::Approx(before.proj_b[0] - 0.01 * (0.5 / (0.5 + 1e-8))).epsilon(1e-14));
  CHECK(p.proj_b[1] == doctest::Approx(before.proj_b[1] + 0.01 * (2.0 / (2.0 + 1e-8))).epsilon(1e-14));
  CHECK(p.proj_w(0, 0) == doctest::Approx(before.proj_w(0, 0) * (1.0 - 0.01 * 0.05)).epsilon(1e-14));
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  TrainConfig c = tiny_config();
  c.lr = 0.0;
  const auto scenes = tiny_suite(2, 3);
  const TrainResult r = train_toy(scenes, c);
  ModelConfig mc = c.model;
  mc.classes = static_cast<int>(scenes[0].annotation.class_names.size());
  CHECK(params_equal(r.params, init_params(mc, derive_seed(c.seed, 0))));
  CHECK(r.loss_trace[0] == r.loss_trace[2]);
}

TEST_CASE("training is deterministic") {
  const auto scenes = tiny_suite(2, 5);
  const TrainResult a = train_toy(scenes, tiny_config()), b = train_toy(scenes, tiny_config());
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(params_equal(a.params, b.params));
}

TEST_CASE("loss trace reports each epoch") {
  int calls = 0;
  const TrainResult r = train_toy(tiny_suite(1, 2), tiny_config(), [&](int e, double l) {
    CHECK(e == calls);
    CHECK(std::isfinite(l));
    ++calls;
  });
  CHECK(calls == 3);
  CHECK(r.loss_trace.size() == 3);
}

TEST_CASE("bad configurations are rejected") {
  const auto scenes = tiny_suite(1, 2);
  TrainConfig c = tiny_config();
  c.epochs = 0;
  CHECK_THROWS_AS(train_toy(scenes, c), ConfigError);
  c = tiny_config();
  c.alpha = -1.0;
  CHECK_THROWS_AS(train_toy(scenes, c), ConfigError);
  c = tiny_config();
  c.voxel_size = 0.0;
  CHECK_THROWS_AS(train_toy(scenes, c), ConfigError);
  CHECK_THROWS_AS(train_toy({}, tiny_config()), ValidationError);
}

TEST_CASE("mismatched class lists are rejected") {
  auto scenes = tiny_suite(2, 2);
  scenes[1].annotation.class_names.push_back("extra");
  CHECK_THROWS_AS(train_toy(scenes, tiny_config()), ValidationError);
}

TEST_CASE("divergent training stops with a numerical error") {
  TrainConfig c = tiny_config();
  c.lr = 1e6;
  c.epochs = 50;
  CHECK_THROWS_AS(train_toy(tiny_suite(1, 2), c), NumericalError);
}

TEST_CASE("single scene overfit drives the loss down") {
  TrainConfig c;
  c.voxel_size = 0.25;
  c.lr = 1e-3;
  c.epochs = 500;
  const TrainResult r = train_toy(tiny_suite(1, 7), c);
  MESSAGE("initial " << r.loss_trace.front() << " final " << r.loss_trace.back());
  CHECK(r.loss_trace.back() < 0.1 * r.loss_trace.front());
}
