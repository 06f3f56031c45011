#include <doctest.h>

#include <nlohmann/json.hpp>

#include "support/gradcheck.hpp"
#include "geodet/checkpoint.hpp"
#include "geodet/errors.hpp"

using namespace geodet;

namespace {

Checkpoint sample() {
  ModelConfig c;
  c.hidden = 5;
  c.channels = 4;
  c.layers = 2;
  c.classes = 3;
  Checkpoint ck;
  ck.params = init_params(c, 9);
  SplitMix64 rng(4);
  gradcheck::jitter(ck.params, rng, 1e-3);
  ck.alpha = 1.5;
  ck.voxel_size = 0.3;
  ck.class_names = {"a", "b", "c"};
  return ck;
}

}  // namespace

TEST_CASE("round trip is exact") {
  const Checkpoint ck = sample();
  const std::string bytes = save_checkpoint(ck);
  const Checkpoint back = load_checkpoint(bytes);
  CHECK(params_equal(ck.params, back.params));
  CHECK(back.alpha == ck.alpha);
  CHECK(back.voxel_size == ck.voxel_size);
  CHECK(back.class_names == ck.class_names);
  CHECK(save_checkpoint(back) == bytes);
}

TEST_CASE("header fields are written") {
  const auto j = nlohmann::json::parse(save_checkpoint(sample()));
  CHECK(j["format"] == "geodet-checkpoint");
  CHECK(j["version"] == kCheckpointVersion);
  CHECK(j["config"]["channels"] == 4);
}

TEST_CASE("expected config mismatch is a shape error") {
  const std::string bytes = save_checkpoint(sample());
  ModelConfig other = sample().params.config;
  CHECK_NOTHROW(load_checkpoint(bytes, other));
  other.channels = 8;
  CHECK_THROWS_AS(load_checkpoint(bytes, other), ShapeError);
}

TEST_CASE("tampered tensors are rejected") {
  auto j = nlohmann::json::parse(save_checkpoint(sample()));
  auto bad_shape = j;
  bad_shape["tensors"][0]["shape"][0] = 99;
  CHECK_THROWS_AS(load_checkpoint(bad_shape.dump()), ShapeError);
  auto short_data = j;
  short_data["tensors"][0]["data"].erase(0);
  CHECK_THROWS_AS(load_checkpoint(short_data.dump()), ShapeError);
  auto missing = j;
  missing["tensors"].erase(0);
  CHECK_THROWS(load_checkpoint(missing.dump()));
}

TEST_CASE("malformed documents are parse errors") {
  CHECK_THROWS_AS(load_checkpoint(""), ParseError);
  CHECK_THROWS_AS(load_checkpoint("{"), ParseError);
  CHECK_THROWS_AS(load_checkpoint("[]"), ParseError);
  auto j = nlohmann::json::parse(save_checkpoint(sample()));
  j["version"] = 2;
  CHECK_THROWS_AS(load_checkpoint(j.dump()), ParseError);
  j = nlohmann::json::parse(save_checkpoint(sample()));
  j["format"] = "other";
  CHECK_THROWS_AS(load_checkpoint(j.dump()), ParseError);
}

TEST_CASE("params_equal notices a single changed value") {
  const Checkpoint ck = sample();
  ModelParams p = ck.params;
  CHECK(params_equal(p, ck.params));
  p.cls_b2[0] = std::nextafter(p.cls_b2[0], 1.0);
  CHECK_FALSE(params_equal(p, ck.params));
}
