#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "geodet/channel_gating.hpp"
#include "geodet/errors.hpp"
#include "geodet/rng.hpp"

using namespace geodet;

TEST_CASE("initial gate is sigmoid(0.1) on every channel") {
  const GatingParams p = init_gating(6);
  const RowVector g = gating_coefficients(p);
  REQUIRE(g.size() == 6);
  for (Eigen::Index k = 0; k < 6; ++k) CHECK(g[k] == doctest::Approx(0.52497918747894).epsilon(1e-13));
}

TEST_CASE("sigmoid is stable at large magnitude") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(std::isfinite(sigmoid(-1e308)));
  CHECK(sigmoid(-30.0) == doctest::Approx(9.357622968840175e-14).epsilon(1e-12));
}

TEST_CASE("gated features scale each column") {
  GatingParams p{RowVector::Zero(3)};
  p.raw_weights << 0.0, 100.0, -100.0;
  Matrix f(2, 3);
  f << 2, 3, 4, -1, -2, -3;
  const Matrix g = gate_features(p, f);
  CHECK(g(0, 0) == 1.0);
  CHECK(g(1, 1) == doctest::Approx(-2.0));
  CHECK(std::abs(g(0, 2)) < 1e-40);
}

TEST_CASE("channel mismatch is a shape error") {
  GatingParams p{RowVector::Zero(3)};
  CHECK_THROWS_AS(gate_features(p, Matrix::Zero(2, 4)), ShapeError);
}

TEST_CASE("gate backward against central differences") {
  SplitMix64 rng(3);
  GatingParams p{RowVector(4)};
  for (int k = 0; k < 4; ++k) p.raw_weights[k] = rng.uniform(-2, 2);
  Matrix f(5, 4), up(5, 4);
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    f.data()[i] = rng.normal();
    up.data()[i] = rng.normal();
  }
  auto objective = [&]() { return (gate_features(p, f).array() * up.array()).sum(); };
  const GateGrad g = gate_backward(p, f, up);
  for (int k = 0; k < 4; ++k) {
    const double fd = oracle::central_difference(objective, &p.raw_weights[k], 1e-5);
    CHECK(oracle::grad_close(g.raw[k], fd, 1e-7, 1e-10));
  }
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double fd = oracle::central_difference(objective, &f.data()[i], 1e-5);
    CHECK(oracle::grad_close(g.features.data()[i], fd, 1e-7, 1e-10));
  }
}
