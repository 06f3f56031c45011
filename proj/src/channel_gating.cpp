#include "geodet/channel_gating.hpp"

#include <cmath>
#include <string>

#include "geodet/errors.hpp"

namespace geodet {

namespace {

void check_width(const GatingParams& params, const Matrix& features, const char* what) {
  if (features.cols() != params.raw_weights.size()) {
    throw ShapeError(std::string(what) + ": gate has " + std::to_string(params.raw_weights.size()) +
                     " channels but features have " + std::to_string(features.cols()));
  }
}

}  // namespace

GatingParams init_gating(int channels) {
  if (channels < 1) throw ConfigError("gating needs at least one channel");
  return GatingParams{RowVector::Constant(channels, kGateInit)};
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

RowVector gating_coefficients(const GatingParams& params) {
  return params.raw_weights.unaryExpr([](double r) { return sigmoid(r); });
}

Matrix gate_features(const GatingParams& params, const Matrix& features) {
  check_width(params, features, "gate_features");
  return features.array().rowwise() * gating_coefficients(params).array();
}

GateGrad gate_backward(const GatingParams& params, const Matrix& features, const Matrix& upstream) {
  check_width(params, features, "gate_backward");
  if (upstream.rows() != features.rows() || upstream.cols() != features.cols()) {
    throw ShapeError("gate_backward: upstream gradient shape differs from features");
  }
  const RowVector s = gating_coefficients(params);
  GateGrad grad;
  grad.features = upstream.array().rowwise() * s.array();
  const RowVector dot = (features.array() * upstream.array()).colwise().sum();
  grad.raw = (s.array() * (1.0 - s.array()) * dot.array()).matrix();
  return grad;
}

}  // namespace geodet
