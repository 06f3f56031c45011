#pragma once

#include "geodet/types.hpp"

namespace geodet {

inline constexpr double kGateInit = 0.1;

// Trainable per-channel gate. The stored weights are unconstrained; the
// coefficient applied to channel c is sigmoid(raw_weights[c]).
struct GatingParams {
  RowVector raw_weights;

  int channels() const { return static_cast<int>(raw_weights.size()); }
};

GatingParams init_gating(int channels);

double sigmoid(double x);
RowVector gating_coefficients(const GatingParams& params);

// out[i][c] = sigmoid(raw[c]) * features[i][c]
Matrix gate_features(const GatingParams& params, const Matrix& features);

struct GateGrad {
  RowVector raw;
  Matrix features;
};

GateGrad gate_backward(const GatingParams& params, const Matrix& features, const Matrix& upstream);

}  // namespace geodet
