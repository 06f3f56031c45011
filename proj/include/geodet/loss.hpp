#pragma once

#include <vector>

#include "geodet/box3d.hpp"
#include "geodet/matching.hpp"
#include "geodet/model.hpp"
#include "geodet/types.hpp"

namespace geodet {

inline constexpr double kDefaultBeta = 0.5;

struct LossOutput {
  double total = 0.0;
  double cls = 0.0;  // mean cross-entropy over every prediction
  double reg = 0.0;  // mean DIoU over matched pairs, 0 when nothing matched
  Matrix d_boxes;    // M x 6: dL/dcenter, dL/dsize
  Matrix d_logits;   // M x (K + 1)
  std::vector<int> branches;  // DIoU min/max branches of every matched pair
};

// total = beta * cls + reg. Matched predictions target their ground-truth
// class; every other prediction targets the no-object class K.
LossOutput total_loss(const Assignment& assignment, const Prediction& prediction,
                      const std::vector<Box3D>& gt, double beta = kDefaultBeta);

struct SceneLoss {
  LossOutput loss;
  Assignment assignment;
  ModelParams grad;
  ForwardPass forward;
  // Every discrete choice made on the way to the loss (scatter-max winners,
  // matching, DIoU branches). Gradients are exact while it stays fixed.
  std::vector<int> signature;
};

SceneLoss scene_loss(const ModelParams& params, const SceneInput& scene, const std::vector<Box3D>& gt,
                     double beta = kDefaultBeta, bool with_grad = true);

}  // namespace geodet
