#pragma once

#include <string>
#include <vector>

#include "geodet/types.hpp"

namespace geodet {

// Axis-aligned box. `size` holds full extents (w, l, h) in meters.
struct Box3D {
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();
  int class_id = 0;

  Vec3 min_corner() const { return center - 0.5 * size; }
  Vec3 max_corner() const { return center + 0.5 * size; }
  double volume() const { return size.prod(); }
};

// Scored detections for one scene. Kept sorted by descending score.
struct DetectionResult {
  std::string scene;
  std::vector<Box3D> boxes;
  std::vector<double> scores;

  void sort_by_score();
};

double iou_3d(const Box3D& a, const Box3D& b);

// 1 - IoU + |c_a - c_b|^2 / diag^2 where diag spans the smallest axis-aligned
// box enclosing both. The penalty is dropped when the enclosing box has zero
// diagonal.
double diou_loss(const Box3D& pred, const Box3D& gt);

struct DiouGrad {
  double loss = 0.0;
  Vec3 d_center = Vec3::Zero();
  Vec3 d_size = Vec3::Zero();
  // Branch taken by every min/max in the forward pass. Gradients are exact
  // for perturbations that leave this unchanged.
  std::vector<int> branches;
};

// Loss and its gradient with respect to the predicted center and size.
DiouGrad diou_loss_grad(const Box3D& pred, const Box3D& gt);

}  // namespace geodet
