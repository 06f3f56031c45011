#pragma once

#include <utility>
#include <vector>

#include "geodet/box3d.hpp"
#include "geodet/types.hpp"

namespace geodet {

struct MatchWeights {
  double cls = 1.0;
  double box = 1.0;
};

using Assignment = std::vector<std::pair<int, int>>;  // (prediction, ground truth)

// Minimum-cost one-to-one assignment on a rows x cols cost matrix. Every row
// is assigned when rows <= cols, every column otherwise. Result is sorted by
// row index.
Assignment solve_assignment(const Matrix& cost);

// cost[i][j] = cls * -log softmax(logits_i)[class_j] + box * DIoU(pred_i, gt_j)
Matrix matching_cost(const std::vector<Box3D>& pred_boxes, const Matrix& class_logits,
                     const std::vector<Box3D>& gt_boxes, const MatchWeights& weights = {});

// Optimal bipartite matching of predictions to ground truth. Predictions left
// out of the result are trained toward the no-object class.
Assignment match(const std::vector<Box3D>& pred_boxes, const Matrix& class_logits,
                 const std::vector<Box3D>& gt_boxes, const MatchWeights& weights = {});

double assignment_cost(const Matrix& cost, const Assignment& assignment);

// Row-wise log-softmax.
Matrix log_softmax_rows(const Matrix& logits);

}  // namespace geodet
