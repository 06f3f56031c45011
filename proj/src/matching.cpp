#include "geodet/matching.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "geodet/errors.hpp"

namespace geodet {

namespace {

// Shortest augmenting path Hungarian method with potentials, for n <= m.
// Returns the column assigned to each row.
std::vector<int> hungarian(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

Assignment solve_assignment(const Matrix& cost) {
  Assignment out;
  if (cost.rows() == 0 || cost.cols() == 0) return out;
  if (!cost.allFinite()) throw ValidationError("assignment cost matrix has non-finite entries");
  if (cost.rows() <= cost.cols()) {
    const auto cols = hungarian(cost);
    for (int i = 0; i < static_cast<int>(cols.size()); ++i) out.emplace_back(i, cols[i]);
  } else {
    const Matrix t = cost.transpose();
    const auto rows = hungarian(t);
    for (int j = 0; j < static_cast<int>(rows.size()); ++j) out.emplace_back(rows[j], j);
    std::sort(out.begin(), out.end());
  }
  return out;
}

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    const double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

Matrix matching_cost(const std::vector<Box3D>& pred_boxes, const Matrix& class_logits,
                     const std::vector<Box3D>& gt_boxes, const MatchWeights& weights) {
  if (static_cast<Eigen::Index>(pred_boxes.size()) != class_logits.rows()) {
    throw ShapeError("matching_cost: " + std::to_string(pred_boxes.size()) + " boxes but " +
                     std::to_string(class_logits.rows()) + " logit rows");
  }
  const Matrix logp = log_softmax_rows(class_logits);
  Matrix cost(static_cast<Eigen::Index>(pred_boxes.size()), static_cast<Eigen::Index>(gt_boxes.size()));
  for (std::size_t i = 0; i < pred_boxes.size(); ++i) {
    for (std::size_t j = 0; j < gt_boxes.size(); ++j) {
      const int cls = gt_boxes[j].class_id;
      if (cls < 0 || cls >= class_logits.cols()) {
        throw ValidationError("matching_cost: ground-truth class " + std::to_string(cls) + " has no logit");
      }
      cost(i, j) = weights.cls * -logp(i, cls) + weights.box * diou_loss(pred_boxes[i], gt_boxes[j]);
    }
  }
  return cost;
}

Assignment match(const std::vector<Box3D>& pred_boxes, const Matrix& class_logits,
                 const std::vector<Box3D>& gt_boxes, const MatchWeights& weights) {
  if (gt_boxes.empty() || pred_boxes.empty()) return {};
  return solve_assignment(matching_cost(pred_boxes, class_logits, gt_boxes, weights));
}

double assignment_cost(const Matrix& cost, const Assignment& assignment) {
  double total = 0.0;
  for (const auto& [i, j] : assignment) total += cost(i, j);
  return total;
}

}  // namespace geodet
