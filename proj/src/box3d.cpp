#include "geodet/box3d.hpp"

#include <algorithm>
#include <numeric>

namespace geodet {

void DetectionResult::sort_by_score() {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<Box3D> sorted_boxes;
  std::vector<double> sorted_scores;
  sorted_boxes.reserve(order.size());
  sorted_scores.reserve(order.size());
  for (std::size_t i : order) {
    sorted_boxes.push_back(boxes[i]);
    sorted_scores.push_back(scores[i]);
  }
  boxes = std::move(sorted_boxes);
  scores = std::move(sorted_scores);
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const Vec3 lo = a.min_corner().cwiseMax(b.min_corner());
  const Vec3 hi = a.max_corner().cwiseMin(b.max_corner());
  const Vec3 overlap = (hi - lo).cwiseMax(0.0);
  const double inter = overlap.prod();
  const double uni = a.volume() + b.volume() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double diou_loss(const Box3D& pred, const Box3D& gt) { return diou_loss_grad(pred, gt).loss; }

DiouGrad diou_loss_grad(const Box3D& pred, const Box3D& gt) {
  DiouGrad g;
  g.branches.reserve(12);
  const Vec3 plo = pred.min_corner(), phi = pred.max_corner();
  const Vec3 glo = gt.min_corner(), ghi = gt.max_corner();

  // Intersection extents and which box supplies each bound.
  Vec3 overlap;
  Eigen::Vector3i lo_from_pred, hi_from_pred, positive;
  for (int k = 0; k < 3; ++k) {
    lo_from_pred[k] = plo[k] >= glo[k];
    hi_from_pred[k] = phi[k] <= ghi[k];
    const double lo = lo_from_pred[k] ? plo[k] : glo[k];
    const double hi = hi_from_pred[k] ? phi[k] : ghi[k];
    positive[k] = hi > lo;
    overlap[k] = positive[k] ? hi - lo : 0.0;
  }
  const double inter = overlap.prod();
  const double vp = pred.volume();
  const double vg = gt.volume();
  const double uni = vp + vg - inter;
  const double iou = uni > 0.0 ? inter / uni : 0.0;

  // Enclosing box.
  Vec3 enclose;
  Eigen::Vector3i elo_from_pred, ehi_from_pred;
  for (int k = 0; k < 3; ++k) {
    elo_from_pred[k] = plo[k] <= glo[k];
    ehi_from_pred[k] = phi[k] >= ghi[k];
    enclose[k] = (ehi_from_pred[k] ? phi[k] : ghi[k]) - (elo_from_pred[k] ? plo[k] : glo[k]);
  }
  const double diag2 = enclose.squaredNorm();
  const Vec3 delta = pred.center - gt.center;
  const double rho2 = delta.squaredNorm();
  const double penalty = diag2 > 0.0 ? rho2 / diag2 : 0.0;
  g.loss = 1.0 - iou + penalty;

  for (int k = 0; k < 3; ++k) {
    g.branches.push_back(lo_from_pred[k]);
    g.branches.push_back(hi_from_pred[k]);
    g.branches.push_back(positive[k]);
    g.branches.push_back(elo_from_pred[k]);
    g.branches.push_back(ehi_from_pred[k]);
  }
  if (!(uni > 0.0)) return g;

  // dL/dIoU = -1; IoU = inter / (vp + vg - inter).
  const double d_inter = -(uni + inter) / (uni * uni);
  const double d_vp = inter / (uni * uni);
  Vec3 d_plo = Vec3::Zero(), d_phi = Vec3::Zero();
  for (int k = 0; k < 3; ++k) {
    if (positive[k]) {
      double others = 1.0;
      for (int j = 0; j < 3; ++j) {
        if (j != k) others *= overlap[j];
      }
      const double d_overlap = d_inter * others;
      if (lo_from_pred[k]) d_plo[k] -= d_overlap;
      if (hi_from_pred[k]) d_phi[k] += d_overlap;
    }
    double size_others = 1.0;
    for (int j = 0; j < 3; ++j) {
      if (j != k) size_others *= pred.size[j];
    }
    g.d_size[k] += d_vp * size_others;
  }
  if (diag2 > 0.0) {
    for (int k = 0; k < 3; ++k) {
      g.d_center[k] += 2.0 * delta[k] / diag2;
      const double d_enclose = -rho2 * 2.0 * enclose[k] / (diag2 * diag2);
      if (ehi_from_pred[k]) d_phi[k] += d_enclose;
      if (elo_from_pred[k]) d_plo[k] -= d_enclose;
    }
  }
  // lo = c - s/2, hi = c + s/2
  g.d_center += d_plo + d_phi;
  g.d_size += 0.5 * (d_phi - d_plo);
  return g;
}

}  // namespace geodet
