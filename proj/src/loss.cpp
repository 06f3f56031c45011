#include "geodet/loss.hpp"

#include <cmath>
#include <string>

#include "geodet/errors.hpp"

namespace geodet {

LossOutput total_loss(const Assignment& assignment, const Prediction& prediction,
                      const std::vector<Box3D>& gt, double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be non-negative");
  const auto m = static_cast<Eigen::Index>(prediction.boxes.size());
  const Matrix& logits = prediction.class_logits;
  if (logits.rows() != m || m == 0) throw ShapeError("total_loss: logits do not match predictions");
  const auto no_object = static_cast<int>(logits.cols()) - 1;

  std::vector<int> target(static_cast<std::size_t>(m), no_object);
  for (const auto& [i, j] : assignment) {
    if (i < 0 || i >= m || j < 0 || j >= static_cast<int>(gt.size())) {
      throw ValidationError("total_loss: assignment index out of range");
    }
    const int cls = gt[static_cast<std::size_t>(j)].class_id;
    if (cls < 0 || cls >= no_object) throw ValidationError("total_loss: ground-truth class out of range");
    target[static_cast<std::size_t>(i)] = cls;
  }

  LossOutput out;
  const Matrix logp = log_softmax_rows(logits);
  out.d_logits = logp.array().exp();
  for (Eigen::Index i = 0; i < m; ++i) {
    const int t = target[static_cast<std::size_t>(i)];
    out.cls -= logp(i, t);
    out.d_logits(i, t) -= 1.0;
  }
  out.cls /= static_cast<double>(m);
  out.d_logits *= beta / static_cast<double>(m);

  out.d_boxes = Matrix::Zero(m, 6);
  if (!assignment.empty()) {
    const double inv = 1.0 / static_cast<double>(assignment.size());
    for (const auto& [i, j] : assignment) {
      DiouGrad d = diou_loss_grad(prediction.boxes[static_cast<std::size_t>(i)], gt[static_cast<std::size_t>(j)]);
      out.reg += d.loss;
      out.d_boxes.row(i).head<3>() += inv * d.d_center.transpose();
      out.d_boxes.row(i).tail<3>() += inv * d.d_size.transpose();
      out.branches.insert(out.branches.end(), d.branches.begin(), d.branches.end());
    }
    out.reg *= inv;
  }
  out.total = beta * out.cls + out.reg;
  return out;
}

SceneLoss scene_loss(const ModelParams& params, const SceneInput& scene, const std::vector<Box3D>& gt,
                     double beta, bool with_grad) {
  SceneLoss s;
  s.forward = forward(params, scene);
  s.assignment = match(s.forward.prediction.boxes, s.forward.prediction.class_logits, gt);
  s.loss = total_loss(s.assignment, s.forward.prediction, gt, beta);
  if (with_grad) {
    s.grad = backward(params, scene, s.forward, s.loss.d_boxes, s.loss.d_logits);
  }
  const auto& am = s.forward.local_feat.argmax;
  s.signature.assign(am.data(), am.data() + am.size());
  for (const auto& [i, j] : s.assignment) {
    s.signature.push_back(i);
    s.signature.push_back(j);
  }
  s.signature.insert(s.signature.end(), s.loss.branches.begin(), s.loss.branches.end());
  return s;
}

}  // namespace geodet
