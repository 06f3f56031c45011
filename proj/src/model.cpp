#include "geodet/model.hpp"

#include <cmath>
#include <numbers>

#include "geodet/errors.hpp"
#include "geodet/rng.hpp"

namespace geodet {

namespace {

constexpr int kInputDim = 6;
constexpr int kBoxDim = 6;
// Box outputs start near zero: centers at the superpoint centroid, sizes near 1 m.
constexpr double kBoxOutputScale = 0.01;
// Class logits start nearly uniform across queries with a no-object prior.
constexpr double kClassOutputScale = 0.01;
constexpr double kObjectPrior = 0.02;

Matrix glorot(int fan_in, int fan_out, SplitMix64& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
  return w;
}

Matrix apply_gelu(const Matrix& x) { return x.unaryExpr([](double v) { return gelu(v); }); }

Matrix gelu_backward(const Matrix& pre, const Matrix& upstream) {
  return upstream.array() * pre.unaryExpr([](double v) { return gelu_derivative(v); }).array();
}

Matrix affine(const Matrix& x, const Matrix& w, const RowVector& b) {
  Matrix out = x * w;
  out.rowwise() += b;
  return out;
}

void check_cols(const Matrix& x, Eigen::Index cols, const char* what) {
  if (x.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(cols) + " columns, got " +
                     std::to_string(x.cols()));
  }
}

Matrix points_matrix(const PointCloud& cloud) {
  Matrix pts(cloud.positions.rows(), kInputDim);
  pts << cloud.positions, cloud.colors;
  return pts;
}

}  // namespace

double gelu(double x) {
  constexpr double k = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

double gelu_derivative(double x) {
  constexpr double k = 0.7978845608028654;
  const double t = std::tanh(k * (x + 0.044715 * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * k * (1.0 + 3.0 * 0.044715 * x * x);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - mx).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

std::string_view param_group_name(ParamGroup group) {
  switch (group) {
    case ParamGroup::Backbone: return "backbone";
    case ParamGroup::Gating: return "gating";
    case ParamGroup::Projection: return "projection";
    case ParamGroup::Encoder: return "encoder";
    case ParamGroup::BoxHead: return "box_head";
    case ParamGroup::ClassHead: return "class_head";
  }
  return "unknown";
}

void validate_model_config(const ModelConfig& c) {
  if (c.hidden < 1) throw ConfigError("hidden width must be >= 1");
  if (c.channels < 1) throw ConfigError("channel count must be >= 1");
  if (c.layers < 1) throw ConfigError("encoder layer count must be >= 1");
  if (c.classes < 1) throw ConfigError("class count must be >= 1");
  if (c.ffn_mult < 1) throw ConfigError("feed-forward multiplier must be >= 1");
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.for_each_tensor([](const std::string&, ParamGroup, auto& t) { t.setZero(); });
  return z;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&](const std::string&, ParamGroup, const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  validate_model_config(config);
  SplitMix64 rng(seed);
  const int h = config.hidden;
  const int c = config.channels;
  const int f = config.ffn_mult * c;
  ModelParams p;
  p.config = config;
  p.backbone_w1 = glorot(kInputDim, h, rng);
  p.backbone_b1 = RowVector::Zero(h);
  p.backbone_w2 = glorot(h, c, rng);
  p.backbone_b2 = RowVector::Zero(c);
  p.gating = init_gating(c);
  p.proj_w = glorot(2 * c, c, rng);
  p.proj_b = RowVector::Zero(c);
  for (int l = 0; l < config.layers; ++l) {
    EncoderBlock b;
    b.wq = glorot(c, c, rng);
    b.wk = glorot(c, c, rng);
    b.wv = glorot(c, c, rng);
    b.wo = glorot(c, c, rng);
    b.bq = b.bk = b.bv = b.bo = RowVector::Zero(c);
    b.w1 = glorot(c, f, rng);
    b.b1 = RowVector::Zero(f);
    b.w2 = glorot(f, c, rng);
    b.b2 = RowVector::Zero(c);
    p.blocks.push_back(std::move(b));
  }
  p.box_w1 = glorot(c, h, rng);
  p.box_b1 = RowVector::Zero(h);
  p.box_w2 = kBoxOutputScale * glorot(h, kBoxDim, rng);
  p.box_b2 = RowVector::Zero(kBoxDim);
  p.cls_w1 = glorot(c, h, rng);
  p.cls_b1 = RowVector::Zero(h);
  p.cls_w2 = kClassOutputScale * glorot(h, config.classes + 1, rng);
  p.cls_b2 = RowVector::Zero(config.classes + 1);
  p.cls_b2[config.classes] = std::log(config.classes * (1.0 - kObjectPrior) / kObjectPrior);
  return p;
}

SceneInput prepare_scene(const PointCloud& cloud, const SuperpointLabels& labels, double alpha) {
  validate_point_cloud(cloud);
  validate_labels(labels, cloud.size());
  SceneInput s;
  s.points = points_matrix(cloud);
  s.geometry = compute_geometry_weights(cloud, alpha);
  s.labels = labels;
  s.centroids = superpoint_centroids(cloud, labels);
  return s;
}

SceneInput prepare_scene(const PointCloud& cloud, double alpha, double voxel_size) {
  return prepare_scene(cloud, cluster_voxel_grid(cloud, voxel_size), alpha);
}

BackboneCache backbone_forward_cached(const Matrix& points, const ModelParams& params) {
  check_cols(points, kInputDim, "backbone_forward");
  BackboneCache c;
  c.hidden_pre = affine(points, params.backbone_w1, params.backbone_b1);
  c.hidden = apply_gelu(c.hidden_pre);
  c.features = affine(c.hidden, params.backbone_w2, params.backbone_b2);
  return c;
}

Matrix backbone_forward(const PointCloud& cloud, const ModelParams& params) {
  validate_point_cloud(cloud);
  return backbone_forward_cached(points_matrix(cloud), params).features;
}

EncoderCache encoder_forward_cached(const Matrix& queries, const ModelParams& params) {
  const int c = params.config.channels;
  if (queries.rows() < 1) throw ShapeError("encoder_forward: no queries");
  check_cols(queries, 2 * c, "encoder_forward");
  const double scale = 1.0 / std::sqrt(static_cast<double>(c));
  EncoderCache cache;
  cache.input = queries;
  cache.projected = affine(queries, params.proj_w, params.proj_b);
  Matrix x = cache.projected;
  for (const auto& b : params.blocks) {
    BlockCache bc;
    bc.input = x;
    bc.q = affine(x, b.wq, b.bq);
    bc.k = affine(x, b.wk, b.bk);
    bc.v = affine(x, b.wv, b.bv);
    bc.attention = softmax_rows((bc.q * bc.k.transpose()) * scale);
    bc.context = bc.attention * bc.v;
    bc.mid = x + affine(bc.context, b.wo, b.bo);
    bc.ffn_pre = affine(bc.mid, b.w1, b.b1);
    bc.ffn_hidden = apply_gelu(bc.ffn_pre);
    bc.output = bc.mid + affine(bc.ffn_hidden, b.w2, b.b2);
    x = bc.output;
    cache.blocks.push_back(std::move(bc));
  }
  cache.output = x;
  return cache;
}

Matrix encoder_forward(const HybridRepresentation& queries, const ModelParams& params) {
  return encoder_forward_cached(queries.features, params).output;
}

HeadCache heads_forward(const Matrix& encoded, const ModelParams& params) {
  check_cols(encoded, params.config.channels, "predict");
  HeadCache h;
  h.box_pre = affine(encoded, params.box_w1, params.box_b1);
  h.box_hidden = apply_gelu(h.box_pre);
  h.box_raw = affine(h.box_hidden, params.box_w2, params.box_b2);
  h.cls_pre = affine(encoded, params.cls_w1, params.cls_b1);
  h.cls_hidden = apply_gelu(h.cls_pre);
  h.logits = affine(h.cls_hidden, params.cls_w2, params.cls_b2);
  return h;
}

std::vector<Box3D> decode_boxes(const Matrix& box_raw, const Points3& centroids) {
  if (box_raw.rows() != centroids.rows() || box_raw.cols() != kBoxDim) {
    throw ShapeError("decode_boxes: box outputs do not match the superpoint centroids");
  }
  std::vector<Box3D> boxes(static_cast<std::size_t>(box_raw.rows()));
  for (Eigen::Index m = 0; m < box_raw.rows(); ++m) {
    auto& b = boxes[static_cast<std::size_t>(m)];
    b.center = centroids.row(m).transpose() + box_raw.row(m).head<3>().transpose();
    b.size = box_raw.row(m).tail<3>().transpose().array().exp();
    b.class_id = 0;
  }
  return boxes;
}

Prediction predict(const Matrix& encoded, const Points3& centroids, const ModelParams& params) {
  if (encoded.rows() != centroids.rows()) {
    throw ShapeError("predict: " + std::to_string(encoded.rows()) + " queries but " +
                     std::to_string(centroids.rows()) + " centroids");
  }
  HeadCache h = heads_forward(encoded, params);
  Prediction p;
  p.boxes = decode_boxes(h.box_raw, centroids);
  p.class_logits = std::move(h.logits);
  return p;
}

ForwardPass forward(const ModelParams& params, const SceneInput& scene) {
  ForwardPass f;
  f.backbone = backbone_forward_cached(scene.points, params);
  f.gated = gate_features(params.gating, f.backbone.features);
  f.recalibrated = recalibrate(scene.geometry.weights, f.gated);
  f.global_feat = scatter_mean(scene.labels, f.recalibrated);
  f.local_feat = scatter_max(scene.labels, f.gated);
  f.hybrid = fuse(f.global_feat, f.local_feat.values, scene.centroids);
  f.encoder = encoder_forward_cached(f.hybrid.features, params);
  f.heads = heads_forward(f.encoder.output, params);
  f.prediction.boxes = decode_boxes(f.heads.box_raw, scene.centroids);
  f.prediction.class_logits = f.heads.logits;
  return f;
}

ModelParams backward(const ModelParams& params, const SceneInput& scene, const ForwardPass& fwd,
                     const Matrix& d_boxes, const Matrix& d_logits) {
  const auto m = fwd.heads.box_raw.rows();
  if (d_boxes.rows() != m || d_boxes.cols() != kBoxDim || d_logits.rows() != m ||
      d_logits.cols() != fwd.heads.logits.cols()) {
    throw ShapeError("backward: upstream gradients do not match the forward pass");
  }
  ModelParams g = params.zeros_like();

  // Box decoding: center = centroid + raw[0:3], size = exp(raw[3:6]).
  Matrix d_raw(m, kBoxDim);
  d_raw.leftCols<3>() = d_boxes.leftCols<3>();
  d_raw.rightCols<3>() = d_boxes.rightCols<3>().array() * fwd.heads.box_raw.rightCols<3>().array().exp();

  const HeadCache& h = fwd.heads;
  const Matrix& enc = fwd.encoder.output;
  g.box_w2 = h.box_hidden.transpose() * d_raw;
  g.box_b2 = d_raw.colwise().sum();
  Matrix d_box_pre = gelu_backward(h.box_pre, d_raw * params.box_w2.transpose());
  g.box_w1 = enc.transpose() * d_box_pre;
  g.box_b1 = d_box_pre.colwise().sum();

  g.cls_w2 = h.cls_hidden.transpose() * d_logits;
  g.cls_b2 = d_logits.colwise().sum();
  Matrix d_cls_pre = gelu_backward(h.cls_pre, d_logits * params.cls_w2.transpose());
  g.cls_w1 = enc.transpose() * d_cls_pre;
  g.cls_b1 = d_cls_pre.colwise().sum();

  Matrix dx = d_box_pre * params.box_w1.transpose() + d_cls_pre * params.cls_w1.transpose();

  const double scale = 1.0 / std::sqrt(static_cast<double>(params.config.channels));
  for (std::size_t l = params.blocks.size(); l-- > 0;) {
    const EncoderBlock& b = params.blocks[l];
    const BlockCache& bc = fwd.encoder.blocks[l];
    EncoderBlock& gb = g.blocks[l];

    // output = mid + gelu(mid W1 + b1) W2 + b2
    gb.w2 = bc.ffn_hidden.transpose() * dx;
    gb.b2 = dx.colwise().sum();
    Matrix d_ffn_pre = gelu_backward(bc.ffn_pre, dx * b.w2.transpose());
    gb.w1 = bc.mid.transpose() * d_ffn_pre;
    gb.b1 = d_ffn_pre.colwise().sum();
    Matrix d_mid = dx + d_ffn_pre * b.w1.transpose();

    // mid = input + (A V) Wo + bo, A = softmax(Q K^T * scale)
    gb.wo = bc.context.transpose() * d_mid;
    gb.bo = d_mid.colwise().sum();
    Matrix d_context = d_mid * b.wo.transpose();
    Matrix d_attention = d_context * bc.v.transpose();
    Matrix d_v = bc.attention.transpose() * d_context;
    Vector row_dot = (d_attention.array() * bc.attention.array()).rowwise().sum();
    Matrix d_scores = bc.attention.array() * (d_attention.colwise() - row_dot).array();
    d_scores *= scale;
    Matrix d_q = d_scores * bc.k;
    Matrix d_k = d_scores.transpose() * bc.q;
    gb.wq = bc.input.transpose() * d_q;
    gb.bq = d_q.colwise().sum();
    gb.wk = bc.input.transpose() * d_k;
    gb.bk = d_k.colwise().sum();
    gb.wv = bc.input.transpose() * d_v;
    gb.bv = d_v.colwise().sum();
    dx = d_mid + d_q * b.wq.transpose() + d_k * b.wk.transpose() + d_v * b.wv.transpose();
  }

  g.proj_w = fwd.encoder.input.transpose() * dx;
  g.proj_b = dx.colwise().sum();
  Matrix d_hybrid = dx * params.proj_w.transpose();

  AggregateGrad agg = aggregate_backward(scene.labels, fwd.local_feat.argmax, d_hybrid);
  Matrix d_gated = agg.gated + recalibrate_backward(scene.geometry.weights, agg.recalibrated);
  GateGrad gate = gate_backward(params.gating, fwd.backbone.features, d_gated);
  g.gating.raw_weights = gate.raw;

  const BackboneCache& bb = fwd.backbone;
  g.backbone_w2 = bb.hidden.transpose() * gate.features;
  g.backbone_b2 = gate.features.colwise().sum();
  Matrix d_hidden_pre = gelu_backward(bb.hidden_pre, gate.features * params.backbone_w2.transpose());
  g.backbone_w1 = scene.points.transpose() * d_hidden_pre;
  g.backbone_b1 = d_hidden_pre.colwise().sum();
  return g;
}

DetectionResult detections_from_prediction(const Prediction& prediction, const std::string& scene) {
  DetectionResult det;
  det.scene = scene;
  const Matrix probs = softmax_rows(prediction.class_logits);
  const auto real = probs.cols() - 1;
  for (std::size_t i = 0; i < prediction.boxes.size(); ++i) {
    Eigen::Index best = 0;
    const double score = probs.row(static_cast<Eigen::Index>(i)).head(real).maxCoeff(&best);
    Box3D box = prediction.boxes[i];
    box.class_id = static_cast<int>(best);
    det.boxes.push_back(box);
    det.scores.push_back(score);
  }
  det.sort_by_score();
  return det;
}

}  // namespace geodet
