#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "geodet/box3d.hpp"
#include "geodet/channel_gating.hpp"
#include "geodet/geometry_weights.hpp"
#include "geodet/pointcloud_io.hpp"
#include "geodet/superpoint_aggregation.hpp"
#include "geodet/types.hpp"

namespace geodet {

struct ModelConfig {
  int hidden = 64;    // backbone and head MLP width
  int channels = 32;  // C
  int layers = 2;     // encoder blocks
  int classes = 1;    // K real classes; logit K is "no object"
  int ffn_mult = 4;

  bool operator==(const ModelConfig&) const = default;
};

void validate_model_config(const ModelConfig& config);

enum class ParamGroup { Backbone, Gating, Projection, Encoder, BoxHead, ClassHead };

std::string_view param_group_name(ParamGroup group);

struct EncoderBlock {
  Matrix wq, wk, wv, wo;  // C x C
  RowVector bq, bk, bv, bo;
  Matrix w1;  // C x ffn_mult*C
  RowVector b1;
  Matrix w2;  // ffn_mult*C x C
  RowVector b2;
};

struct ModelParams {
  ModelConfig config;
  Matrix backbone_w1;  // 6 x hidden
  RowVector backbone_b1;
  Matrix backbone_w2;  // hidden x C
  RowVector backbone_b2;
  GatingParams gating;
  Matrix proj_w;  // 2C x C
  RowVector proj_b;
  std::vector<EncoderBlock> blocks;
  Matrix box_w1;  // C x hidden
  RowVector box_b1;
  Matrix box_w2;  // hidden x 6: center offset (3), log size (3)
  RowVector box_b2;
  Matrix cls_w1;  // C x hidden
  RowVector cls_b1;
  Matrix cls_w2;  // hidden x (K + 1)
  RowVector cls_b2;

  // Visits every tensor in a fixed order as f(name, group, tensor).
  template <typename F>
  void for_each_tensor(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    visit(*this, f);
  }

  ModelParams zeros_like() const;
  std::size_t parameter_count() const;

 private:
  template <typename Self, typename F>
  static void visit(Self& p, F& f) {
    f("backbone.w1", ParamGroup::Backbone, p.backbone_w1);
    f("backbone.b1", ParamGroup::Backbone, p.backbone_b1);
    f("backbone.w2", ParamGroup::Backbone, p.backbone_w2);
    f("backbone.b2", ParamGroup::Backbone, p.backbone_b2);
    f("gating.raw_weights", ParamGroup::Gating, p.gating.raw_weights);
    f("proj.w", ParamGroup::Projection, p.proj_w);
    f("proj.b", ParamGroup::Projection, p.proj_b);
    for (std::size_t l = 0; l < p.blocks.size(); ++l) {
      auto& b = p.blocks[l];
      const std::string pre = "encoder." + std::to_string(l) + ".";
      f(pre + "wq", ParamGroup::Encoder, b.wq);
      f(pre + "bq", ParamGroup::Encoder, b.bq);
      f(pre + "wk", ParamGroup::Encoder, b.wk);
      f(pre + "bk", ParamGroup::Encoder, b.bk);
      f(pre + "wv", ParamGroup::Encoder, b.wv);
      f(pre + "bv", ParamGroup::Encoder, b.bv);
      f(pre + "wo", ParamGroup::Encoder, b.wo);
      f(pre + "bo", ParamGroup::Encoder, b.bo);
      f(pre + "w1", ParamGroup::Encoder, b.w1);
      f(pre + "b1", ParamGroup::Encoder, b.b1);
      f(pre + "w2", ParamGroup::Encoder, b.w2);
      f(pre + "b2", ParamGroup::Encoder, b.b2);
    }
    f("box_head.w1", ParamGroup::BoxHead, p.box_w1);
    f("box_head.b1", ParamGroup::BoxHead, p.box_b1);
    f("box_head.w2", ParamGroup::BoxHead, p.box_w2);
    f("box_head.b2", ParamGroup::BoxHead, p.box_b2);
    f("class_head.w1", ParamGroup::ClassHead, p.cls_w1);
    f("class_head.b1", ParamGroup::ClassHead, p.cls_b1);
    f("class_head.w2", ParamGroup::ClassHead, p.cls_w2);
    f("class_head.b2", ParamGroup::ClassHead, p.cls_b2);
  }
};

// Glorot-uniform weights, gate at 0.1. Both head output layers are scaled
// down and the no-object logit starts at a prior. Deterministic in `seed`.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Everything about a scene that does not depend on trainable parameters.
struct SceneInput {
  Matrix points;  // N x 6: x y z r g b
  GeometryWeights geometry;
  SuperpointLabels labels;
  Points3 centroids;  // M x 3
};

SceneInput prepare_scene(const PointCloud& cloud, double alpha, double voxel_size);
SceneInput prepare_scene(const PointCloud& cloud, const SuperpointLabels& labels, double alpha);

struct BackboneCache {
  Matrix hidden_pre;
  Matrix hidden;
  Matrix features;  // N x C
};

struct BlockCache {
  Matrix input;
  Matrix q, k, v;
  Matrix attention;  // M x M, rows sum to 1
  Matrix context;
  Matrix mid;  // after the attention residual
  Matrix ffn_pre;
  Matrix ffn_hidden;
  Matrix output;
};

struct EncoderCache {
  Matrix input;  // M x 2C
  Matrix projected;
  std::vector<BlockCache> blocks;
  Matrix output;  // M x C
};

struct HeadCache {
  Matrix box_pre, box_hidden, box_raw;  // box_raw: M x 6
  Matrix cls_pre, cls_hidden, logits;   // logits: M x (K + 1)
};

struct Prediction {
  std::vector<Box3D> boxes;
  Matrix class_logits;
};

struct ForwardPass {
  BackboneCache backbone;
  Matrix gated;         // D_f
  Matrix recalibrated;  // G
  Matrix global_feat;   // F_d
  ScatterMaxResult local_feat;  // F_l
  HybridRepresentation hybrid;
  EncoderCache encoder;
  HeadCache heads;
  Prediction prediction;
};

// Shared per-point MLP over (x, y, z, r, g, b): N x C features.
Matrix backbone_forward(const PointCloud& cloud, const ModelParams& params);
BackboneCache backbone_forward_cached(const Matrix& points, const ModelParams& params);

// Input projection 2C -> C then `layers` blocks of single-head softmax
// self-attention and a feed-forward layer, each with a residual connection.
// No positional encoding, so the map is permutation equivariant in the rows.
Matrix encoder_forward(const HybridRepresentation& queries, const ModelParams& params);
EncoderCache encoder_forward_cached(const Matrix& queries, const ModelParams& params);

// center = centroid + offset, size = exp(log size).
Prediction predict(const Matrix& encoded, const Points3& centroids, const ModelParams& params);
HeadCache heads_forward(const Matrix& encoded, const ModelParams& params);
std::vector<Box3D> decode_boxes(const Matrix& box_raw, const Points3& centroids);

ForwardPass forward(const ModelParams& params, const SceneInput& scene);

// Parameter gradients given dL/d(box center, box size) (M x 6) and dL/dlogits.
ModelParams backward(const ModelParams& params, const SceneInput& scene, const ForwardPass& fwd,
                     const Matrix& d_boxes, const Matrix& d_logits);

// One detection per superpoint: the best real class and its softmax
// probability as the score.
DetectionResult detections_from_prediction(const Prediction& prediction, const std::string& scene);

double gelu(double x);
double gelu_derivative(double x);
Matrix softmax_rows(const Matrix& logits);

}  // namespace geodet
