#include <doctest.h>

#include <numeric>

#include "support/gradcheck.hpp"
#include "geodet/errors.hpp"
#include "geodet/model.hpp"

using namespace geodet;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.hidden = 6;
  c.channels = 4;
  c.layers = 2;
  c.classes = 2;
  return c;
}

}  // namespace

TEST_CASE("parameter shapes follow the configuration") {
  const ModelConfig c = small_config();
  const ModelParams p = init_params(c, 1);
  CHECK(p.backbone_w1.rows() == 6);
  CHECK(p.backbone_w1.cols() == 6);
  CHECK(p.backbone_w2.cols() == 4);
  CHECK(p.proj_w.rows() == 8);
  CHECK(p.blocks.size() == 2);
  CHECK(p.blocks[0].w1.cols() == 16);
  CHECK(p.box_w2.cols() == 6);
  CHECK(p.cls_w2.cols() == 3);
  CHECK(p.gating.raw_weights.isConstant(0.1));
  CHECK(p.parameter_count() > 0);
}

TEST_CASE("initialization is deterministic in the seed") {
  const ModelParams a = init_params(small_config(), 5), b = init_params(small_config(), 5),
                    c = init_params(small_config(), 6);
  CHECK(a.proj_w == b.proj_w);
  CHECK(a.proj_w != c.proj_w);
}

TEST_CASE("invalid configuration is rejected") {
  ModelConfig c = small_config();
  c.channels = 0;
  CHECK_THROWS_AS(init_params(c, 1), ConfigError);
}

TEST_CASE("zero backbone weights give bias-only features") {
  ModelParams p = init_params(small_config(), 2);
  p.backbone_w1.setZero();
  p.backbone_w2.setZero();
  p.backbone_b2.setConstant(0.25);
  SplitMix64 rng(1);
  const auto s = gradcheck::random_scene(rng, 10, 1, 2);
  const Matrix f = backbone_forward(s.cloud, p);
  CHECK((f.array() == 0.25).all());
}

TEST_CASE("identical points get identical features") {
  const ModelParams p = init_params(small_config(), 2);
  SplitMix64 rng(1);
  auto s = gradcheck::random_scene(rng, 4, 1, 2);
  s.cloud.positions.row(3) = s.cloud.positions.row(1);
  s.cloud.colors.row(3) = s.cloud.colors.row(1);
  const Matrix f = backbone_forward(s.cloud, p);
  CHECK(f.row(3) == f.row(1));
}

TEST_CASE("single query attention is the identity mixture") {
  const ModelParams p = init_params(small_config(), 3);
  const EncoderCache e = encoder_forward_cached(Matrix::Random(1, 8), p);
  for (const auto& b : e.blocks) CHECK(b.attention(0, 0) == 1.0);
}

TEST_CASE("attention rows sum to one") {
  const ModelParams p = init_params(small_config(), 3);
  const EncoderCache e = encoder_forward_cached(Matrix::Random(7, 8) * 3.0, p);
  for (const auto& b : e.blocks) {
    for (Eigen::Index i = 0; i < 7; ++i) CHECK(std::abs(b.attention.row(i).sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("encoder is permutation equivariant") {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    ModelParams p = init_params(small_config(), trial);
    gradcheck::jitter(p, rng, 0.3);
    const int m = static_cast<int>(rng.uniform_int(2, 9));
    Matrix q(m, 8);
    for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = rng.normal();
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = m - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
    Matrix qp(m, 8);
    for (int i = 0; i < m; ++i) qp.row(i) = q.row(perm[i]);
    const Matrix a = encoder_forward_cached(q, p).output, b = encoder_forward_cached(qp, p).output;
    for (int i = 0; i < m; ++i) CHECK((b.row(i) - a.row(perm[i])).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("encoder rejects the wrong width") {
  const ModelParams p = init_params(small_config(), 3);
  CHECK_THROWS_AS(encoder_forward_cached(Matrix::Zero(3, 5), p), ShapeError);
}

TEST_CASE("zero head output decodes to unit boxes at the centroids") {
  Points3 c(2, 3);
  c << 1, 2, 3, -1, 0, 0.5;
  const auto boxes = decode_boxes(Matrix::Zero(2, 6), c);
  CHECK(boxes[0].center == Vec3(1, 2, 3));
  CHECK(boxes[1].size == Vec3::Ones());
}

TEST_CASE("decoded sizes stay positive") {
  Matrix raw = Matrix::Constant(1, 6, -30.0);
  const auto boxes = decode_boxes(raw, Points3::Zero(1, 3));
  CHECK((boxes[0].size.array() > 0.0).all());
}

TEST_CASE("detections use the best real class") {
  Prediction pr;
  pr.boxes.resize(2);
  pr.class_logits.resize(2, 3);
  pr.class_logits << 0, 2, 5, 3, 1, 0;
  const DetectionResult d = detections_from_prediction(pr, "s");
  CHECK(d.scene == "s");
  // Sorted by score: the second row ranks first.
  CHECK(d.boxes[0].class_id == 0);
  CHECK(d.scores[0] == doctest::Approx(std::exp(3.0) / (std::exp(3.0) + std::exp(1.0) + 1.0)));
  CHECK(d.boxes[1].class_id == 1);
  CHECK(d.scores[1] == doctest::Approx(std::exp(2.0) / (1.0 + std::exp(2.0) + std::exp(5.0))));
}

TEST_CASE("gelu matches reference values") {
  CHECK(gelu(0.0) == 0.0);
  CHECK(gelu(1.0) == doctest::Approx(0.8411919906082768).epsilon(1e-14));
  CHECK(gelu(-1.0) == doctest::Approx(-0.15880800939172324).epsilon(1e-14));
  for (double x : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
    const double fd = (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6;
    CHECK(gelu_derivative(x) == doctest::Approx(fd).epsilon(1e-8));
  }
}

TEST_CASE("full loss gradient against central differences") {
  SplitMix64 rng(41);
  gradcheck::Stats stats;
  for (int trial = 0; trial < 4; ++trial) {
    ModelParams p = init_params(small_config(), 100 + trial);
    gradcheck::jitter(p, rng, 0.2);
    const auto s = gradcheck::random_scene(rng, 24, 2, 2);
    const SceneInput in = prepare_scene(s.cloud, 2.0, 0.7);
    gradcheck::check_scene(p, in, s.gt, 0.5, 1e-4, 1e-4, 1e-7, stats);
  }
  for (const auto& f : stats.failures) MESSAGE(f);
  CHECK(stats.failed == 0);
  CHECK(stats.checked > 10 * stats.skipped);
  for (const char* g : {"backbone", "gating", "projection", "encoder", "box_head", "class_head"}) {
    CHECK(stats.checked_per_group[g] > 0);
  }
}
