#include "geodet/superpoint_aggregation.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include "geodet/errors.hpp"

namespace geodet {

namespace {

struct CellKey {
  long long x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    std::size_t h = std::hash<long long>{}(k.x);
    h ^= std::hash<long long>{}(k.y) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<long long>{}(k.z) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

void check_labels(const SuperpointLabels& labels, Eigen::Index rows, const char* what) {
  if (static_cast<Eigen::Index>(labels.ids.size()) != rows) {
    throw ShapeError(std::string(what) + ": " + std::to_string(labels.ids.size()) + " labels for " +
                     std::to_string(rows) + " feature rows");
  }
  if (labels.count < 1) throw ValidationError(std::string(what) + ": no superpoints");
  for (int id : labels.ids) {
    if (id < 0 || id >= labels.count) {
      throw ValidationError(std::string(what) + ": superpoint id " + std::to_string(id) +
                            " outside [0, " + std::to_string(labels.count) + ")");
    }
  }
}

}  // namespace

SuperpointLabels cluster_voxel_grid(const PointCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
    throw ConfigError("voxel size must be positive, got " + std::to_string(voxel_size));
  }
  SuperpointLabels labels;
  labels.ids.reserve(cloud.size());
  std::unordered_map<CellKey, int, CellHash> cells;
  for (Eigen::Index i = 0; i < cloud.positions.rows(); ++i) {
    CellKey key{static_cast<long long>(std::floor(cloud.positions(i, 0) / voxel_size)),
                static_cast<long long>(std::floor(cloud.positions(i, 1) / voxel_size)),
                static_cast<long long>(std::floor(cloud.positions(i, 2) / voxel_size))};
    auto [it, inserted] = cells.try_emplace(key, labels.count);
    if (inserted) ++labels.count;
    labels.ids.push_back(it->second);
  }
  return labels;
}

Points3 superpoint_centroids(const PointCloud& cloud, const SuperpointLabels& labels) {
  return scatter_mean(labels, cloud.positions);
}

Matrix recalibrate(const Vector& weights, const Matrix& gated) {
  if (weights.size() != gated.rows()) {
    throw ShapeError("recalibrate: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(gated.rows()) + " rows");
  }
  return gated.array().colwise() * weights.array();
}

Matrix scatter_mean(const SuperpointLabels& labels, const Matrix& features) {
  check_labels(labels, features.rows(), "scatter_mean");
  Matrix out = Matrix::Zero(labels.count, features.cols());
  Vector counts = Vector::Zero(labels.count);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out.row(labels.ids[i]) += features.row(i);
    counts[labels.ids[i]] += 1.0;
  }
  for (int m = 0; m < labels.count; ++m) {
    if (counts[m] == 0.0) throw ValidationError("scatter_mean: superpoint " + std::to_string(m) + " is empty");
    out.row(m) /= counts[m];
  }
  return out;
}

ScatterMaxResult scatter_max(const SuperpointLabels& labels, const Matrix& features) {
  check_labels(labels, features.rows(), "scatter_max");
  ScatterMaxResult res;
  res.values = Matrix::Zero(labels.count, features.cols());
  res.argmax = IndexMatrix::Constant(labels.count, features.cols(), -1);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const int m = labels.ids[i];
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      if (res.argmax(m, c) < 0 || features(i, c) > res.values(m, c)) {
        res.values(m, c) = features(i, c);
        res.argmax(m, c) = static_cast<int>(i);
      }
    }
  }
  if (features.cols() > 0 && (res.argmax.col(0).array() < 0).any()) {
    throw ValidationError("scatter_max: a superpoint owns no points");
  }
  return res;
}

HybridRepresentation fuse(const Matrix& global_feat, const Matrix& local_feat, const Points3& centroids) {
  if (global_feat.rows() != local_feat.rows() || global_feat.cols() != local_feat.cols()) {
    throw ShapeError("fuse: global features are " + std::to_string(global_feat.rows()) + "x" +
                     std::to_string(global_feat.cols()) + ", local features are " +
                     std::to_string(local_feat.rows()) + "x" + std::to_string(local_feat.cols()));
  }
  if (centroids.rows() != 0 && centroids.rows() != global_feat.rows()) {
    throw ShapeError("fuse: centroid count differs from superpoint count");
  }
  HybridRepresentation hybrid;
  hybrid.features.resize(global_feat.rows(), 2 * global_feat.cols());
  hybrid.features << global_feat, local_feat;
  hybrid.superpoint_centroids = centroids;
  return hybrid;
}

AggregateGrad aggregate_backward(const SuperpointLabels& labels, const IndexMatrix& argmax,
                                 const Matrix& upstream) {
  const Eigen::Index channels = upstream.cols() / 2;
  if (upstream.cols() % 2 != 0 || upstream.rows() != labels.count || argmax.rows() != labels.count ||
      argmax.cols() != channels) {
    throw ShapeError("aggregate_backward: argmax or upstream gradient does not match the forward pass");
  }
  const auto n = static_cast<Eigen::Index>(labels.ids.size());
  std::vector<int> counts(static_cast<std::size_t>(labels.count), 0);
  for (int id : labels.ids) {
    if (id < 0 || id >= labels.count) throw ValidationError("aggregate_backward: label out of range");
    ++counts[static_cast<std::size_t>(id)];
  }
  AggregateGrad grad;
  grad.recalibrated.resize(n, channels);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int m = labels.ids[i];
    grad.recalibrated.row(i) = upstream.row(m).head(channels) / static_cast<double>(counts[m]);
  }
  grad.gated = Matrix::Zero(n, channels);
  for (Eigen::Index m = 0; m < argmax.rows(); ++m) {
    for (Eigen::Index c = 0; c < channels; ++c) {
      const int i = argmax(m, c);
      if (i < 0 || i >= n) throw ShapeError("aggregate_backward: stale argmax index");
      grad.gated(i, c) += upstream(m, channels + c);
    }
  }
  return grad;
}

Matrix recalibrate_backward(const Vector& weights, const Matrix& upstream) {
  return recalibrate(weights, upstream);
}

}  // namespace geodet
