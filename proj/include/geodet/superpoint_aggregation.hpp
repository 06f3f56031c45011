#pragma once

#include "geodet/pointcloud_io.hpp"
#include "geodet/types.hpp"

namespace geodet {

inline constexpr double kDefaultVoxelSize = 0.25;

// Per-superpoint queries: [scatter_mean(G) | scatter_max(D_f)] (M x 2C) and
// the mean position of each superpoint, used as the box decoding anchor.
struct HybridRepresentation {
  Matrix features;
  Points3 superpoint_centroids;

  int channels() const { return static_cast<int>(features.cols() / 2); }
};

// Points sharing a cell (floor(x/v), floor(y/v), floor(z/v)) share a label.
// Labels are numbered by first occurrence in point order.
SuperpointLabels cluster_voxel_grid(const PointCloud& cloud, double voxel_size = kDefaultVoxelSize);

Points3 superpoint_centroids(const PointCloud& cloud, const SuperpointLabels& labels);

// Row i of `gated` scaled by weights[i].
Matrix recalibrate(const Vector& weights, const Matrix& gated);

Matrix scatter_mean(const SuperpointLabels& labels, const Matrix& features);

struct ScatterMaxResult {
  Matrix values;
  IndexMatrix argmax;  // point index of the winning member, per (superpoint, channel)
};

// Ties resolve to the lowest point index.
ScatterMaxResult scatter_max(const SuperpointLabels& labels, const Matrix& features);

// Channel-wise concatenation, global (mean) features first.
HybridRepresentation fuse(const Matrix& global_feat, const Matrix& local_feat,
                          const Points3& centroids = Points3());

struct AggregateGrad {
  Matrix recalibrated;  // dL/dG, from the scatter-mean half
  Matrix gated;         // dL/dD_f, from the scatter-max half only
};

AggregateGrad aggregate_backward(const SuperpointLabels& labels, const IndexMatrix& argmax,
                                 const Matrix& upstream);

// dL/dD_f contribution of the recalibration step.
Matrix recalibrate_backward(const Vector& weights, const Matrix& upstream);

}  // namespace geodet
