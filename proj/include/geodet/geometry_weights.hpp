#pragma once

#include "geodet/pointcloud_io.hpp"
#include "geodet/types.hpp"

namespace geodet {

inline constexpr double kDefaultAlpha = 2.0;

// Per-point spatial weights and the intermediates that produced them.
struct GeometryWeights {
  Vec3 centroid = Vec3::Zero();
  Vector distances;   // meters, >= 0
  Vector normalized;  // min-max scaled distances in [0, 1]
  Vector weights;     // exp(-alpha * normalized), in [exp(-alpha), 1]
  double alpha = kDefaultAlpha;
};

// Arithmetic mean of the positions, accumulated in point order.
Vec3 compute_centroid(const PointCloud& cloud);

// Euclidean distance of each point to `centroid`, computed in double.
Vector compute_distances(const PointCloud& cloud, const Vec3& centroid);

// (v - min) / (max - min). When every value is equal the result is all zeros,
// which makes the downstream weights uniformly 1.
Vector minmax_normalize(const Vector& values);

// exp(-alpha * normalized). Throws ConfigError unless alpha > 0.
Vector geometry_weights(const Vector& normalized, double alpha = kDefaultAlpha);

// Centroid -> distances -> normalization -> decay, in one call.
GeometryWeights compute_geometry_weights(const PointCloud& cloud, double alpha = kDefaultAlpha);

}  // namespace geodet
