#include "geodet/geometry_weights.hpp"

#include <cmath>
#include <string>

#include "geodet/errors.hpp"

namespace geodet {

Vec3 compute_centroid(const PointCloud& cloud) {
  const auto n = cloud.positions.rows();
  if (n == 0) throw ValidationError("centroid of an empty point cloud");
  Vec3 sum = Vec3::Zero();
  for (Eigen::Index i = 0; i < n; ++i) sum += cloud.positions.row(i).transpose();
  return sum / static_cast<double>(n);
}

Vector compute_distances(const PointCloud& cloud, const Vec3& centroid) {
  const auto n = cloud.positions.rows();
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dx = cloud.positions(i, 0) - centroid[0];
    const double dy = cloud.positions(i, 1) - centroid[1];
    const double dz = cloud.positions(i, 2) - centroid[2];
    d[i] = std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return d;
}

Vector minmax_normalize(const Vector& values) {
  if (values.size() == 0) throw ValidationError("min-max normalization of an empty sequence");
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  if (!(hi > lo)) return Vector::Zero(values.size());
  return (values.array() - lo) / (hi - lo);
}

Vector geometry_weights(const Vector& normalized, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("alpha must be a positive finite number, got " + std::to_string(alpha));
  }
  return (-alpha * normalized.array()).exp();
}

GeometryWeights compute_geometry_weights(const PointCloud& cloud, double alpha) {
  GeometryWeights gw;
  gw.alpha = alpha;
  gw.centroid = compute_centroid(cloud);
  gw.distances = compute_distances(cloud, gw.centroid);
  gw.normalized = minmax_normalize(gw.distances);
  gw.weights = geometry_weights(gw.normalized, alpha);
  return gw;
}

}  // namespace geodet
