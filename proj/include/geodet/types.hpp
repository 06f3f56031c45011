#pragma once

#include <Eigen/Core>

namespace geodet {

// Dense row-major feature table. Holds per-point (N x C) and per-superpoint
// (M x C) features as well as weight matrices.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using Vector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace geodet
