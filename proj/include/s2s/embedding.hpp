#pragma once

#include <Eigen/Dense>

namespace s2s {

inline constexpr int kEmbeddingDims = 256;

/// 256-d latent representation of one silhouette view.
using EmbeddingVector = Eigen::Matrix<double, kEmbeddingDims, 1>;

}  // namespace s2s
