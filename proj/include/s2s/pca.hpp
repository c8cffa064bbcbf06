#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "s2s/embedding.hpp"
#include "s2s/silhouette.hpp"

namespace s2s {

/// Linear reconstruction baseline: top right singular vectors of the
/// centered image matrix. Rows of `components` are orthonormal.
struct PcaModel {
  int width = 0;
  int height = 0;
  Eigen::VectorXd mean;        // pixel count
  Eigen::MatrixXd components;  // k x pixel count, k <= min(samples, 256)
};

/// Requires >= 2 images of identical dimensions.
PcaModel pca_fit(const std::vector<Silhouette>& images, int max_components = kEmbeddingDims);

/// Projection onto the components, zero-padded to 256 when fewer exist.
EmbeddingVector pca_encode(const PcaModel& model, const Silhouette& image);

/// Mean + back-projection, clamped to [0, 1].
GrayImage pca_decode(const PcaModel& model, const EmbeddingVector& z);

void save_pca(const PcaModel& model, const std::filesystem::path& path);
PcaModel load_pca(const std::filesystem::path& path);

}  // namespace s2s
