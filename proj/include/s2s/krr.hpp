#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <utility>

#include "s2s/embedding.hpp"

namespace s2s {

/// [front embedding | side embedding | height_mm | weight_kg]
inline constexpr int kFeatureDims = 2 * kEmbeddingDims + 2;
using FeatureVector = Eigen::Matrix<double, kFeatureDims, 1>;

/// Concatenation in the fixed order above, raw (unstandardized) values.
FeatureVector build_features(const EmbeddingVector& front, const EmbeddingVector& side,
                             double height_mm, double weight_kg);

/// k(a, b) = (scale * <a, b> + offset)^degree. The default scale 1/514
/// normalizes the inner product of standardized feature vectors.
struct KernelSpec {
  int degree = 3;
  double scale = 1.0 / kFeatureDims;
  double offset = 1.0;
};

/// Kernel ridge regression in dual form. Features are standardized per
/// coordinate and targets centered at fit; predictions re-add the target
/// mean (no other bias term).
struct KrrModel {
  Eigen::MatrixXd train_features;  // n x d, standardized
  Eigen::VectorXd feature_mean;    // d
  Eigen::VectorXd feature_scale;   // d, 1 for constant coordinates
  Eigen::RowVectorXd target_mean;  // outputs
  Eigen::MatrixXd dual_coef;       // n x outputs, alpha = (K + lambda I)^-1 Yc
  KernelSpec kernel;
  double lambda = 0.1;
};

/// Solves (K + lambda I) alpha = (targets - mean) via an SPD factorization.
/// Requires n >= 2 and lambda > 0; suggests a larger lambda on failure.
KrrModel krr_fit(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                 const KernelSpec& kernel = {}, double lambda = 0.1);

Eigen::VectorXd krr_predict(const KrrModel& model, const Eigen::VectorXd& feature);

/// The published configuration: polynomial kernel, degree 3, lambda 0.1.
std::pair<KernelSpec, double> default_hyperparams();

/// Binary model file, magic S2SKRR1, little-endian float64.
void save_krr(const KrrModel& model, const std::filesystem::path& path);
KrrModel load_krr(const std::filesystem::path& path);

}  // namespace s2s
