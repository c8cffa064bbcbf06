#include "s2s/krr.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "s2s/io_util.hpp"

namespace s2s {

FeatureVector build_features(const EmbeddingVector& front, const EmbeddingVector& side,
                             double height_mm, double weight_kg) {
  if (!(height_mm > 0.0) || !(weight_kg > 0.0)) {
    throw std::invalid_argument("build_features: height and weight must be positive");
  }
  if (!front.allFinite() || !side.allFinite()) {
    throw std::invalid_argument("build_features: non-finite embedding");
  }
  FeatureVector f;
  f.head<kEmbeddingDims>() = front;
  f.segment<kEmbeddingDims>(kEmbeddingDims) = side;
  f[2 * kEmbeddingDims] = height_mm;
  f[2 * kEmbeddingDims + 1] = weight_kg;
  return f;
}

namespace {

void validate_kernel(const KernelSpec& kernel) {
  if (kernel.degree < 1) throw std::invalid_argument("kernel degree must be >= 1");
  if (!(kernel.scale > 0.0)) throw std::invalid_argument("kernel scale must be > 0");
}

Eigen::MatrixXd apply_kernel(const KernelSpec& kernel, Eigen::MatrixXd inner) {
  inner = (kernel.scale * inner).array() + kernel.offset;
  Eigen::MatrixXd out = inner;
  for (int d = 1; d < kernel.degree; ++d) out = out.cwiseProduct(inner);
  return out;
}

}  // namespace

KrrModel krr_fit(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                 const KernelSpec& kernel, double lambda) {
  validate_kernel(kernel);
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  const Eigen::Index n = features.rows();
  if (n < 2) throw std::invalid_argument("krr_fit needs at least 2 training rows");
  if (targets.rows() != n) throw std::invalid_argument("features/targets row mismatch");
  if (!features.allFinite() || !targets.allFinite()) {
    throw std::invalid_argument("krr_fit: non-finite inputs");
  }

  KrrModel model;
  model.kernel = kernel;
  model.lambda = lambda;
  model.feature_mean = features.colwise().mean();
  Eigen::MatrixXd centered = features.rowwise() - model.feature_mean.transpose();
  model.feature_scale =
      (centered.array().square().colwise().mean()).sqrt().transpose();
  for (Eigen::Index j = 0; j < model.feature_scale.size(); ++j) {
    if (model.feature_scale[j] < 1e-10) model.feature_scale[j] = 1.0;  // constant coordinate
  }
  model.train_features = centered.array().rowwise() /
                         model.feature_scale.transpose().array();

  model.target_mean = targets.colwise().mean();
  const Eigen::MatrixXd centered_targets = targets.rowwise() - model.target_mean;

  Eigen::MatrixXd gram =
      apply_kernel(kernel, model.train_features * model.train_features.transpose());
  gram.diagonal().array() += lambda;

  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("kernel Gram factorization failed; try a larger lambda");
  }
  model.dual_coef = llt.solve(centered_targets);
  return model;
}

Eigen::VectorXd krr_predict(const KrrModel& model, const Eigen::VectorXd& feature) {
  if (feature.size() != model.train_features.cols()) {
    throw std::invalid_argument("krr_predict: feature length " + std::to_string(feature.size()) +
                                " does not match training dimension " +
                                std::to_string(model.train_features.cols()));
  }
  const Eigen::VectorXd standardized =
      (feature - model.feature_mean).cwiseQuotient(model.feature_scale);
  const Eigen::VectorXd k =
      apply_kernel(model.kernel, model.train_features * standardized);
  return model.dual_coef.transpose() * k + model.target_mean.transpose();
}

std::pair<KernelSpec, double> default_hyperparams() {
  return {KernelSpec{}, 0.1};
}

static const char kKrrMagic[9] = "S2SKRR1\0";

void save_krr(const KrrModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_magic(out, kKrrMagic);
  write_u32(out, static_cast<std::uint32_t>(model.train_features.rows()));
  write_u32(out, static_cast<std::uint32_t>(model.train_features.cols()));
  write_u32(out, static_cast<std::uint32_t>(model.dual_coef.cols()));
  write_u32(out, static_cast<std::uint32_t>(model.kernel.degree));
  write_f64(out, model.kernel.scale);
  write_f64(out, model.kernel.offset);
  write_f64(out, model.lambda);
  auto write_matrix = [&out](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(out, m(r, c));
    }
  };
  write_matrix(model.feature_mean);
  write_matrix(model.feature_scale);
  write_matrix(model.target_mean);
  write_matrix(model.train_features);
  write_matrix(model.dual_coef);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

KrrModel load_krr(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  require_magic(in, kKrrMagic, "KRR model");
  KrrModel model;
  const Eigen::Index n = read_u32(in);
  const Eigen::Index d = read_u32(in);
  const Eigen::Index outputs = read_u32(in);
  model.kernel.degree = static_cast<int>(read_u32(in));
  model.kernel.scale = read_f64(in);
  model.kernel.offset = read_f64(in);
  model.lambda = read_f64(in);
  model.feature_mean.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) model.feature_mean[i] = read_f64(in);
  model.feature_scale.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) model.feature_scale[i] = read_f64(in);
  model.target_mean.resize(outputs);
  for (Eigen::Index i = 0; i < outputs; ++i) model.target_mean[i] = read_f64(in);
  model.train_features.resize(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) model.train_features(r, c) = read_f64(in);
  }
  model.dual_coef.resize(n, outputs);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < outputs; ++c) model.dual_coef(r, c) = read_f64(in);
  }
  return model;
}

}  // namespace s2s
