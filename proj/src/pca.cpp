#include "s2s/pca.hpp"

#include <fstream>
#include <stdexcept>

#include "s2s/io_util.hpp"

namespace s2s {

PcaModel pca_fit(const std::vector<Silhouette>& images, int max_components) {
  if (images.size() < 2) throw std::invalid_argument("pca_fit needs at least 2 images");
  if (max_components < 1 || max_components > kEmbeddingDims) {
    throw std::invalid_argument("pca_fit: max_components must be in [1, 256]");
  }
  const int width = images[0].width, height = images[0].height;
  const Eigen::Index pixels = static_cast<Eigen::Index>(width) * height;
  const Eigen::Index n = static_cast<Eigen::Index>(images.size());

  Eigen::MatrixXd data(n, pixels);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Silhouette& img = images[i];
    if (img.width != width || img.height != height) {
      throw std::invalid_argument("pca_fit: images have mismatched dimensions");
    }
    for (Eigen::Index p = 0; p < pixels; ++p) data(i, p) = img.pixels[p] ? 1.0 : 0.0;
  }

  PcaModel model;
  model.width = width;
  model.height = height;
  model.mean = data.colwise().mean();
  data.rowwise() -= model.mean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinV);
  const Eigen::Index k = std::min<Eigen::Index>(max_components, std::min(n, pixels));
  model.components = svd.matrixV().leftCols(k).transpose();
  return model;
}

EmbeddingVector pca_encode(const PcaModel& model, const Silhouette& image) {
  const Eigen::Index pixels = static_cast<Eigen::Index>(model.width) * model.height;
  if (image.width != model.width || image.height != model.height) {
    throw std::invalid_argument("pca_encode: image dimensions do not match the model");
  }
  Eigen::VectorXd x(pixels);
  for (Eigen::Index p = 0; p < pixels; ++p) x[p] = image.pixels[p] ? 1.0 : 0.0;
  EmbeddingVector z = EmbeddingVector::Zero();
  z.head(model.components.rows()) = model.components * (x - model.mean);
  return z;
}

GrayImage pca_decode(const PcaModel& model, const EmbeddingVector& z) {
  GrayImage img;
  img.width = model.width;
  img.height = model.height;
  const Eigen::VectorXd recon =
      model.mean + model.components.transpose() * z.head(model.components.rows());
  img.pixels = recon.array().min(1.0).max(0.0);
  return img;
}

static const char kPcaMagic[9] = "S2SPCA1\0";

void save_pca(const PcaModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_magic(out, kPcaMagic);
  write_u32(out, static_cast<std::uint32_t>(model.width));
  write_u32(out, static_cast<std::uint32_t>(model.height));
  write_u32(out, static_cast<std::uint32_t>(model.components.rows()));
  for (Eigen::Index p = 0; p < model.mean.size(); ++p) write_f64(out, model.mean[p]);
  for (Eigen::Index r = 0; r < model.components.rows(); ++r) {
    for (Eigen::Index c = 0; c < model.components.cols(); ++c) {
      write_f64(out, model.components(r, c));
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

PcaModel load_pca(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  require_magic(in, kPcaMagic, "PCA model");
  PcaModel model;
  model.width = static_cast<int>(read_u32(in));
  model.height = static_cast<int>(read_u32(in));
  const Eigen::Index k = read_u32(in);
  const Eigen::Index pixels = static_cast<Eigen::Index>(model.width) * model.height;
  model.mean.resize(pixels);
  for (Eigen::Index p = 0; p < pixels; ++p) model.mean[p] = read_f64(in);
  model.components.resize(k, pixels);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < pixels; ++c) model.components(r, c) = read_f64(in);
  }
  return model;
}

}  // namespace s2s
