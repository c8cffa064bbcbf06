#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "s2s/mesh.hpp"

namespace s2s {

/// Binary body mask: row-major pixels in {0, 1}, 1 = body, row 0 at the top.
struct Silhouette {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t foreground_count() const;
  bool empty_foreground() const { return foreground_count() == 0; }
};

struct SilhouettePair {
  Silhouette front;
  Silhouette side;
  std::string subject_id;
};

/// Real-valued single-channel image (decoder output), row-major in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  Eigen::ArrayXd pixels;
};

struct ViewSpec {
  double rotation_deg = 0.0;     // about the vertical axis; 0 = front, 90 = side
  double margin_fraction = 0.05; // frame padding around the body, in [0, 0.5)
};

/// Rotates vertices about the vertical line through the centroid. Right-handed
/// about +Y: a point offset (1,0,0) from the axis maps to (0,0,-1) at 90 deg.
Eigen::MatrixX3d rotate_view(const Eigen::MatrixX3d& vertices, double theta_deg);
TriMesh rotate_view(const TriMesh& mesh, double theta_deg);

/// Orthographic binary rasterization. The camera looks along -Z after the
/// view rotation; the body's vertical extent fills (1 - 2*margin) of the
/// image height, horizontally centered, aspect preserved. Top-left fill rule
/// over pixel centers. Deterministic: identical inputs give identical images.
Silhouette rasterize(const TriMesh& mesh, const ViewSpec& view, int width, int height);

/// Fraction of equal pixels. Real-valued predictions binarize at 0.5 first.
double pixel_accuracy(const Silhouette& a, const Silhouette& b);
double pixel_accuracy(const GrayImage& prediction, const Silhouette& target);

/// Binary portable graymap: P5, maxval 255, 0 = background, 255 = body.
/// The loader also accepts plain-text P2 and binarizes grayscale at 128.
Silhouette load_silhouette(const std::filesystem::path& path);
void save_silhouette(const Silhouette& s, const std::filesystem::path& path);

}  // namespace s2s
