#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <queue>

#include "fixtures.hpp"
#include "s2s/rng.hpp"
#include "s2s/silhouette.hpp"

using namespace s2s;
using testing::make_cube;
using testing::make_icosphere;

namespace {

TriMesh make_box(double sx, double sy, double sz) {
  TriMesh box = make_cube();
  box.vertices.col(0) *= sx;
  box.vertices.col(1) *= sy;
  box.vertices.col(2) *= sz;
  return box;
}

}  // namespace

TEST_CASE("zero rotation is the identity") {
  const TriMesh sphere = make_icosphere(0.3, 1, {0.2, 0.7, -0.1});
  CHECK(rotate_view(sphere.vertices, 0.0) == sphere.vertices);
}

TEST_CASE("four quarter turns return the vertices") {
  Eigen::MatrixX3d points = make_icosphere(0.4, 2, {0.3, 1.0, 0.2}).vertices;
  Eigen::MatrixX3d rotated = points;
  for (int i = 0; i < 4; ++i) rotated = rotate_view(rotated, 90.0);
  CHECK((rotated - points).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("a quarter turn maps +x offsets to -z offsets") {
  Eigen::MatrixX3d points(2, 3);
  points << 1, 0, 0, -1, 0, 0;  // centroid on the axis
  const Eigen::MatrixX3d rotated = rotate_view(points, 90.0);
  CHECK(rotated(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rotated(0, 2) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(rotated(1, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rotation matches the rotation-matrix oracle") {
  Rng rng(5);
  Eigen::MatrixX3d points(40, 3);
  for (Eigen::Index i = 0; i < points.size(); ++i) points.data()[i] = rng.normal();
  const double theta = 123.4;
  const Eigen::MatrixX3d ours = rotate_view(points, theta);
  const Eigen::RowVector3d centroid = points.colwise().mean();
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(-theta * M_PI / 180.0, Eigen::Vector3d::UnitY()).toRotationMatrix();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    Eigen::RowVector3d about = points.row(i) - centroid;
    about.y() = 0.0;
    Eigen::RowVector3d expected = about * rot.transpose();
    expected.y() = points(i, 1);
    expected.x() += centroid.x();
    expected.z() += centroid.z();
    CHECK((ours.row(i) - expected).norm() < 1e-12);
  }
}

TEST_CASE("rotations compose additively modulo 360") {
  const Eigen::MatrixX3d points = make_icosphere(0.5, 2).vertices;
  const Eigen::MatrixX3d ab = rotate_view(rotate_view(points, 140.0), 250.0);
  const Eigen::MatrixX3d sum = rotate_view(points, 30.0);  // 390 mod 360
  CHECK((ab - sum).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("an axis-aligned box rasterizes to a pixel-exact rectangle") {
  const TriMesh box = make_box(0.4, 1.0, 0.2);
  const ViewSpec view{0.0, 0.05};
  const int width = 96, height = 64;
  const Silhouette img = rasterize(box, view, width, height);

  // expected rectangle from the documented framing: the vertical extent fills
  // (1 - 2 margin) of the height, x centered, top-left fill rule
  const double scale = (1.0 - 2.0 * view.margin_fraction) * height / 1.0;
  const double x_lo = 0.5 * width + (0.0 - 0.2) * scale;
  const double x_hi = 0.5 * width + (0.4 - 0.2) * scale;
  const double y_lo = view.margin_fraction * height;
  const double y_hi = y_lo + 1.0 * scale;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      const bool expected = cx >= x_lo && cx < x_hi && cy >= y_lo && cy < y_hi;
      CHECK(img.at(x, y) == (expected ? 1 : 0));
    }
  }
}

TEST_CASE("a sphere projects to a disk of the right area") {
  const TriMesh sphere = make_icosphere(0.5, 3);
  const int res = 256;
  const ViewSpec view{0.0, 0.05};
  const Silhouette img = rasterize(sphere, view, res, res);
  const double r_px = (1.0 - 2.0 * view.margin_fraction) * res / 2.0;
  const double ratio = static_cast<double>(img.foreground_count()) / (M_PI * r_px * r_px);
  CHECK(ratio > 0.98);
  CHECK(ratio < 1.02);
}

TEST_CASE("rasterizing a rotated view equals rotating then rasterizing") {
  const TriMesh body = make_box(0.3, 1.6, 0.2);
  const Silhouette direct = rasterize(body, ViewSpec{90.0, 0.05}, 64, 64);
  const Silhouette two_step = rasterize(rotate_view(body, 90.0), ViewSpec{0.0, 0.05}, 64, 64);
  CHECK(direct.pixels == two_step.pixels);
}

TEST_CASE("rasterization is deterministic") {
  const TriMesh sphere = make_icosphere(0.4, 2);
  const Silhouette a = rasterize(sphere, {}, 64, 64);
  const Silhouette b = rasterize(sphere, {}, 64, 64);
  CHECK(a.pixels == b.pixels);
}

TEST_CASE("foreground area is invariant under horizontal translation") {
  const TriMesh sphere = make_icosphere(0.4, 3);
  const Silhouette base = rasterize(sphere, ViewSpec{30.0, 0.05}, 128, 128);
  const Silhouette moved =
      rasterize(translated(sphere, {1.7, 0.0, -2.3}), ViewSpec{30.0, 0.05}, 128, 128);
  const double a = static_cast<double>(base.foreground_count());
  const double b = static_cast<double>(moved.foreground_count());
  CHECK(std::abs(a - b) / a <= 0.005);
}

TEST_CASE("a convex solid gives a connected foreground") {
  const Silhouette img = rasterize(make_icosphere(0.5, 3), {}, 128, 128);
  // flood fill from the first foreground pixel
  std::vector<char> seen(img.pixels.size(), 0);
  std::size_t first = 0;
  while (first < img.pixels.size() && !img.pixels[first]) ++first;
  REQUIRE(first < img.pixels.size());
  std::queue<std::size_t> frontier;
  frontier.push(first);
  seen[first] = 1;
  std::size_t reached = 0;
  while (!frontier.empty()) {
    const auto p = frontier.front();
    frontier.pop();
    ++reached;
    const int x = static_cast<int>(p % img.width), y = static_cast<int>(p / img.width);
    const int dx[] = {1, -1, 0, 0}, dy[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int nx = x + dx[k], ny = y + dy[k];
      if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height) continue;
      const std::size_t q = static_cast<std::size_t>(ny) * img.width + nx;
      if (!seen[q] && img.pixels[q]) {
        seen[q] = 1;
        frontier.push(q);
      }
    }
  }
  CHECK(reached == img.foreground_count());
}

TEST_CASE("degenerate inputs are rejected") {
  TriMesh flat;
  flat.vertices.resize(3, 3);
  flat.vertices << 0, 0, 0, 1, 0, 0, 0, 0, 1;  // zero vertical extent
  flat.faces.resize(1, 3);
  flat.faces << 0, 1, 2;
  CHECK_THROWS_AS(rasterize(flat, {}, 64, 64), std::invalid_argument);
  CHECK_THROWS_AS(rasterize(make_cube(), {}, 8, 64), std::invalid_argument);
  CHECK_THROWS_AS(rasterize(TriMesh{}, {}, 64, 64), std::invalid_argument);
}

TEST_CASE("pixel accuracy identities") {
  const Silhouette img = rasterize(make_icosphere(0.5, 2), {}, 64, 64);
  CHECK(pixel_accuracy(img, img) == 1.0);
  Silhouette inverse = img;
  for (auto& p : inverse.pixels) p = p ? 0 : 1;
  CHECK(pixel_accuracy(img, inverse) == 0.0);
}

TEST_CASE("pixel accuracy counts exact disagreements") {
  Silhouette a, b;
  a.width = a.height = b.width = b.height = 64;
  a.pixels.assign(4096, 0);
  b.pixels.assign(4096, 0);
  for (int i = 0; i < 41; ++i) b.pixels[i * 7] = 1;
  CHECK(pixel_accuracy(a, b) == 1.0 - 41.0 / 4096.0);
}

TEST_CASE("pixel accuracy rejects mismatched dimensions") {
  Silhouette a, b;
  a.width = a.height = 64;
  a.pixels.assign(4096, 0);
  b.width = b.height = 32;
  b.pixels.assign(1024, 0);
  CHECK_THROWS_AS(pixel_accuracy(a, b), std::invalid_argument);
}

TEST_CASE("real-valued predictions binarize at one half") {
  Silhouette target;
  target.width = 16, target.height = 16;
  target.pixels.assign(256, 0);
  target.pixels[0] = 1;
  GrayImage pred;
  pred.width = pred.height = 16;
  pred.pixels = Eigen::ArrayXd::Constant(256, 0.49);
  pred.pixels[0] = 0.51;
  CHECK(pixel_accuracy(pred, target) == 1.0);
}

TEST_CASE("PGM round trip is lossless") {
  const Silhouette img = rasterize(make_icosphere(0.5, 2), {}, 64, 64);
  const auto path = std::filesystem::temp_directory_path() / "s2s_sil_test.pgm";
  save_silhouette(img, path);
  const Silhouette loaded = load_silhouette(path);
  CHECK(loaded.width == img.width);
  CHECK(loaded.height == img.height);
  CHECK(loaded.pixels == img.pixels);
}

TEST_CASE("plain-text P2 input binarizes at 128") {
  const auto path = std::filesystem::temp_directory_path() / "s2s_sil_p2.pgm";
  std::ofstream(path) << "P2\n# comment\n2 2\n255\n0 127 128 255\n";
  const Silhouette s = load_silhouette(path);
  CHECK(s.pixels == std::vector<std::uint8_t>({0, 0, 1, 1}));
}

TEST_CASE("malformed headers are rejected") {
  const auto path = std::filesystem::temp_directory_path() / "s2s_sil_bad.pgm";
  std::ofstream(path) << "P7\n2 2\n255\n";
  CHECK_THROWS_WITH_AS(load_silhouette(path), doctest::Contains("P5 or P2"), std::runtime_error);
  std::ofstream(path, std::ios::trunc) << "P5\n2 two\n255\n";
  CHECK_THROWS_AS(load_silhouette(path), std::runtime_error);
}

TEST_CASE("truncated pixel data is rejected") {
  const auto path = std::filesystem::temp_directory_path() / "s2s_sil_short.pgm";
  std::ofstream(path, std::ios::binary) << "P5\n4 4\n255\nab";
  CHECK_THROWS_WITH_AS(load_silhouette(path), doctest::Contains("truncated"), std::runtime_error);
}

TEST_CASE("an all-background image loads but is flagged empty") {
  Silhouette blank;
  blank.width = blank.height = 32;
  blank.pixels.assign(1024, 0);
  const auto path = std::filesystem::temp_directory_path() / "s2s_sil_blank.pgm";
  save_silhouette(blank, path);
  const Silhouette loaded = load_silhouette(path);
  CHECK(loaded.empty_foreground());
  const Silhouette body = rasterize(make_cube(), {}, 64, 64);
  CHECK_FALSE(body.empty_foreground());
}
