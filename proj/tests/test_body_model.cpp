#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "s2s/body_model.hpp"
#include "s2s/mesh_metrics.hpp"
#include "s2s/rng.hpp"

using namespace s2s;

TEST_CASE("zero shape is the template, bit for bit") {
  const BodyModel model = make_procedural_model();
  const TriMesh out = deform(model, ShapeParams::Zero());
  CHECK(out.vertices == model.template_mesh.vertices);
  CHECK(out.faces == model.template_mesh.faces);
}

TEST_CASE("unit coefficient adds exactly one basis column") {
  const BodyModel model = make_procedural_model();
  for (int k : {0, 4, 9}) {
    ShapeParams beta = ShapeParams::Zero();
    beta[k] = 1.0;
    const TriMesh out = deform(model, beta);
    for (Eigen::Index v = 0; v < model.template_mesh.vertex_count(); ++v) {
      for (int axis = 0; axis < 3; ++axis) {
        const double expected =
            model.template_mesh.vertices(v, axis) + model.shape_dirs(3 * v + axis, k);
        CHECK(out.vertices(v, axis) == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("a blend is the vertex-wise midpoint of the blended shapes") {
  const BodyModel model = make_procedural_model();
  ShapeParams e1 = ShapeParams::Zero(), e2 = ShapeParams::Zero(), mix;
  e1[1] = 1.0;
  e2[2] = 1.0;
  mix = 0.5 * e1 + 0.5 * e2;
  const Eigen::MatrixX3d lhs = deform(model, mix).vertices;
  const Eigen::MatrixX3d rhs =
      0.5 * (deform(model, e1).vertices + deform(model, e2).vertices);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("deformation is affine in the coefficients") {
  const BodyModel model = make_procedural_model();
  const Eigen::MatrixX3d base = model.template_mesh.vertices;
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = 3.0 * (rng.uniform() - 0.5), b = 3.0 * (rng.uniform() - 0.5);
    ShapeParams b1, b2;
    for (int k = 0; k < kShapeDims; ++k) {
      b1[k] = rng.normal();
      b2[k] = rng.normal();
    }
    const Eigen::MatrixX3d lhs = deform(model, a * b1 + b * b2).vertices - base;
    const Eigen::MatrixX3d rhs = a * (deform(model, b1).vertices - base) +
                                 b * (deform(model, b2).vertices - base);
    const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() / scale < 1e-9);
  }
}

TEST_CASE("deform never touches the face list") {
  const BodyModel model = make_procedural_model();
  ShapeParams beta;
  beta.setConstant(0.7);
  CHECK(deform(model, beta).faces == model.template_mesh.faces);
}

TEST_CASE("non-finite coefficients are rejected") {
  const BodyModel model = make_procedural_model();
  ShapeParams beta = ShapeParams::Zero();
  beta[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(deform(model, beta), std::invalid_argument);
}

TEST_CASE("shape_dirs / template size mismatch is a sizing error") {
  BodyModel model = make_procedural_model();
  model.shape_dirs.conservativeResize(model.shape_dirs.rows() - 3, kShapeDims);
  CHECK_THROWS_WITH_AS(deform(model, ShapeParams::Zero()), doctest::Contains("mismatch"),
                       std::invalid_argument);
}

TEST_CASE("procedural template is watertight with a plausible human volume") {
  const BodyModel model = make_procedural_model();
  CHECK(is_watertight(model.template_mesh));
  const double v = volume(model.template_mesh);  // signed-volume oracle
  CHECK(v > 0.04);
  CHECK(v < 0.12);
}

TEST_CASE("doubling the tessellation keeps the volume within 2%") {
  ProceduralBodyConfig coarse;
  ProceduralBodyConfig fine;
  fine.radial_segments *= 2;
  fine.rings *= 2;
  const double v_coarse = volume(make_procedural_model(coarse).template_mesh);
  const double v_fine = volume(make_procedural_model(fine).template_mesh);
  CHECK(std::abs(v_fine - v_coarse) / v_coarse < 0.02);
}

TEST_CASE("basis columns are linearly independent (cosine < 0.99)") {
  const BodyModel model = make_procedural_model();
  for (int a = 0; a < kShapeDims; ++a) {
    for (int b = a + 1; b < kShapeDims; ++b) {
      const double cosine = model.shape_dirs.col(a).dot(model.shape_dirs.col(b)) /
                            (model.shape_dirs.col(a).norm() * model.shape_dirs.col(b).norm());
      CHECK(std::abs(cosine) < 0.99);
    }
  }
}

TEST_CASE("too-coarse tessellation is a construction error") {
  ProceduralBodyConfig cfg;
  cfg.radial_segments = 2;
  CHECK_THROWS_WITH_AS(make_procedural_model(cfg), doctest::Contains("too coarse"),
                       std::invalid_argument);
  cfg.radial_segments = 48;
  cfg.rings = 1;
  CHECK_THROWS_AS(make_procedural_model(cfg), std::invalid_argument);
}

TEST_CASE("shape sampling is reproducible bit for bit") {
  const auto a = sample_shapes(5, 1.0, 7);
  const auto b = sample_shapes(5, 1.0, 7);
  REQUIRE(a.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(a[i] == b[i]);
  const auto c = sample_shapes(5, 1.0, 8);
  CHECK(a[0] != c[0]);
}

TEST_CASE("shape sampling matches its nominal moments") {
  const auto shapes = sample_shapes(10000, 1.0, 123);
  for (int k = 0; k < kShapeDims; ++k) {
    double mean = 0.0, sq = 0.0;
    for (const auto& s : shapes) {
      mean += s[k];
      sq += s[k] * s[k];
    }
    mean /= shapes.size();
    const double stddev = std::sqrt(sq / shapes.size() - mean * mean);
    CHECK(std::abs(mean) < 0.05);
    CHECK(stddev > 0.95);
    CHECK(stddev < 1.05);
  }
}

TEST_CASE("invalid sampling parameters are rejected") {
  CHECK_THROWS_AS(sample_shapes(0, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_shapes(1, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_shapes(1, -2.0, 1), std::invalid_argument);
}

TEST_CASE("model bundle round trip") {
  const BodyModel model = make_procedural_model();
  const auto dir = std::filesystem::temp_directory_path() / "s2s_model_bundle_test";
  std::filesystem::remove_all(dir);
  save_model(model, dir);
  const BodyModel loaded = load_model(dir);
  CHECK(loaded.template_mesh.faces == model.template_mesh.faces);
  CHECK((loaded.template_mesh.vertices - model.template_mesh.vertices).cwiseAbs().maxCoeff() <
        1e-6);
  CHECK((loaded.shape_dirs - model.shape_dirs).cwiseAbs().maxCoeff() < 1e-6);  // float32 file
}

TEST_CASE("a corrupt basis file is rejected by magic") {
  const auto dir = std::filesystem::temp_directory_path() / "s2s_bad_bundle_test";
  std::filesystem::create_directories(dir);
  save_mesh(make_procedural_model().template_mesh, dir / "template.obj");
  std::ofstream(dir / "shape_dirs.bin", std::ios::binary) << "NOTMAGIC garbage";
  CHECK_THROWS_WITH_AS(load_model(dir), doctest::Contains("magic"), std::runtime_error);
}
