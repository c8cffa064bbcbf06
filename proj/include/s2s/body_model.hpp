#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "s2s/mesh.hpp"

namespace s2s {

inline constexpr int kShapeDims = 10;

/// The 10 shape-basis coefficients.
using ShapeParams = Eigen::Matrix<double, kShapeDims, 1>;

/// Linear shape-basis body model: vertices(beta) = template + shape_dirs * beta.
/// The template is posed once and for all; there is no skeleton or skinning.
/// shape_dirs row 3*v + axis holds the displacement of vertex v along axis
/// (x=0, y=1, z=2) per unit coefficient.
struct BodyModel {
  TriMesh template_mesh;
  Eigen::Matrix<double, Eigen::Dynamic, kShapeDims> shape_dirs;
};

/// Checks the model invariants: shape_dirs rows = 3 * vertex count, template
/// watertight. Throws on violation.
void validate_model(const BodyModel& model);

/// Applies the shape displacement. Faces are shared with the template
/// unchanged. Throws std::invalid_argument on non-finite beta or a
/// shape_dirs / template size mismatch.
TriMesh deform(const BodyModel& model, const ShapeParams& beta);

/// What each basis column modulates, in column order.
std::array<const char*, kShapeDims> shape_basis_names();

struct ProceduralBodyConfig {
  double height = 1.70;      // meters, feet to crown
  double girth_scale = 1.0;  // multiplies every cross-section radius
  int radial_segments = 48;  // vertices per horizontal ring
  int rings = 120;           // horizontal slabs between feet and crown
};

/// Builds a watertight, human-proportioned body as a stack of smoothly
/// interpolated elliptical cross-sections, with 10 linearly independent
/// basis columns: overall height, overall girth, bust girth, waist girth,
/// hip girth, shoulder width, limb thickness, limb length, torso length,
/// head size. Substitutes for externally licensed body-model assets.
BodyModel make_procedural_model(const ProceduralBodyConfig& config = {});

/// i.i.d. zero-mean Gaussian coefficients, reproducible bit-for-bit for a
/// fixed (count, stddev, seed). Requires count >= 1, stddev > 0.
std::vector<ShapeParams> sample_shapes(int count, double stddev, std::uint64_t seed);

/// Model bundle directory: `template.obj` plus `shape_dirs.bin`, a binary
/// little-endian float32 file with magic S2SBASIS and dims (V, 3, 10).
void save_model(const BodyModel& model, const std::filesystem::path& dir);
BodyModel load_model(const std::filesystem::path& dir);

}  // namespace s2s
