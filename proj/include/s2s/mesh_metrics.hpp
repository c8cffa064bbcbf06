#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>

#include "s2s/mesh.hpp"

namespace s2s {

/// Ground-truth anthropometry of one body.
struct Measurements {
  double height_mm = 0.0;
  double weight_kg = 0.0;
  double bust_mm = 0.0;
  double waist_mm = 0.0;
  double hip_mm = 0.0;
};

/// Throws if any value is non-positive/non-finite or a circumference exceeds
/// the 3000 mm sanity bound.
void validate_measurements(const Measurements& m);

std::string to_key_value(const Measurements& m);
/// One CSV row: id,height_mm,weight_kg,bust_mm,waist_mm,hip_mm
std::string to_csv_row(const std::string& id, const Measurements& m);

struct SliceSpec {
  int axis = 1;                // vertical coordinate index (y)
  double cut_spacing = 0.005;  // meters between height cuts
  double hip_fraction = 0.52;  // landmark heights as fractions of body height
  double waist_fraction = 0.62;
  double bust_fraction = 0.72;
  double waist_search_halfwidth = 0.05;  // waist refined to the minimum in +-this
};

void validate_slice_spec(const SliceSpec& spec);

/// Cut-counting height: N_cuts * cut_spacing over the vertical extent, in mm.
/// Agrees with the analytic extent to within one cut spacing.
double height(const TriMesh& mesh, const SliceSpec& spec = {});

/// Signed-tetrahedron volume in cubic meters. Requires a watertight,
/// consistently outward-oriented mesh and throws naming the first boundary
/// edge otherwise.
double volume(const TriMesh& mesh);

/// weight = volume(m^3) * density(kg/L) * 1000(L/m^3).
double weight(const TriMesh& mesh, double density_kg_per_l = 0.985);

enum class LoopPolicy {
  kLargestLoop,    // limbs excluded: keep the largest-perimeter loop
  kMergeTorsoBox,  // hull together loops centered inside the largest loop's box
};

/// Convex-hull perimeter (tape-measure semantics) of the torso cross-section
/// at height_fraction of the body height, in mm.
double circumference(const TriMesh& mesh, double height_fraction, const SliceSpec& spec = {},
                     LoopPolicy policy = LoopPolicy::kLargestLoop);

/// Height, weight, and bust/waist/hip circumferences. The waist landmark is
/// refined to the minimal circumference within +-waist_search_halfwidth of the
/// configured fraction; hip uses the torso-box merge policy.
Measurements measure_all(const TriMesh& mesh, const SliceSpec& spec = {},
                         double density_kg_per_l = 0.985);

struct VertexError {
  double mean_mm = 0.0;             // symmetric mean distance
  Eigen::VectorXd per_vertex_mm;    // distances from pred vertices, for heatmaps
};

/// Mean vertex distance in mm: corresponding vertices when counts match,
/// nearest vertices otherwise (symmetric mean of both directions).
VertexError per_vertex_error(const TriMesh& pred, const TriMesh& truth);

/// Heatmap export: one scalar per line.
void save_scalars(const Eigen::VectorXd& values, const std::filesystem::path& path);
Eigen::VectorXd load_scalars(const std::filesystem::path& path);

}  // namespace s2s
