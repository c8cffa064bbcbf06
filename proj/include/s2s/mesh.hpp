#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <utility>

namespace s2s {

/// Triangle mesh in meters. Faces are counter-clockwise with outward normals.
/// Canonical frame: +Y is the vertical body axis, the front camera looks
/// along -Z, feet rest at y = 0.
struct TriMesh {
  Eigen::MatrixX3d vertices;
  Eigen::MatrixX3i faces;

  Eigen::Index vertex_count() const { return vertices.rows(); }
  Eigen::Index face_count() const { return faces.rows(); }
};

/// Throws std::invalid_argument on out-of-range face indices or degenerate
/// faces (repeated vertex index within a face).
void validate_mesh(const TriMesh& mesh);

/// First undirected edge not shared by exactly two faces, if any.
std::optional<std::pair<int, int>> boundary_edge(const TriMesh& mesh);

/// Closed, consistently oriented 2-manifold: every directed edge appears
/// exactly once and so does its opposite.
bool is_watertight(const TriMesh& mesh);

/// Throws std::runtime_error naming the first offending edge.
void require_watertight(const TriMesh& mesh);

TriMesh translated(const TriMesh& mesh, const Eigen::Vector3d& offset);
TriMesh scaled(const TriMesh& mesh, double factor,
               const Eigen::Vector3d& about = Eigen::Vector3d::Zero());

/// Wavefront-style text format: `v x y z` and 1-based `f i j k`, triangles
/// only. Vertices survive a round trip to at least 6 decimal places; faces
/// exactly. Parse errors name the offending line.
TriMesh load_mesh(const std::filesystem::path& path);
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path);

}  // namespace s2s
