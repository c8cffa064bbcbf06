#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "s2s/mesh.hpp"

namespace s2s::testing {

inline TriMesh make_cube(double side = 1.0, const Eigen::Vector3d& min_corner = {0, 0, 0}) {
  TriMesh m;
  m.vertices.resize(8, 3);
  int i = 0;
  for (double z : {0.0, 1.0}) {
    m.vertices.row(i++) = (min_corner + side * Eigen::Vector3d(0, 0, z)).transpose();
    m.vertices.row(i++) = (min_corner + side * Eigen::Vector3d(1, 0, z)).transpose();
    m.vertices.row(i++) = (min_corner + side * Eigen::Vector3d(1, 1, z)).transpose();
    m.vertices.row(i++) = (min_corner + side * Eigen::Vector3d(0, 1, z)).transpose();
  }
  m.faces.resize(12, 3);
  m.faces << 0, 2, 1, 0, 3, 2,  // z = 0
      4, 5, 6, 4, 6, 7,         // z = side
      0, 1, 5, 0, 5, 4,         // y = 0
      3, 7, 6, 3, 6, 2,         // y = side
      0, 4, 7, 0, 7, 3,         // x = 0
      1, 2, 6, 1, 6, 5;         // x = side
  return m;
}

inline TriMesh make_icosphere(double radius, int subdivisions,
                              const Eigen::Vector3d& center = {0, 0, 0}) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : verts) v = v.normalized() * radius;
  std::vector<Eigen::Vector3i> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      verts.push_back(((verts[a] + verts[b]) * 0.5).normalized() * radius);
      const int id = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<Eigen::Vector3i> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  TriMesh m;
  m.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) {
    m.vertices.row(static_cast<Eigen::Index>(i)) = (verts[i] + center).transpose();
  }
  m.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i) {
    m.faces.row(static_cast<Eigen::Index>(i)) = faces[i];
  }
  return m;
}

/// Capped cylinder along +Y, base center at `base`, radius r, height h.
inline TriMesh make_cylinder(double radius, double height, int segments,
                             const Eigen::Vector3d& base = {0, 0, 0}) {
  TriMesh m;
  m.vertices.resize(2 * segments + 2, 3);
  for (int ring = 0; ring < 2; ++ring) {
    const double y = ring * height;
    for (int j = 0; j < segments; ++j) {
      const double phi = 2.0 * M_PI * j / segments;
      m.vertices.row(ring * segments + j) =
          (base + Eigen::Vector3d(radius * std::cos(phi), y, radius * std::sin(phi))).transpose();
    }
  }
  const int bc = 2 * segments, tc = 2 * segments + 1;
  m.vertices.row(bc) = base.transpose();
  m.vertices.row(tc) = (base + Eigen::Vector3d(0, height, 0)).transpose();

  m.faces.resize(4 * segments, 3);
  Eigen::Index f = 0;
  for (int j = 0; j < segments; ++j) {
    const int j1 = (j + 1) % segments;
    m.faces.row(f++) << j, segments + j, segments + j1;
    m.faces.row(f++) << j, segments + j1, j1;
    m.faces.row(f++) << bc, j, j1;
    m.faces.row(f++) << tc, segments + j1, segments + j;
  }
  return m;
}

inline TriMesh merge(const TriMesh& a, const TriMesh& b) {
  TriMesh m;
  m.vertices.resize(a.vertex_count() + b.vertex_count(), 3);
  m.vertices << a.vertices, b.vertices;
  m.faces.resize(a.face_count() + b.face_count(), 3);
  m.faces << a.faces, (b.faces.array() + static_cast<int>(a.vertex_count())).matrix();
  return m;
}

}  // namespace s2s::testing
