#include "s2s/mesh.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace s2s {

namespace {

inline std::uint64_t directed_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace

void validate_mesh(const TriMesh& mesh) {
  const int n = static_cast<int>(mesh.vertex_count());
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    const auto face = mesh.faces.row(f);
    for (int k = 0; k < 3; ++k) {
      if (face[k] < 0 || face[k] >= n) {
        throw std::invalid_argument("face " + std::to_string(f) + " references vertex " +
                                    std::to_string(face[k]) + " outside [0, " +
                                    std::to_string(n) + ")");
      }
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
      throw std::invalid_argument("face " + std::to_string(f) +
                                  " is degenerate (repeated vertex index)");
    }
  }
}

std::optional<std::pair<int, int>> boundary_edge(const TriMesh& mesh) {
  std::unordered_map<std::uint64_t, int> count;
  count.reserve(static_cast<std::size_t>(mesh.face_count()) * 3);
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    const auto face = mesh.faces.row(f);
    for (int k = 0; k < 3; ++k) {
      ++count[directed_key(face[k], face[(k + 1) % 3])];
    }
  }
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    const auto face = mesh.faces.row(f);
    for (int k = 0; k < 3; ++k) {
      const int a = face[k], b = face[(k + 1) % 3];
      if (count[directed_key(a, b)] != 1 || count.count(directed_key(b, a)) == 0 ||
          count[directed_key(b, a)] != 1) {
        return std::make_pair(a, b);
      }
    }
  }
  return std::nullopt;
}

bool is_watertight(const TriMesh& mesh) {
  return mesh.face_count() > 0 && !boundary_edge(mesh).has_value();
}

void require_watertight(const TriMesh& mesh) {
  if (mesh.face_count() == 0) throw std::runtime_error("mesh has no faces");
  if (auto edge = boundary_edge(mesh)) {
    throw std::runtime_error("mesh is not watertight: edge (" + std::to_string(edge->first) +
                             ", " + std::to_string(edge->second) +
                             ") is not shared by exactly two consistently oriented faces");
  }
}

TriMesh translated(const TriMesh& mesh, const Eigen::Vector3d& offset) {
  TriMesh out = mesh;
  out.vertices.rowwise() += offset.transpose();
  return out;
}

TriMesh scaled(const TriMesh& mesh, double factor, const Eigen::Vector3d& about) {
  TriMesh out = mesh;
  out.vertices = ((mesh.vertices.rowwise() - about.transpose()) * factor).rowwise() +
                 about.transpose();
  return out;
}

namespace {

// Leading integer of an OBJ face token; `3`, `3/7`, and `3//7` all give 3.
int parse_face_index(const std::string& token, int line_no) {
  std::size_t pos = 0;
  long value = 0;
  try {
    value = std::stol(token, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                             ": bad face index '" + token + "'");
  }
  if (pos != token.size() && token[pos] != '/') {
    throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                             ": bad face index '" + token + "'");
  }
  if (value < 1) {
    throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                             ": face indices are 1-based, got " + std::to_string(value));
  }
  return static_cast<int>(value);
}

}  // namespace

TriMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path.string());

  std::vector<Eigen::Vector3d> vertices;
  std::vector<Eigen::Vector3i> faces;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) {
        throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                                 ": expected 'v x y z'");
      }
      vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<std::string> tokens;
      std::string tok;
      while (ls >> tok) tokens.push_back(tok);
      if (tokens.size() != 3) {
        throw std::runtime_error("unsupported format at line " + std::to_string(line_no) +
                                 ": only triangular faces are supported (got " +
                                 std::to_string(tokens.size()) + " indices)");
      }
      Eigen::Vector3i face;
      for (int k = 0; k < 3; ++k) {
        const int idx = parse_face_index(tokens[k], line_no);
        if (idx > static_cast<int>(vertices.size())) {
          throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                                   ": face index " + std::to_string(idx) +
                                   " exceeds vertex count " + std::to_string(vertices.size()));
        }
        face[k] = idx - 1;
      }
      faces.push_back(face);
    }
    // other tags (vn, vt, o, s, ...) are ignored
  }

  TriMesh mesh;
  mesh.vertices.resize(static_cast<Eigen::Index>(vertices.size()), 3);
  for (std::size_t i = 0; i < vertices.size(); ++i) mesh.vertices.row(i) = vertices[i];
  mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i) mesh.faces.row(i) = faces[i];
  validate_mesh(mesh);
  return mesh;
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write mesh file: " + path.string());
  char buf[128];
  for (Eigen::Index v = 0; v < mesh.vertex_count(); ++v) {
    std::snprintf(buf, sizeof(buf), "v %.9f %.9f %.9f\n", mesh.vertices(v, 0),
                  mesh.vertices(v, 1), mesh.vertices(v, 2));
    out << buf;
  }
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    out << "f " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << ' '
        << mesh.faces(f, 2) + 1 << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace s2s
