#include "s2s/silhouette.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace s2s {

std::size_t Silhouette::foreground_count() const {
  std::size_t n = 0;
  for (std::uint8_t p : pixels) n += (p != 0);
  return n;
}

Eigen::MatrixX3d rotate_view(const Eigen::MatrixX3d& vertices, double theta_deg) {
  if (!vertices.allFinite()) throw std::invalid_argument("rotate_view: non-finite vertices");
  if (theta_deg == 0.0) return vertices;
  const double theta = theta_deg * M_PI / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const Eigen::RowVector3d centroid = vertices.colwise().mean();
  Eigen::MatrixX3d out(vertices.rows(), 3);
  for (Eigen::Index i = 0; i < vertices.rows(); ++i) {
    const double x = vertices(i, 0) - centroid.x();
    const double z = vertices(i, 2) - centroid.z();
    out(i, 0) = centroid.x() + c * x + s * z;
    out(i, 1) = vertices(i, 1);
    out(i, 2) = centroid.z() - s * x + c * z;
  }
  return out;
}

TriMesh rotate_view(const TriMesh& mesh, double theta_deg) {
  TriMesh out;
  out.vertices = rotate_view(mesh.vertices, theta_deg);
  out.faces = mesh.faces;
  return out;
}

namespace {

// e == 0 pixels belong to the triangle only on top edges (horizontal,
// pointing +x) and left edges (pointing -y in screen coords), so shared
// edges are covered exactly once.
inline bool top_left(double dx, double dy) { return (dy == 0.0 && dx > 0.0) || dy < 0.0; }

void fill_triangle(Silhouette& img, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                   const Eigen::Vector2d& c) {
  Eigen::Vector2d p1 = b, p2 = c;
  const double area2 = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  if (area2 == 0.0) return;
  if (area2 < 0.0) std::swap(p1, p2);

  const double min_x = std::min({a.x(), p1.x(), p2.x()});
  const double max_x = std::max({a.x(), p1.x(), p2.x()});
  const double min_y = std::min({a.y(), p1.y(), p2.y()});
  const double max_y = std::max({a.y(), p1.y(), p2.y()});
  const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(max_x - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(max_y - 0.5)));

  const Eigen::Vector2d v[3] = {a, p1, p2};
  double ex[3], ey[3];
  for (int e = 0; e < 3; ++e) {
    ex[e] = v[(e + 1) % 3].x() - v[e].x();
    ey[e] = v[(e + 1) % 3].y() - v[e].y();
  }
  for (int py = y0; py <= y1; ++py) {
    const double cy = py + 0.5;
    for (int px = x0; px <= x1; ++px) {
      const double cx = px + 0.5;
      bool inside = true;
      for (int e = 0; e < 3; ++e) {
        const double w = ex[e] * (cy - v[e].y()) - ey[e] * (cx - v[e].x());
        if (w < 0.0 || (w == 0.0 && !top_left(ex[e], ey[e]))) {
          inside = false;
          break;
        }
      }
      if (inside) img.at(px, py) = 1;
    }
  }
}

}  // namespace

Silhouette rasterize(const TriMesh& mesh, const ViewSpec& view, int width, int height) {
  if (width < 16 || height < 16) {
    throw std::invalid_argument("rasterize: image dimensions must be at least 16");
  }
  if (!(view.margin_fraction >= 0.0 && view.margin_fraction < 0.5)) {
    throw std::invalid_argument("rasterize: margin_fraction must be in [0, 0.5)");
  }
  if (mesh.vertex_count() == 0 || mesh.face_count() == 0) {
    throw std::invalid_argument("rasterize: empty mesh");
  }

  const Eigen::MatrixX3d verts = rotate_view(mesh.vertices, view.rotation_deg);
  const double min_y = verts.col(1).minCoeff(), max_y = verts.col(1).maxCoeff();
  const double min_x = verts.col(0).minCoeff(), max_x = verts.col(0).maxCoeff();
  const double extent_y = max_y - min_y;
  if (extent_y <= 0.0) {
    throw std::invalid_argument("rasterize: mesh has zero vertical extent");
  }

  const double scale = (1.0 - 2.0 * view.margin_fraction) * height / extent_y;  // px per meter
  const double center_x = 0.5 * (min_x + max_x);
  const double top_pad = view.margin_fraction * height;

  Silhouette img;
  img.width = width;
  img.height = height;
  img.pixels.assign(static_cast<std::size_t>(width) * height, 0);

  auto project = [&](int vertex) {
    return Eigen::Vector2d(0.5 * width + (verts(vertex, 0) - center_x) * scale,
                           top_pad + (max_y - verts(vertex, 1)) * scale);
  };
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    fill_triangle(img, project(mesh.faces(f, 0)), project(mesh.faces(f, 1)),
                  project(mesh.faces(f, 2)));
  }
  return img;
}

double pixel_accuracy(const Silhouette& a, const Silhouette& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("pixel_accuracy: dimension mismatch");
  }
  if (a.pixels.empty()) throw std::invalid_argument("pixel_accuracy: empty images");
  std::size_t equal = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    equal += ((a.pixels[i] != 0) == (b.pixels[i] != 0));
  }
  return static_cast<double>(equal) / static_cast<double>(a.pixels.size());
}

double pixel_accuracy(const GrayImage& prediction, const Silhouette& target) {
  if (prediction.width != target.width || prediction.height != target.height) {
    throw std::invalid_argument("pixel_accuracy: dimension mismatch");
  }
  std::size_t equal = 0;
  for (Eigen::Index i = 0; i < prediction.pixels.size(); ++i) {
    equal += ((prediction.pixels[i] >= 0.5) == (target.pixels[i] != 0));
  }
  return static_cast<double>(equal) / static_cast<double>(prediction.pixels.size());
}

namespace {

// Next PGM header token, skipping whitespace and # comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
    } else if (!std::isspace(ch)) {
      tok.push_back(static_cast<char>(ch));
      while ((ch = in.get()) != EOF && !std::isspace(ch) && ch != '#') {
        tok.push_back(static_cast<char>(ch));
      }
      if (ch == '#') in.unget();
      return tok;
    }
  }
  return tok;
}

int parse_header_int(std::istream& in, const char* what) {
  const std::string tok = next_token(in);
  try {
    if (tok.empty()) throw std::invalid_argument("empty");
    return std::stoi(tok);
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("malformed PGM header: bad ") + what + " '" + tok + "'");
  }
}

}  // namespace

Silhouette load_silhouette(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open silhouette file: " + path.string());
  const std::string magic = next_token(in);
  if (magic != "P5" && magic != "P2") {
    throw std::runtime_error("malformed PGM header: expected P5 or P2, got '" + magic + "' in " +
                             path.string());
  }
  const int width = parse_header_int(in, "width");
  const int height = parse_header_int(in, "height");
  const int maxval = parse_header_int(in, "maxval");
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) {
    throw std::runtime_error("malformed PGM header: bad dimensions/maxval in " + path.string());
  }
  const int threshold = (maxval + 1) / 2;

  Silhouette s;
  s.width = width;
  s.height = height;
  s.pixels.resize(static_cast<std::size_t>(width) * height);
  if (magic == "P5") {
    std::vector<unsigned char> raw(s.pixels.size());
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
      throw std::runtime_error("truncated PGM pixel data in " + path.string());
    }
    for (std::size_t i = 0; i < raw.size(); ++i) s.pixels[i] = raw[i] >= threshold ? 1 : 0;
  } else {
    for (std::size_t i = 0; i < s.pixels.size(); ++i) {
      const int v = parse_header_int(in, "pixel");
      s.pixels[i] = v >= threshold ? 1 : 0;
    }
  }
  return s;
}

void save_silhouette(const Silhouette& s, const std::filesystem::path& path) {
  if (s.width <= 0 || s.height <= 0 ||
      s.pixels.size() != static_cast<std::size_t>(s.width) * s.height) {
    throw std::invalid_argument("save_silhouette: inconsistent dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write silhouette file: " + path.string());
  out << "P5\n" << s.width << ' ' << s.height << "\n255\n";
  std::vector<unsigned char> raw(s.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = s.pixels[i] ? 255 : 0;
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace s2s
