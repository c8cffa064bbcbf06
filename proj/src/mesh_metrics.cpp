#include "s2s/mesh_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "s2s/io_util.hpp"

namespace s2s {

void validate_measurements(const Measurements& m) {
  const double values[] = {m.height_mm, m.weight_kg, m.bust_mm, m.waist_mm, m.hip_mm};
  const char* names[] = {"height_mm", "weight_kg", "bust_mm", "waist_mm", "hip_mm"};
  for (int i = 0; i < 5; ++i) {
    if (!std::isfinite(values[i]) || values[i] <= 0.0) {
      throw std::runtime_error(std::string("measurement ") + names[i] + " is not positive: " +
                               std::to_string(values[i]));
    }
  }
  const double girths[] = {m.bust_mm, m.waist_mm, m.hip_mm};
  for (int i = 0; i < 3; ++i) {
    if (girths[i] >= 3000.0) {
      throw std::runtime_error(std::string("measurement ") + names[i + 2] +
                               " exceeds the 3000 mm sanity bound: " + std::to_string(girths[i]));
    }
  }
}

std::string to_key_value(const Measurements& m) {
  std::string out;
  out += "height_mm=" + fmt_fixed(m.height_mm, 3) + "\n";
  out += "weight_kg=" + fmt_fixed(m.weight_kg, 3) + "\n";
  out += "bust_mm=" + fmt_fixed(m.bust_mm, 3) + "\n";
  out += "waist_mm=" + fmt_fixed(m.waist_mm, 3) + "\n";
  out += "hip_mm=" + fmt_fixed(m.hip_mm, 3) + "\n";
  return out;
}

std::string to_csv_row(const std::string& id, const Measurements& m) {
  return id + "," + fmt_fixed(m.height_mm, 3) + "," + fmt_fixed(m.weight_kg, 3) + "," +
         fmt_fixed(m.bust_mm, 3) + "," + fmt_fixed(m.waist_mm, 3) + "," + fmt_fixed(m.hip_mm, 3);
}

void validate_slice_spec(const SliceSpec& spec) {
  if (spec.axis < 0 || spec.axis > 2) throw std::invalid_argument("slice axis must be 0, 1 or 2");
  if (!(spec.cut_spacing > 0.0)) throw std::invalid_argument("cut_spacing must be > 0");
  if (!(spec.hip_fraction < spec.waist_fraction && spec.waist_fraction < spec.bust_fraction)) {
    throw std::invalid_argument("landmark fractions must be ordered hip < waist < bust");
  }
  for (double f : {spec.hip_fraction, spec.waist_fraction, spec.bust_fraction}) {
    if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("landmark fractions must be in (0,1)");
  }
}

double height(const TriMesh& mesh, const SliceSpec& spec) {
  validate_slice_spec(spec);
  if (mesh.vertex_count() == 0) throw std::invalid_argument("height of an empty mesh");
  const auto coords = mesh.vertices.col(spec.axis);
  const double extent = coords.maxCoeff() - coords.minCoeff();
  const auto cuts = static_cast<long>(std::floor(extent / spec.cut_spacing + 1e-9));
  return static_cast<double>(cuts) * spec.cut_spacing * 1000.0;
}

double volume(const TriMesh& mesh) {
  validate_mesh(mesh);
  require_watertight(mesh);
  double six_v = 0.0;
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    const Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, 0));
    const Eigen::Vector3d b = mesh.vertices.row(mesh.faces(f, 1));
    const Eigen::Vector3d c = mesh.vertices.row(mesh.faces(f, 2));
    six_v += a.dot(b.cross(c));
  }
  const double v = six_v / 6.0;
  if (v <= 0.0) {
    throw std::runtime_error("signed volume is not positive (" + std::to_string(v) +
                             "): faces are oriented inward");
  }
  return v;
}

double weight(const TriMesh& mesh, double density_kg_per_l) {
  if (density_kg_per_l < 0.0 || !std::isfinite(density_kg_per_l)) {
    throw std::invalid_argument("density must be finite and non-negative");
  }
  return volume(mesh) * density_kg_per_l * 1000.0;
}

namespace {

struct Vec2 {
  double u, w;
};

// Cross-section of the mesh with the plane coord[axis] = c, as closed loops
// of 2D points in the remaining two coordinates. Intersection points are
// keyed by mesh edge so the two faces sharing an edge chain exactly.
std::vector<std::vector<Vec2>> cross_section_loops(const TriMesh& mesh, int axis, double c) {
  const int u_axis = (axis == 0) ? 1 : 0;
  const int w_axis = (axis == 2) ? 1 : 2;
  const auto coords = mesh.vertices.col(axis);
  const double extent = coords.maxCoeff() - coords.minCoeff();
  const double eps = std::max(extent, 1.0) * 1e-12;

  // Nudge the plane off any vertex so every crossing is a clean edge crossing.
  for (int attempt = 0; attempt < 64; ++attempt) {
    bool touches = false;
    for (Eigen::Index v = 0; v < mesh.vertex_count(); ++v) {
      if (std::abs(coords[v] - c) < eps) {
        touches = true;
        break;
      }
    }
    if (!touches) break;
    c += 16.0 * eps;
  }

  auto edge_key = [](int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  };

  std::unordered_map<std::uint64_t, int> point_ids;
  std::vector<Vec2> points;
  std::vector<std::array<int, 2>> segments;

  auto intersection_id = [&](int va, int vb) {
    const std::uint64_t key = edge_key(va, vb);
    auto it = point_ids.find(key);
    if (it != point_ids.end()) return it->second;
    // evaluate with canonical endpoint order so both faces get the same point
    int lo = va, hi = vb;
    if (lo > hi) std::swap(lo, hi);
    const double ca = mesh.vertices(lo, axis), cb = mesh.vertices(hi, axis);
    const double t = (c - ca) / (cb - ca);
    Vec2 p{mesh.vertices(lo, u_axis) + t * (mesh.vertices(hi, u_axis) - mesh.vertices(lo, u_axis)),
           mesh.vertices(lo, w_axis) + t * (mesh.vertices(hi, w_axis) - mesh.vertices(lo, w_axis))};
    const int id = static_cast<int>(points.size());
    points.push_back(p);
    point_ids.emplace(key, id);
    return id;
  };

  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    const int i0 = mesh.faces(f, 0), i1 = mesh.faces(f, 1), i2 = mesh.faces(f, 2);
    const bool above0 = coords[i0] > c, above1 = coords[i1] > c, above2 = coords[i2] > c;
    const int n_above = int(above0) + int(above1) + int(above2);
    if (n_above == 0 || n_above == 3) continue;
    // the lone vertex on its own side of the plane
    int lone, other_a, other_b;
    const bool lone_above = (n_above == 1);
    if (above0 == lone_above && above1 != lone_above) {
      lone = i0, other_a = i1, other_b = i2;
    } else if (above1 == lone_above && above2 != lone_above) {
      lone = i1, other_a = i2, other_b = i0;
    } else {
      lone = i2, other_a = i0, other_b = i1;
    }
    segments.push_back({intersection_id(lone, other_a), intersection_id(lone, other_b)});
  }

  if (segments.empty()) return {};

  // Chain segments into loops: every intersection point joins exactly two.
  std::unordered_map<int, std::vector<int>> incident;
  for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
    incident[segments[s][0]].push_back(s);
    incident[segments[s][1]].push_back(s);
  }
  for (const auto& [pid, segs] : incident) {
    if (segs.size() != 2) {
      throw std::runtime_error("open cross-section loop at plane coordinate " +
                               std::to_string(c) + ": mesh is not watertight");
    }
  }

  std::vector<std::vector<Vec2>> loops;
  std::vector<bool> used(segments.size(), false);
  for (int start = 0; start < static_cast<int>(segments.size()); ++start) {
    if (used[start]) continue;
    std::vector<Vec2> loop;
    int seg = start;
    int node = segments[start][0];
    while (!used[seg]) {
      used[seg] = true;
      loop.push_back(points[node]);
      node = (segments[seg][0] == node) ? segments[seg][1] : segments[seg][0];
      const auto& pair = incident[node];
      seg = (pair[0] == seg) ? pair[1] : pair[0];
    }
    if (loop.size() >= 3) loops.push_back(std::move(loop));
  }
  return loops;
}

double polygon_perimeter(const std::vector<Vec2>& poly) {
  double p = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    p += std::hypot(b.u - a.u, b.w - a.w);
  }
  return p;
}

// Andrew's monotone chain; returns the hull as a closed CCW polygon.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.u < b.u || (a.u == b.u && a.w < b.w);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) { return a.u == b.u && a.w == b.w; }),
            pts.end());
  const auto n = pts.size();
  if (n < 3) return pts;
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.u - o.u) * (b.w - o.w) - (a.w - o.w) * (b.u - o.u);
  };
  std::vector<Vec2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

double circumference(const TriMesh& mesh, double height_fraction, const SliceSpec& spec,
                     LoopPolicy policy) {
  validate_slice_spec(spec);
  if (mesh.vertex_count() == 0) throw std::invalid_argument("circumference of an empty mesh");
  const auto coords = mesh.vertices.col(spec.axis);
  const double lo = coords.minCoeff(), hi = coords.maxCoeff();
  const double c = lo + height_fraction * (hi - lo);
  auto loops = cross_section_loops(mesh, spec.axis, c);
  if (loops.empty()) {
    throw std::runtime_error("empty cross-section at height fraction " +
                             std::to_string(height_fraction));
  }

  std::size_t largest = 0;
  double largest_perimeter = -1.0;
  for (std::size_t i = 0; i < loops.size(); ++i) {
    const double p = polygon_perimeter(loops[i]);
    if (p > largest_perimeter) {
      largest_perimeter = p;
      largest = i;
    }
  }

  std::vector<Vec2> torso_points;
  if (policy == LoopPolicy::kLargestLoop) {
    torso_points = loops[largest];
  } else {
    double min_u = std::numeric_limits<double>::max(), max_u = -min_u;
    double min_w = min_u, max_w = -min_u;
    for (const Vec2& p : loops[largest]) {
      min_u = std::min(min_u, p.u), max_u = std::max(max_u, p.u);
      min_w = std::min(min_w, p.w), max_w = std::max(max_w, p.w);
    }
    for (const auto& loop : loops) {
      Vec2 centroid{0.0, 0.0};
      for (const Vec2& p : loop) centroid.u += p.u, centroid.w += p.w;
      centroid.u /= static_cast<double>(loop.size());
      centroid.w /= static_cast<double>(loop.size());
      if (centroid.u >= min_u && centroid.u <= max_u && centroid.w >= min_w &&
          centroid.w <= max_w) {
        torso_points.insert(torso_points.end(), loop.begin(), loop.end());
      }
    }
  }
  return polygon_perimeter(convex_hull(std::move(torso_points))) * 1000.0;
}

Measurements measure_all(const TriMesh& mesh, const SliceSpec& spec, double density_kg_per_l) {
  validate_slice_spec(spec);
  if (mesh.vertex_count() == 0) throw std::invalid_argument("measure_all on an empty mesh");

  Measurements m;
  m.height_mm = height(mesh, spec);
  m.weight_kg = weight(mesh, density_kg_per_l);
  m.bust_mm = circumference(mesh, spec.bust_fraction, spec, LoopPolicy::kLargestLoop);
  m.hip_mm = circumference(mesh, spec.hip_fraction, spec, LoopPolicy::kMergeTorsoBox);

  // Waist: minimal circumference near the configured landmark.
  const auto coords = mesh.vertices.col(spec.axis);
  const double extent = coords.maxCoeff() - coords.minCoeff();
  const double half = spec.waist_search_halfwidth;
  const int steps = std::clamp(static_cast<int>(std::lround(2.0 * half * extent /
                                                            spec.cut_spacing)),
                               4, 40);
  double best = std::numeric_limits<double>::max();
  for (int i = 0; i <= steps; ++i) {
    const double f = std::clamp(spec.waist_fraction - half + 2.0 * half * i / steps, 0.02, 0.98);
    best = std::min(best, circumference(mesh, f, spec, LoopPolicy::kLargestLoop));
  }
  m.waist_mm = best;

  validate_measurements(m);
  return m;
}

VertexError per_vertex_error(const TriMesh& pred, const TriMesh& truth) {
  if (pred.vertex_count() == 0 || truth.vertex_count() == 0) {
    throw std::invalid_argument("per_vertex_error on an empty mesh");
  }
  VertexError result;
  const Eigen::Index np = pred.vertex_count(), nt = truth.vertex_count();
  result.per_vertex_mm.resize(np);

  if (np == nt) {
    result.per_vertex_mm =
        (pred.vertices - truth.vertices).rowwise().norm() * 1000.0;
    result.mean_mm = result.per_vertex_mm.mean();
    return result;
  }

  auto nearest = [](const Eigen::MatrixX3d& from, const Eigen::MatrixX3d& to,
                    Eigen::VectorXd* dists) {
    double total = 0.0;
    if (dists) dists->resize(from.rows());
    for (Eigen::Index i = 0; i < from.rows(); ++i) {
      const Eigen::RowVector3d p = from.row(i);
      double best = std::numeric_limits<double>::max();
      for (Eigen::Index j = 0; j < to.rows(); ++j) {
        best = std::min(best, (to.row(j) - p).squaredNorm());
      }
      const double d = std::sqrt(best);
      total += d;
      if (dists) (*dists)[i] = d * 1000.0;
    }
    return total / static_cast<double>(from.rows());
  };

  const double mean_pt = nearest(pred.vertices, truth.vertices, &result.per_vertex_mm);
  const double mean_tp = nearest(truth.vertices, pred.vertices, nullptr);
  result.mean_mm = 0.5 * (mean_pt + mean_tp) * 1000.0;
  return result;
}

void save_scalars(const Eigen::VectorXd& values, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (Eigen::Index i = 0; i < values.size(); ++i) out << fmt_fixed(values[i], 6) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Eigen::VectorXd load_scalars(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<double> values;
  double v;
  while (in >> v) values.push_back(v);
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace s2s
