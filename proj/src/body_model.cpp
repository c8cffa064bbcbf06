#include "s2s/body_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "s2s/io_util.hpp"
#include "s2s/rng.hpp"

namespace s2s {

void validate_model(const BodyModel& model) {
  if (model.shape_dirs.rows() != model.template_mesh.vertex_count() * 3) {
    throw std::invalid_argument("shape_dirs has " + std::to_string(model.shape_dirs.rows()) +
                                " rows, expected 3 x " +
                                std::to_string(model.template_mesh.vertex_count()));
  }
  validate_mesh(model.template_mesh);
  require_watertight(model.template_mesh);
}

TriMesh deform(const BodyModel& model, const ShapeParams& beta) {
  if (!beta.allFinite()) throw std::invalid_argument("beta has non-finite entries");
  const Eigen::Index n = model.template_mesh.vertex_count();
  if (model.shape_dirs.rows() != n * 3) {
    throw std::invalid_argument("shape_dirs / template size mismatch: " +
                                std::to_string(model.shape_dirs.rows()) + " rows vs " +
                                std::to_string(n) + " vertices");
  }
  TriMesh out = model.template_mesh;
  if (beta.isZero(0.0)) return out;  // zero shape is the template, bit for bit
  const Eigen::VectorXd displacement = model.shape_dirs * beta;
  out.vertices += Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>>(
      displacement.data(), n, 3);
  return out;
}

std::array<const char*, kShapeDims> shape_basis_names() {
  return {"overall_height", "overall_girth", "bust_girth",    "waist_girth",
          "hip_girth",      "shoulder_width", "limb_thickness", "limb_length",
          "torso_length",   "head_size"};
}

namespace {

// Shape-preserving monotone cubic interpolation (Fritsch-Carlson). Used for
// the body profile so radii never overshoot the control points.
class PchipCurve {
 public:
  PchipCurve(std::vector<double> t, std::vector<double> v)
      : t_(std::move(t)), v_(std::move(v)), m_(t_.size(), 0.0) {
    const std::size_t n = t_.size();
    std::vector<double> h(n - 1), d(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = t_[k + 1] - t_[k];
      d[k] = (v_[k + 1] - v_[k]) / h[k];
    }
    m_[0] = d[0];
    m_[n - 1] = d[n - 2];
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (d[k - 1] * d[k] <= 0.0) {
        m_[k] = 0.0;
      } else {
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        m_[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
      }
    }
  }

  double operator()(double t) const {
    const std::size_t n = t_.size();
    if (t <= t_.front()) return v_.front();
    if (t >= t_.back()) return v_.back();
    std::size_t k = std::upper_bound(t_.begin(), t_.end(), t) - t_.begin() - 1;
    const double h = t_[k + 1] - t_[k];
    const double s = (t - t_[k]) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * v_[k] + (s3 - 2 * s2 + s) * h * m_[k] +
           (-2 * s3 + 3 * s2) * v_[k + 1] + (s3 - s2) * h * m_[k + 1];
  }

 private:
  std::vector<double> t_, v_, m_;
};

double gauss_window(double t, double center, double sigma) {
  const double u = (t - center) / sigma;
  return std::exp(-0.5 * u * u);
}

double smoothstep01(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

double plateau(double t, double lo, double hi, double soft) {
  return smoothstep01((t - lo) / soft) * smoothstep01((hi - t) / soft);
}

struct ProfilePoint {
  double frac, half_width, half_depth;
};

// Elliptical cross-section profile, fractions of body height. Legs are
// merged into one column (template pose, feet together); arms are folded
// into the torso outline, widest at the shoulders.
constexpr ProfilePoint kProfile[] = {
    {0.000, 0.090, 0.115},  // feet
    {0.020, 0.090, 0.110},
    {0.050, 0.082, 0.100},  // ankles
    {0.150, 0.095, 0.090},
    {0.300, 0.105, 0.095},  // knees
    {0.450, 0.130, 0.105},  // thighs
    {0.500, 0.150, 0.112},
    {0.520, 0.165, 0.118},  // hip
    {0.570, 0.148, 0.105},
    {0.620, 0.126, 0.095},  // waist
    {0.670, 0.142, 0.105},
    {0.720, 0.160, 0.115},  // bust
    {0.770, 0.172, 0.112},
    {0.810, 0.200, 0.105},  // shoulders
    {0.835, 0.120, 0.085},
    {0.855, 0.058, 0.062},  // neck
    {0.875, 0.062, 0.068},
    {0.930, 0.088, 0.102},  // head
    {0.970, 0.078, 0.092},
    {1.000, 0.028, 0.034},  // crown
};

// Landmark fractions the basis fields are anchored to.
constexpr double kHipCenter = 0.52, kWaistCenter = 0.62, kBustCenter = 0.72;
constexpr double kShoulderCenter = 0.81, kHeadCenter = 0.93, kCrotch = 0.50, kNeckBase = 0.84;

Eigen::Vector3d basis_displacement(int k, const Eigen::Vector3d& p, double height) {
  const double x = p.x(), y = p.y(), z = p.z();
  const double t = y / height;
  switch (k) {
    case 0:  // overall height: vertical stretch about the feet
      return {0.0, 0.045 * t, 0.0};
    case 1:  // overall girth
      return {0.025 * x, 0.0, 0.025 * z};
    case 2: {  // bust girth
      const double w = 0.040 * gauss_window(t, kBustCenter, 0.045);
      return {w * x, 0.0, w * z};
    }
    case 3: {  // waist girth
      const double w = 0.040 * gauss_window(t, kWaistCenter, 0.040);
      return {w * x, 0.0, w * z};
    }
    case 4: {  // hip girth
      const double w = 0.040 * gauss_window(t, kHipCenter, 0.045);
      return {w * x, 0.0, w * z};
    }
    case 5:  // shoulder width, x only
      return {0.110 * gauss_window(t, kShoulderCenter, 0.035) * x, 0.0, 0.0};
    case 6: {  // limb thickness (leg column)
      const double w = 0.035 * plateau(t, 0.02, 0.46, 0.06);
      return {w * x, 0.0, w * z};
    }
    case 7:  // limb length: stretch below the crotch, shift above
      return {0.0, 0.025 * std::min(t / kCrotch, 1.0), 0.0};
    case 8:  // torso length: stretch between crotch and neck base
      return {0.0, 0.020 * std::clamp((t - kCrotch) / (kNeckBase - kCrotch), 0.0, 1.0), 0.0};
    case 9: {  // head size: inflate about the head center
      const double w = 0.120 * gauss_window(t, kHeadCenter, 0.040);
      return {w * x, w * (y - kHeadCenter * height), w * z};
    }
    default:
      return Eigen::Vector3d::Zero();
  }
}

}  // namespace

BodyModel make_procedural_model(const ProceduralBodyConfig& config) {
  if (config.radial_segments < 3 || config.rings < 2) {
    throw std::invalid_argument("tessellation too coarse to be watertight: need >= 3 radial "
                                "segments and >= 2 rings");
  }
  if (config.height < 0.5 || config.height > 3.0) {
    throw std::invalid_argument("body height outside plausible range: " +
                                std::to_string(config.height));
  }
  if (config.girth_scale <= 0.0) throw std::invalid_argument("girth_scale must be positive");

  std::vector<double> fracs, widths, depths;
  for (const auto& p : kProfile) {
    fracs.push_back(p.frac);
    widths.push_back(p.half_width * config.girth_scale);
    depths.push_back(p.half_depth * config.girth_scale);
  }
  const PchipCurve width_curve(fracs, widths);
  const PchipCurve depth_curve(std::move(fracs), std::move(depths));

  const int nseg = config.radial_segments;
  const int nrow = config.rings + 1;
  const double height = config.height;

  TriMesh mesh;
  mesh.vertices.resize(static_cast<Eigen::Index>(nrow) * nseg + 2, 3);
  for (int i = 0; i < nrow; ++i) {
    const double frac = static_cast<double>(i) / config.rings;
    const double y = frac * height;
    const double a = width_curve(frac);
    const double b = depth_curve(frac);
    for (int j = 0; j < nseg; ++j) {
      const double phi = 2.0 * M_PI * j / nseg;
      mesh.vertices.row(static_cast<Eigen::Index>(i) * nseg + j) =
          Eigen::RowVector3d(a * std::cos(phi), y, b * std::sin(phi));
    }
  }
  const Eigen::Index bottom_center = static_cast<Eigen::Index>(nrow) * nseg;
  const Eigen::Index top_center = bottom_center + 1;
  mesh.vertices.row(bottom_center) = Eigen::RowVector3d(0.0, 0.0, 0.0);
  mesh.vertices.row(top_center) = Eigen::RowVector3d(0.0, height, 0.0);

  mesh.faces.resize(static_cast<Eigen::Index>(config.rings) * nseg * 2 + 2 * nseg, 3);
  Eigen::Index f = 0;
  auto ring_vertex = [nseg](int i, int j) { return i * nseg + (j % nseg); };
  for (int i = 0; i < config.rings; ++i) {
    for (int j = 0; j < nseg; ++j) {
      mesh.faces.row(f++) << ring_vertex(i, j), ring_vertex(i + 1, j), ring_vertex(i + 1, j + 1);
      mesh.faces.row(f++) << ring_vertex(i, j), ring_vertex(i + 1, j + 1), ring_vertex(i, j + 1);
    }
  }
  for (int j = 0; j < nseg; ++j) {
    mesh.faces.row(f++) << static_cast<int>(bottom_center), ring_vertex(0, j),
        ring_vertex(0, j + 1);
    mesh.faces.row(f++) << static_cast<int>(top_center), ring_vertex(config.rings, j + 1),
        ring_vertex(config.rings, j);
  }

  BodyModel model;
  model.template_mesh = std::move(mesh);
  const Eigen::Index n = model.template_mesh.vertex_count();
  model.shape_dirs.resize(n * 3, kShapeDims);
  for (Eigen::Index v = 0; v < n; ++v) {
    const Eigen::Vector3d p = model.template_mesh.vertices.row(v);
    for (int k = 0; k < kShapeDims; ++k) {
      model.shape_dirs.block<3, 1>(v * 3, k) = basis_displacement(k, p, height);
    }
  }
  validate_model(model);
  return model;
}

std::vector<ShapeParams> sample_shapes(int count, double stddev, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_shapes: count must be >= 1");
  if (!(stddev > 0.0)) throw std::invalid_argument("sample_shapes: stddev must be > 0");
  Rng rng(seed);
  std::vector<ShapeParams> shapes(count);
  for (auto& beta : shapes) {
    for (int k = 0; k < kShapeDims; ++k) beta[k] = stddev * rng.normal();
  }
  return shapes;
}

static const char kBasisMagic[9] = "S2SBASIS";

void save_model(const BodyModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_mesh(model.template_mesh, dir / "template.obj");
  std::ofstream out(dir / "shape_dirs.bin", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "shape_dirs.bin").string());
  write_magic(out, kBasisMagic);
  const auto n = static_cast<std::uint32_t>(model.template_mesh.vertex_count());
  write_u32(out, n);
  write_u32(out, 3);
  write_u32(out, kShapeDims);
  for (std::uint32_t v = 0; v < n; ++v) {
    for (int axis = 0; axis < 3; ++axis) {
      for (int k = 0; k < kShapeDims; ++k) {
        write_f32(out, static_cast<float>(model.shape_dirs(3 * v + axis, k)));
      }
    }
  }
  if (!out) throw std::runtime_error("write failed: " + (dir / "shape_dirs.bin").string());
}

BodyModel load_model(const std::filesystem::path& dir) {
  BodyModel model;
  model.template_mesh = load_mesh(dir / "template.obj");
  std::ifstream in(dir / "shape_dirs.bin", std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + (dir / "shape_dirs.bin").string());
  require_magic(in, kBasisMagic, "shape basis");
  const std::uint32_t n = read_u32(in);
  const std::uint32_t three = read_u32(in);
  const std::uint32_t dims = read_u32(in);
  if (three != 3 || dims != kShapeDims) {
    throw std::runtime_error("shape basis dims (" + std::to_string(n) + ", " +
                             std::to_string(three) + ", " + std::to_string(dims) +
                             ") do not match (V, 3, 10)");
  }
  if (static_cast<Eigen::Index>(n) != model.template_mesh.vertex_count()) {
    throw std::runtime_error("shape basis vertex count " + std::to_string(n) +
                             " does not match template vertex count " +
                             std::to_string(model.template_mesh.vertex_count()));
  }
  model.shape_dirs.resize(static_cast<Eigen::Index>(n) * 3, kShapeDims);
  for (std::uint32_t v = 0; v < n; ++v) {
    for (int axis = 0; axis < 3; ++axis) {
      for (int k = 0; k < kShapeDims; ++k) {
        model.shape_dirs(3 * v + axis, k) = read_f32(in);
      }
    }
  }
  validate_model(model);
  return model;
}

}  // namespace s2s
