#include <mfd/point_cloud.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/QR>

#include "rng.hpp"

namespace mfd {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw std::invalid_argument(std::string("shape parameter '") + name + "' must be positive");
}

}  // namespace

PointCloud::PointCloud(Matrix coords, std::optional<Matrix> ground_truth)
  : coords_(std::move(coords))
  , ground_truth_(std::move(ground_truth)) {
  if (coords_.rows() < 2) throw std::invalid_argument("a point cloud needs at least 2 points");
  if (coords_.cols() < 1) throw std::invalid_argument("a point cloud needs at least 1 dimension");
  if (!coords_.allFinite()) throw std::invalid_argument("point cloud contains non-finite values");
  if (ground_truth_) {
    if (ground_truth_->rows() != coords_.rows() || ground_truth_->cols() != coords_.cols())
      throw std::invalid_argument("ground truth shape differs from coordinates");
    if (!ground_truth_->allFinite()) throw std::invalid_argument("ground truth contains non-finite values");
  }
}

const Matrix& PointCloud::ground_truth() const {
  if (!ground_truth_) throw std::logic_error("point cloud has no ground truth");
  return *ground_truth_;
}

PointCloud PointCloud::with_coords(Matrix coords) const {
  return PointCloud(std::move(coords), ground_truth_);
}

ManifoldKind parse_manifold_kind(std::string_view name) {
  if (name == "circle") return ManifoldKind::circle;
  if (name == "helix") return ManifoldKind::helix;
  if (name == "swiss-roll-with-hole" || name == "swiss-roll") return ManifoldKind::swiss_roll_hole;
  if (name == "fish-bowl") return ManifoldKind::fish_bowl;
  if (name == "sphere") return ManifoldKind::sphere;
  if (name == "sinus-highdim") return ManifoldKind::sinus_highdim;
  throw std::invalid_argument("unknown manifold kind '" + std::string(name) +
                              "' (expected circle, helix, swiss-roll-with-hole, fish-bowl, sphere, sinus-highdim)");
}

std::string to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::circle: return "circle";
    case ManifoldKind::helix: return "helix";
    case ManifoldKind::swiss_roll_hole: return "swiss-roll-with-hole";
    case ManifoldKind::fish_bowl: return "fish-bowl";
    case ManifoldKind::sphere: return "sphere";
    case ManifoldKind::sinus_highdim: return "sinus-highdim";
  }
  return "unknown";
}

PointCloud sample_manifold(ManifoldKind kind, Eigen::Index n, const ManifoldParams& p, std::uint64_t seed) {
  using std::numbers::pi;
  if (n < 2) throw std::invalid_argument("sample count must be at least 2");

  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix x;

  switch (kind) {
    case ManifoldKind::circle: {
      require_positive(p.radius, "radius");
      x.resize(n, 2);
      for (Eigen::Index i = 0; i < n; ++i) {
        double theta = 2.0 * pi * unit(rng);
        x(i, 0) = p.radius * std::cos(theta);
        x(i, 1) = p.radius * std::sin(theta);
      }
      break;
    }
    case ManifoldKind::helix: {
      require_positive(p.radius, "radius");
      require_positive(p.helix_pitch, "helix_pitch");
      require_positive(p.helix_turns, "helix_turns");
      x.resize(n, 3);
      for (Eigen::Index i = 0; i < n; ++i) {
        double t = 2.0 * pi * p.helix_turns * unit(rng);
        x(i, 0) = p.radius * std::cos(t);
        x(i, 1) = p.radius * std::sin(t);
        x(i, 2) = p.helix_pitch * t;
      }
      break;
    }
    case ManifoldKind::swiss_roll_hole: {
      require_positive(p.roll_t_min, "roll_t_min");
      require_positive(p.roll_t_max - p.roll_t_min, "roll_t_max - roll_t_min");
      require_positive(p.roll_height, "roll_height");
      require_positive(p.hole_radius, "hole_radius");
      x.resize(n, 3);
      for (Eigen::Index i = 0; i < n;) {
        double t = p.roll_t_min + (p.roll_t_max - p.roll_t_min) * unit(rng);
        double h = p.roll_height * unit(rng);
        if (std::hypot(t - p.hole_t, h - p.hole_h) < p.hole_radius) continue;
        x(i, 0) = t * std::cos(t);
        x(i, 1) = h;
        x(i, 2) = t * std::sin(t);
        ++i;
      }
      break;
    }
    case ManifoldKind::fish_bowl: {
      require_positive(p.radius, "radius");
      require_positive(p.cap_angle, "cap_angle");
      if (p.cap_angle >= pi) throw std::invalid_argument("shape parameter 'cap_angle' must be below pi");
      x.resize(n, 3);
      for (Eigen::Index i = 0; i < n; ++i) {
        double polar = p.cap_angle + (pi - p.cap_angle) * unit(rng);
        double azimuth = 2.0 * pi * unit(rng);
        x(i, 0) = p.radius * std::sin(polar) * std::cos(azimuth);
        x(i, 1) = p.radius * std::sin(polar) * std::sin(azimuth);
        x(i, 2) = p.radius * std::cos(polar);
      }
      break;
    }
    case ManifoldKind::sphere: {
      require_positive(p.radius, "radius");
      std::normal_distribution<double> normal(0.0, 1.0);
      x.resize(n, 3);
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Vector3d v;
        do {
          v = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
        } while (v.norm() < 1e-12);
        x.row(i) = p.radius * v.normalized();
      }
      break;
    }
    case ManifoldKind::sinus_highdim: {
      require_positive(p.sinus_length, "sinus_length");
      require_positive(p.sinus_amplitude, "sinus_amplitude");
      if (p.sinus_dim < 2) throw std::invalid_argument("shape parameter 'sinus_dim' must be at least 2");
      const Eigen::Index dim = p.sinus_dim;
      Matrix planar(n, 2);
      for (Eigen::Index i = 0; i < n; ++i) {
        double t = p.sinus_length * unit(rng);
        planar(i, 0) = t;
        planar(i, 1) = p.sinus_amplitude * std::sin(t);
      }
      // Fixed orthonormal frame: Q factor of a seeded Gaussian matrix.
      auto rot_rng = make_rng(p.rotation_seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      Matrix gauss(dim, dim);
      for (Eigen::Index j = 0; j < dim; ++j)
        for (Eigen::Index i = 0; i < dim; ++i) gauss(i, j) = normal(rot_rng);
      Eigen::HouseholderQR<Matrix> qr(gauss);
      Matrix q = qr.householderQ() * Matrix::Identity(dim, 2);
      x = planar * q.transpose();
      break;
    }
  }

  Matrix truth = x;
  return PointCloud(std::move(x), std::move(truth));
}

PointCloud add_gaussian_noise(const PointCloud& pc, double variance, std::uint64_t seed) {
  if (!(variance >= 0.0) || !std::isfinite(variance))
    throw std::invalid_argument("noise variance must be non-negative");
  Matrix noisy = pc.coords();
  if (variance > 0.0) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(variance));
    for (Eigen::Index i = 0; i < noisy.rows(); ++i)
      for (Eigen::Index r = 0; r < noisy.cols(); ++r) noisy(i, r) += normal(rng);
  }
  return PointCloud(std::move(noisy), pc.coords());
}

double rmse(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("rmse: shape mismatch");
  if (a.size() == 0) throw std::invalid_argument("rmse: empty input");
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

double rmse(const PointCloud& a, const PointCloud& b) { return rmse(a.coords(), b.coords()); }

Matrix load_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");

  std::vector<double> values;
  Eigen::Index cols = -1;
  Eigen::Index rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    Eigen::Index fields = 0;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      std::string_view cell(line.data() + pos, (comma == std::string::npos ? line.size() : comma) - pos);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double v = 0.0;
      auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || end != cell.data() + cell.size() || !std::isfinite(v))
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": non-numeric cell '" +
                                 std::string(cell) + "'");
      values.push_back(v);
      ++fields;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (cols < 0) {
      cols = fields;
    } else if (fields != cols) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": ragged row (" +
                               std::to_string(fields) + " fields, expected " + std::to_string(cols) + ")");
    }
    ++rows;
  }
  if (rows == 0) throw std::runtime_error(path.string() + ": no points");

  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return m;
}

PointCloud load_csv(const std::filesystem::path& path) { return PointCloud(load_matrix_csv(path)); }

void save_csv(const Eigen::Ref<const Matrix>& coords, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  char buf[64];
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    for (Eigen::Index j = 0; j < coords.cols(); ++j) {
      if (j > 0) out.put(',');
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), coords(i, j), std::chars_format::general, 17);
      out.write(buf, end - buf);
    }
    out.put('\n');
  }
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void save_csv(const PointCloud& pc, const std::filesystem::path& path) { save_csv(pc.coords(), path); }

std::filesystem::path truth_sibling(const std::filesystem::path& path) {
  auto out = path;
  out.replace_extension(".truth" + path.extension().string());
  return out;
}

double diameter(const Eigen::Ref<const Matrix>& coords) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < coords.rows(); ++i)
    for (Eigen::Index j = i + 1; j < coords.rows(); ++j)
      best = std::max(best, (coords.row(i) - coords.row(j)).squaredNorm());
  return std::sqrt(best);
}

PointCloud translate(const PointCloud& pc, double offset) {
  Matrix coords = pc.coords().array() + offset;
  std::optional<Matrix> truth;
  if (pc.has_ground_truth()) truth = Matrix(pc.ground_truth().array() + offset);
  return PointCloud(std::move(coords), std::move(truth));
}

}  // namespace mfd
