#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace mfd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// N x D sample matrix. Column r is the coordinate graph signal of dimension r.
// An optional noiseless twin with identical shape and row order travels along.
class PointCloud {
 public:
  explicit PointCloud(Matrix coords, std::optional<Matrix> ground_truth = std::nullopt);

  const Matrix& coords() const { return coords_; }
  Eigen::Index n_points() const { return coords_.rows(); }
  Eigen::Index ambient_dim() const { return coords_.cols(); }

  bool has_ground_truth() const { return ground_truth_.has_value(); }
  const Matrix& ground_truth() const;

  // Same ground truth, new coordinates.
  PointCloud with_coords(Matrix coords) const;

 private:
  Matrix coords_;
  std::optional<Matrix> ground_truth_;
};

enum class ManifoldKind { circle, helix, swiss_roll_hole, fish_bowl, sphere, sinus_highdim };

ManifoldKind parse_manifold_kind(std::string_view name);
std::string to_string(ManifoldKind kind);

// Shape parameters. Only the fields relevant to the chosen kind are read.
struct ManifoldParams {
  double radius = 1.0;  // circle, helix, sphere, fish bowl

  double helix_pitch = 0.5;  // z advance per radian
  double helix_turns = 2.0;

  // Swiss roll (t cos t, h, t sin t), t in [t_min, t_max], h in [0, height],
  // with a disc removed from the (t, h) rectangle.
  double roll_t_min = 1.5 * 3.14159265358979323846;
  double roll_t_max = 4.5 * 3.14159265358979323846;
  double roll_height = 21.0;
  double hole_t = 3.0 * 3.14159265358979323846;
  double hole_h = 10.5;
  double hole_radius = 3.0;

  // Fish bowl: sphere with the cap of polar half-angle cap_angle removed around +z.
  double cap_angle = 3.14159265358979323846 / 4.0;

  // Sinus: (t, amplitude * sin t), t in [0, sinus_length], rotated into sinus_dim dimensions.
  double sinus_length = 4.0 * 3.14159265358979323846;
  double sinus_amplitude = 1.0;
  Eigen::Index sinus_dim = 200;
  std::uint64_t rotation_seed = 20170131;
};

PointCloud sample_manifold(ManifoldKind kind, Eigen::Index n, const ManifoldParams& params,
                           std::uint64_t seed);

// coords + N(0, variance) per entry; ground truth becomes the input coordinates.
PointCloud add_gaussian_noise(const PointCloud& pc, double variance, std::uint64_t seed);

// Per-entry root mean square difference, averaged over N * D entries.
double rmse(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b);
double rmse(const PointCloud& a, const PointCloud& b);

PointCloud load_csv(const std::filesystem::path& path);
Matrix load_matrix_csv(const std::filesystem::path& path);
void save_csv(const Eigen::Ref<const Matrix>& coords, const std::filesystem::path& path);
void save_csv(const PointCloud& pc, const std::filesystem::path& path);

// "dir/name.csv" -> "dir/name.truth.csv"
std::filesystem::path truth_sibling(const std::filesystem::path& path);

// Every coordinate shifted by offset (theory checks need nonzero coordinate means).
PointCloud translate(const PointCloud& pc, double offset);
double diameter(const Eigen::Ref<const Matrix>& coords);

}  // namespace mfd
