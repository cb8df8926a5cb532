#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <mfd/denoise.hpp>
#include <mfd/graph.hpp>
#include <mfd/point_cloud.hpp>
#include <mfd/sgw.hpp>

namespace mfd {

// Sampling geometry of a manifold: reach tau, covering radius T and the
// smoothness constant C of the neighbor-difference bound delta = 4 C T.
struct ManifoldMeta {
  double tau = 1.0;
  double covering_radius = 0.0;
  double c_const = 1.0;

  double delta() const { return 4.0 * c_const * covering_radius; }
  bool resolution_ok() const { return covering_radius / tau < 0.25; }
  void validate() const;
};

// max_i min_{j != i} |x_i - x_j|: the sample resolution, used as the covering-radius estimate.
double estimate_covering_radius(const Eigen::Ref<const Matrix>& coords);
double estimate_covering_radius(const PointCloud& pc);

// Number of (edge, dimension) pairs with |f_r(i) - f_r(j)| > delta.
std::size_t check_lemma1(const PointCloud& pc, const WeightedGraph& g, const ManifoldMeta& meta);

// f^T L f.
double laplacian_form(const Laplacian& l, const Eigen::Ref<const Vector>& f);

struct BoundCheck {
  double value = 0.0;
  double bound = 0.0;
  bool satisfied = false;
};

// f^T L f / |f|^2 against delta * lambda_N / mean(f)^2. Throws for zero-mean f.
BoundCheck check_lemma2(const Laplacian& l, const Eigen::Ref<const Vector>& f, const ManifoldMeta& meta);

// sum over positive eigenvalues of g(s lambda)^2 / (s^2 lambda).
double compute_cs(const FilterBank& fb, const Eigen::Ref<const Vector>& eigenvalues, double s);

struct ScaleRecord {
  double scale = 0.0;
  double empirical = 0.0;
  double bound = 0.0;
  double c_s = 0.0;
  bool satisfied = false;
};

struct BandBoundReport {
  std::vector<ScaleRecord> scales;  // in filter-bank order, s_1 > ... > s_J
  double c_f = 0.0;                 // squared signal mean
  double laplacian_form_value = 0.0;  // normalized, f^T L f / |f|^2
  double lambda_n = 0.0;
  std::vector<double> scaled_cs;  // s^2 C_s / s per scale
  bool all_satisfied() const;
};

// Wavelet band energies of f against s^2 delta lambda_N / C_f * C_s at every scale.
BandBoundReport check_theorem1(const FilterBank& fb, const EigenSystem& es, const Eigen::Ref<const Vector>& f,
                              const ManifoldMeta& meta);
ScaleRecord check_theorem1(const FilterBank& fb, const EigenSystem& es, const Eigen::Ref<const Vector>& f,
                           const ManifoldMeta& meta, double s);

struct NoiseRecord {
  double scale = 0.0;
  double mc_mean_energy = 0.0;
  double mc_std_err = 0.0;
  double noise_bound = 0.0;        // s^2 sigma^2 C_s
  double exact_expectation = 0.0;  // sigma^2 sum_l g(s lambda_l)^2, for reference
  bool satisfied = false;          // mean <= bound + 3 stderr
};

struct NoiseEnergyReport {
  std::vector<NoiseRecord> scales;
  std::size_t vertex_violations = 0;  // (scale, vertex) pairs with |mean| > 3 stderr
  std::size_t vertex_tests = 0;
  double max_mean_over_stderr = 0.0;
  Matrix vertex_mean;                  // J x N mean wavelet coefficient
  Matrix vertex_std_err;               // J x N
  std::vector<double> adjacent_ratios; // energy(s_j+1) / energy(s_j)
  bool all_satisfied() const;
};

// Monte Carlo over i.i.d. N(0, sigma2) vertex signals; trial t draws from stream (seed, t).
NoiseEnergyReport check_lemma3(const FilterBank& fb, const EigenSystem& es, double sigma2, std::size_t trials,
                          std::uint64_t seed);

struct NoisyBoundDimension {
  std::vector<ScaleRecord> scales;  // empirical noisy energy vs noisy bound, c_s is C~_s
  double c_f_tilde = 0.0;
  std::vector<double> zero_noise_bounds;  // the bound with q at its noise-free floor
  std::vector<double> clean_bounds;    // noise-free form on the clean graph
};

struct NoisyBoundReport {
  double q_xi = 0.0;
  double q_floor = 0.0;  // 2 * 4 C^2 T^2 / tau
  double max_xi = 0.0;
  std::size_t d_max2 = 0;        // clean graph
  std::size_t d_max2_noisy = 0;  // noisy graph, for information
  double lambda_n = 0.0;         // clean graph
  double lambda_n_noisy = 0.0;
  bool outside_bounded_regime = false;  // q > tau
  bool noise_exceeds_q = false;         // max xi > q / 2
  std::vector<NoisyBoundDimension> dimensions;
  bool all_satisfied() const;
};

// `noisy` must carry its ground truth. Both graphs use k neighbors and `sigma`.
NoisyBoundReport check_theorem2(const PointCloud& noisy, std::size_t k, const ManifoldMeta& meta,
                              std::size_t j_scales = 5, SigmaMode sigma = SigmaMode::automatic());

struct EnergyProfile {
  std::vector<double> fractions;
  bool all_zero = false;
};

EnergyProfile band_energy_profile(const WaveletCoefficients& coeffs);

// Unit radial directions; the normals of a sphere centered at the origin.
Matrix sphere_normals(const Eigen::Ref<const Matrix>& coords);

// Mean angle in degrees between the smallest principal axis of each point's
// k-point neighborhood (the point included) and the given normal.
double local_pca_tangent_error(const Eigen::Ref<const Matrix>& coords, const Eigen::Ref<const Matrix>& normals,
                               std::size_t k);

struct BestK {
  std::size_t k = 0;
  double error = 0.0;
};

BestK best_local_pca_error(const Eigen::Ref<const Matrix>& coords, const Eigen::Ref<const Matrix>& normals,
                           const std::vector<std::size_t>& k_values);

// Local-PCA normal error on a noisy sphere before and after denoising.
struct TangentStudyConfig {
  Eigen::Index n = 1000;
  double radius = 2.7;  // sets the noise-to-curvature ratio; fitted on the undenoised errors
  std::vector<double> noise_variance = {0.0, 0.05, 0.1, 0.2, 0.3};
  std::vector<std::size_t> pca_k = {20, 30, 40, 50, 60, 70, 80};
  std::vector<std::size_t> mfd_k = {20, 30, 40};
  std::vector<double> mfd_thresholds = {0.95, 0.99};
  std::uint64_t sample_seed = 7;
  std::uint64_t noise_seed = 11;
};

struct TangentStudyRow {
  double noise_variance = 0.0;
  BestK before;
  BestK after;  // k == 0 when not denoised (noise-free row)
  std::size_t mfd_k = 0;
  double mfd_threshold = 0.0;
};

// Normals are the radial directions of the evaluated points. The "after" column is
// the best over the MFD grid, each denoised cloud scored by its best PCA k.
std::vector<TangentStudyRow> tangent_space_study(const TangentStudyConfig& cfg, bool denoise = true);

struct SweepRow {
  std::size_t k = 0;
  double rmse = 0.0;
};

// mfd_denoise at every k with the rest of `cfg`, scored against the ground truth.
std::vector<SweepRow> k_sweep(const PointCloud& noisy, const std::vector<std::size_t>& k_values,
                              const DenoiseConfig& cfg);
void save_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

// Everything the analyze command reports for one cloud.
struct TheoryReport {
  ManifoldMeta meta;
  std::size_t k = 0;
  std::size_t neighbor_violations = 0;
  std::vector<BoundCheck> gradient;         // per dimension
  std::vector<BandBoundReport> band_bounds;  // per dimension
  std::optional<NoiseEnergyReport> noise_energy;
  std::optional<NoisyBoundReport> noisy_bounds;
};

nlohmann::json to_json(const ManifoldMeta& meta);
nlohmann::json to_json(const TheoryReport& report);

}  // namespace mfd
