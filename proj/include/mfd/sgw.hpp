#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include <mfd/graph.hpp>

namespace mfd {

// Band-pass generating kernel: x^alpha below x1, x2^beta * x^-beta above x2,
// and the cubic matching value and slope at both knots in between.
struct KernelParams {
  double alpha = 2.0;
  double beta = 2.0;
  double x1 = 1.0;
  double x2 = 2.0;
};

struct FilterDesign {
  KernelParams kernel;
  double k_design = 20.0;        // lambda_max / lambda_min ratio the scales cover
  double lowpass_factor = 0.6;   // scaling-function width as a fraction of lambda_min
};

class FilterBank {
 public:
  FilterBank(double lambda_max, std::vector<double> scales, KernelParams kernel, double gamma, double lambda_cut);

  double wavelet_kernel(double x) const;  // g
  double scaling_kernel(double x) const;  // h

  // Band 0 is the scaling band h(lambda); band j >= 1 is g(s_j lambda).
  double band_response(std::size_t band, double lambda) const;
  std::size_t band_count() const { return scales_.size() + 1; }
  std::size_t scale_count() const { return scales_.size(); }

  const std::vector<double>& scales() const { return scales_; }  // s_1 > ... > s_J
  const KernelParams& kernel() const { return kernel_; }
  double lambda_max() const { return lambda_max_; }
  double gamma() const { return gamma_; }
  double lambda_cut() const { return lambda_cut_; }

 private:
  double lambda_max_;
  std::vector<double> scales_;
  KernelParams kernel_;
  double gamma_;
  double lambda_cut_;
  double c0_, c1_, c2_, c3_;  // cubic in (x - x1)
};

// Scales log-spaced from x2 * k_design / lambda_max down to x2 / lambda_max;
// h(x) = gamma * exp(-(x / (lowpass_factor * lambda_max / k_design))^4), gamma = max g.
FilterBank design_filterbank(double lambda_max, std::size_t j_scales, const FilterDesign& design = {});

// max over x > 0 of the wavelet kernel (attained on [x1, x2]).
double kernel_peak(const KernelParams& kernel);

struct EigenSystem {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // orthonormal columns
};

inline constexpr Eigen::Index kDenseEigenCap = 3000;

// Full dense symmetric eigendecomposition. Refuses graphs above `cap` vertices.
EigenSystem eigensystem(const Laplacian& l, Eigen::Index cap = kDenseEigenCap);

Vector gft(const EigenSystem& es, const Eigen::Ref<const Vector>& f);

// (J+1) x N coefficients: row 0 is the scaling band, row j the wavelet band of scale s_j.
struct WaveletCoefficients {
  Matrix bands;

  Eigen::Index n() const { return bands.cols(); }
  Eigen::Index j_count() const { return bands.rows() - 1; }
  auto scaling_band() const { return bands.row(0); }
  auto wavelet_band(Eigen::Index j) const { return bands.row(j); }  // j in [1, J]
  Vector band_energies() const { return bands.rowwise().squaredNorm(); }
};

WaveletCoefficients forward_exact(const FilterBank& fb, const EigenSystem& es, const Eigen::Ref<const Vector>& f);

// Truncated Chebyshev series p(x) = c_0 / 2 + sum_k c_k T_k((2x - lambda_max) / lambda_max).
struct ChebyshevSeries {
  Vector coefficients;
  double lambda_max = 0.0;
  double grid_error = 0.0;  // sup |p - kernel| on a 10000-point grid of [0, lambda_max]

  double operator()(double x) const;
  Eigen::Index order() const { return coefficients.size() - 1; }
};

ChebyshevSeries chebyshev_coefficients(const std::function<double(double)>& kernel, int order, double lambda_max);

// Chebyshev series of every band of a filter bank at a common order.
struct ChebyshevBank {
  std::vector<ChebyshevSeries> bands;
  double lambda_max = 0.0;
  int order = 0;

  std::vector<double> band_errors() const;
};

ChebyshevBank approximate(const FilterBank& fb, int order);

// p(L) applied to each column of `signals`, using only Laplacian-vector products.
Matrix apply_chebyshev(const ChebyshevSeries& series, const Laplacian& l, const Eigen::Ref<const Matrix>& signals);

WaveletCoefficients forward_chebyshev(const FilterBank& fb, const Laplacian& l, const Eigen::Ref<const Vector>& f,
                                      int order);
WaveletCoefficients forward_chebyshev(const ChebyshevBank& bank, const Laplacian& l, const Eigen::Ref<const Vector>& f);

// Batched forward transform of an N x D block; one shared recurrence per column block.
std::vector<WaveletCoefficients> forward_chebyshev_block(const ChebyshevBank& bank, const Laplacian& l,
                                                         const Eigen::Ref<const Matrix>& signals);

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
    : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

struct InverseOptions {
  double tol = 1e-8;
  int max_iterations = 500;
};

// Least-squares synthesis: solves (sum_b T_b^2) f = sum_b T_b c_b by conjugate
// gradients, with every T_b the Chebyshev polynomial of L used by the forward transform.
Vector inverse(const ChebyshevBank& bank, const Laplacian& l, const WaveletCoefficients& coeffs,
               InverseOptions options = {});
Vector inverse(const FilterBank& fb, const Laplacian& l, const WaveletCoefficients& coeffs, int order,
               double tol);

// "band,vertex,value" rows for plotting.
void save_coefficients(const WaveletCoefficients& coeffs, const std::filesystem::path& path);

}  // namespace mfd
