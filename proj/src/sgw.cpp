#include <mfd/sgw.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

namespace mfd {

namespace {

struct Cubic {
  double c0, c1, c2, c3;  // in u = x - x1
  double operator()(double u) const { return c0 + u * (c1 + u * (c2 + u * c3)); }
};

// Hermite cubic through (x1, x1^alpha) with slope alpha x1^(alpha-1) and (x2, 1) with slope -beta / x2.
Cubic hermite_cubic(const KernelParams& k) {
  const double d = k.x2 - k.x1;
  const double v1 = std::pow(k.x1, k.alpha);
  const double s1 = k.alpha * std::pow(k.x1, k.alpha - 1.0);
  const double v2 = 1.0;
  const double s2 = -k.beta / k.x2;
  const double secant = (v2 - v1) / d;
  return {v1, s1, (3.0 * secant - 2.0 * s1 - s2) / d, (s1 + s2 - 2.0 * secant) / (d * d)};
}

void validate(const KernelParams& k) {
  if (!(k.alpha > 0.0 && k.beta > 0.0 && k.x1 > 0.0 && k.x2 > k.x1))
    throw std::invalid_argument("kernel needs alpha, beta > 0 and 0 < x1 < x2");
}

}  // namespace

FilterBank::FilterBank(double lambda_max, std::vector<double> scales, KernelParams kernel, double gamma,
                       double lambda_cut)
  : lambda_max_(lambda_max)
  , scales_(std::move(scales))
  , kernel_(kernel)
  , gamma_(gamma)
  , lambda_cut_(lambda_cut) {
  if (!(lambda_max_ > 0.0)) throw std::invalid_argument("lambda_max must be positive");
  if (scales_.empty()) throw std::invalid_argument("filter bank needs at least one scale");
  for (double s : scales_)
    if (!(s > 0.0)) throw std::invalid_argument("scales must be positive");
  validate(kernel_);
  if (!(gamma_ > 0.0 && lambda_cut_ > 0.0))
    throw std::invalid_argument("scaling function needs gamma > 0 and lambda_cut > 0");
  auto cubic = hermite_cubic(kernel_);
  c0_ = cubic.c0;
  c1_ = cubic.c1;
  c2_ = cubic.c2;
  c3_ = cubic.c3;
}

double FilterBank::wavelet_kernel(double x) const {
  x = std::max(x, 0.0);
  if (x < kernel_.x1) return std::pow(x, kernel_.alpha);
  if (x > kernel_.x2) return std::pow(kernel_.x2 / x, kernel_.beta);
  const double u = x - kernel_.x1;
  return c0_ + u * (c1_ + u * (c2_ + u * c3_));
}

double FilterBank::scaling_kernel(double x) const {
  const double r = std::max(x, 0.0) / lambda_cut_;
  return gamma_ * std::exp(-(r * r) * (r * r));
}

double FilterBank::band_response(std::size_t band, double lambda) const {
  if (band == 0) return scaling_kernel(lambda);
  return wavelet_kernel(scales_.at(band - 1) * lambda);
}

double kernel_peak(const KernelParams& kernel) {
  validate(kernel);
  // g rises to x1^alpha below x1 and falls from 1 above x2, so the peak is on the cubic.
  const Cubic cubic = hermite_cubic(kernel);
  const double d = kernel.x2 - kernel.x1;
  double best = std::max(cubic(0.0), cubic(d));
  // Stationary points: roots of c1 + 2 c2 u + 3 c3 u^2 inside (0, d).
  const double qa = 3.0 * cubic.c3, qb = 2.0 * cubic.c2, qc = cubic.c1;
  std::vector<double> roots;
  if (std::abs(qa) < 1e-300) {
    if (qb != 0.0) roots.push_back(-qc / qb);
  } else {
    double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      roots.push_back((-qb + std::sqrt(disc)) / (2.0 * qa));
      roots.push_back((-qb - std::sqrt(disc)) / (2.0 * qa));
    }
  }
  for (double u : roots)
    if (u > 0.0 && u < d) best = std::max(best, cubic(u));
  return best;
}

FilterBank design_filterbank(double lambda_max, std::size_t j_scales, const FilterDesign& design) {
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max))
    throw std::invalid_argument("lambda_max must be positive");
  if (j_scales < 1) throw std::invalid_argument("at least one wavelet scale is required");
  if (!(design.k_design > 1.0)) throw std::invalid_argument("k_design must exceed 1");
  if (!(design.lowpass_factor > 0.0)) throw std::invalid_argument("lowpass_factor must be positive");

  const double lambda_min = lambda_max / design.k_design;
  const double s_coarse = design.kernel.x2 / lambda_min;
  const double s_fine = design.kernel.x2 / lambda_max;
  std::vector<double> scales(j_scales);
  if (j_scales == 1) {
    scales[0] = s_fine;
  } else {
    const double step = (std::log(s_fine) - std::log(s_coarse)) / static_cast<double>(j_scales - 1);
    for (std::size_t j = 0; j < j_scales; ++j) scales[j] = std::exp(std::log(s_coarse) + step * static_cast<double>(j));
    scales.front() = s_coarse;
    scales.back() = s_fine;
  }
  return FilterBank(lambda_max, std::move(scales), design.kernel, kernel_peak(design.kernel),
                    design.lowpass_factor * lambda_min);
}

EigenSystem eigensystem(const Laplacian& l, Eigen::Index cap) {
  if (l.size() > cap)
    throw std::length_error("dense eigensolve refused for " + std::to_string(l.size()) + " vertices (cap " +
                            std::to_string(cap) + "); use the Chebyshev transform instead");
  Matrix dense = Matrix(l.matrix);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(dense);
  if (solver.info() != Eigen::Success) throw std::runtime_error("symmetric eigensolve failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Vector gft(const EigenSystem& es, const Eigen::Ref<const Vector>& f) {
  if (f.size() != es.eigenvectors.rows()) throw std::invalid_argument("gft: signal length mismatch");
  return es.eigenvectors.transpose() * f;
}

WaveletCoefficients forward_exact(const FilterBank& fb, const EigenSystem& es, const Eigen::Ref<const Vector>& f) {
  const Vector spectrum = gft(es, f);
  const Eigen::Index n = spectrum.size();
  const auto bands = static_cast<Eigen::Index>(fb.band_count());
  Matrix filtered(n, bands);
  for (Eigen::Index b = 0; b < bands; ++b)
    for (Eigen::Index l = 0; l < n; ++l)
      filtered(l, b) = fb.band_response(static_cast<std::size_t>(b), es.eigenvalues(l)) * spectrum(l);
  return {(es.eigenvectors * filtered).transpose()};
}

double ChebyshevSeries::operator()(double x) const {
  // Clenshaw on y in [-1, 1].
  const double y = (2.0 * x - lambda_max) / lambda_max;
  double b1 = 0.0, b2 = 0.0;
  for (Eigen::Index k = coefficients.size() - 1; k >= 1; --k) {
    double b0 = 2.0 * y * b1 - b2 + coefficients(k);
    b2 = b1;
    b1 = b0;
  }
  return y * b1 - b2 + 0.5 * coefficients(0);
}

namespace {

double grid_sup_error(const ChebyshevSeries& series, const std::function<double(double)>& kernel) {
  constexpr int grid = 10000;
  double worst = 0.0;
  for (int i = 0; i < grid; ++i) {
    double x = series.lambda_max * static_cast<double>(i) / (grid - 1);
    worst = std::max(worst, std::abs(series(x) - kernel(x)));
  }
  return worst;
}

}  // namespace

ChebyshevSeries chebyshev_coefficients(const std::function<double(double)>& kernel, int order, double lambda_max) {
  using std::numbers::pi;
  if (order < 1) throw std::invalid_argument("Chebyshev order must be at least 1");
  if (!(lambda_max > 0.0)) throw std::invalid_argument("Chebyshev interval needs lambda_max > 0");

  const int nodes = 4 * (order + 1);
  const double a = 0.5 * lambda_max;
  std::vector<double> theta(static_cast<std::size_t>(nodes)), values(static_cast<std::size_t>(nodes));
  for (int q = 0; q < nodes; ++q) {
    theta[static_cast<std::size_t>(q)] = pi * (q + 0.5) / nodes;
    values[static_cast<std::size_t>(q)] = kernel(a * std::cos(theta[static_cast<std::size_t>(q)]) + a);
  }

  ChebyshevSeries series;
  series.lambda_max = lambda_max;
  series.coefficients.resize(order + 1);
  for (int k = 0; k <= order; ++k) {
    double sum = 0.0;
    for (int q = 0; q < nodes; ++q)
      sum += values[static_cast<std::size_t>(q)] * std::cos(k * theta[static_cast<std::size_t>(q)]);
    series.coefficients(k) = 2.0 * sum / nodes;
  }
  series.grid_error = grid_sup_error(series, kernel);
  return series;
}

std::vector<double> ChebyshevBank::band_errors() const {
  std::vector<double> out;
  for (const auto& b : bands) out.push_back(b.grid_error);
  return out;
}

ChebyshevBank approximate(const FilterBank& fb, int order) {
  ChebyshevBank bank;
  bank.lambda_max = fb.lambda_max();
  bank.order = order;
  for (std::size_t b = 0; b < fb.band_count(); ++b)
    bank.bands.push_back(
        chebyshev_coefficients([&fb, b](double x) { return fb.band_response(b, x); }, order, fb.lambda_max()));
  return bank;
}

namespace {

// Runs the shifted Chebyshev recurrence on `signals` and hands each T_k(L~) X to `consume(k, tk)`.
template <typename Consume>
void chebyshev_recurrence(const Laplacian& l, double lambda_max, Eigen::Index order,
                          const Eigen::Ref<const Matrix>& signals, Consume&& consume) {
  if (signals.rows() != l.size()) throw std::invalid_argument("signal length does not match the Laplacian");
  const double a = 0.5 * lambda_max;
  Matrix prev = signals;
  consume(0, prev);
  if (order < 1) return;
  Matrix cur = (l.matrix * prev - a * prev) / a;
  consume(1, cur);
  Matrix next(signals.rows(), signals.cols());
  for (Eigen::Index k = 2; k <= order; ++k) {
    next.noalias() = l.matrix * cur;
    next = (2.0 / a) * (next - a * cur) - prev;
    prev.swap(cur);
    cur.swap(next);
    consume(k, cur);
  }
}

}  // namespace

Matrix apply_chebyshev(const ChebyshevSeries& series, const Laplacian& l, const Eigen::Ref<const Matrix>& signals) {
  Matrix out = Matrix::Zero(signals.rows(), signals.cols());
  chebyshev_recurrence(l, series.lambda_max, series.order(), signals, [&](Eigen::Index k, const Matrix& tk) {
    out += (k == 0 ? 0.5 : 1.0) * series.coefficients(k) * tk;
  });
  return out;
}

std::vector<WaveletCoefficients> forward_chebyshev_block(const ChebyshevBank& bank, const Laplacian& l,
                                                         const Eigen::Ref<const Matrix>& signals) {
  const auto bands = static_cast<Eigen::Index>(bank.bands.size());
  std::vector<Matrix> acc(static_cast<std::size_t>(bands), Matrix::Zero(signals.rows(), signals.cols()));
  chebyshev_recurrence(l, bank.lambda_max, bank.order, signals, [&](Eigen::Index k, const Matrix& tk) {
    for (Eigen::Index b = 0; b < bands; ++b) {
      const auto& c = bank.bands[static_cast<std::size_t>(b)].coefficients;
      acc[static_cast<std::size_t>(b)] += (k == 0 ? 0.5 : 1.0) * c(k) * tk;
    }
  });

  std::vector<WaveletCoefficients> out(static_cast<std::size_t>(signals.cols()));
  for (Eigen::Index r = 0; r < signals.cols(); ++r) {
    Matrix m(bands, signals.rows());
    for (Eigen::Index b = 0; b < bands; ++b) m.row(b) = acc[static_cast<std::size_t>(b)].col(r).transpose();
    out[static_cast<std::size_t>(r)].bands = std::move(m);
  }
  return out;
}

WaveletCoefficients forward_chebyshev(const ChebyshevBank& bank, const Laplacian& l, const Eigen::Ref<const Vector>& f) {
  return std::move(forward_chebyshev_block(bank, l, Matrix(f)).front());
}

WaveletCoefficients forward_chebyshev(const FilterBank& fb, const Laplacian& l, const Eigen::Ref<const Vector>& f,
                                      int order) {
  return forward_chebyshev(approximate(fb, order), l, f);
}

namespace {

// Chebyshev series of sum_b p_b(x)^2, exact via T_i T_j = (T_{i+j} + T_{|i-j|}) / 2.
ChebyshevSeries frame_operator_series(const ChebyshevBank& bank) {
  const Eigen::Index m = bank.order;
  Vector plain = Vector::Zero(2 * m + 1);  // coefficients without the halved constant term
  for (const auto& band : bank.bands) {
    Vector a = band.coefficients;
    a(0) *= 0.5;
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (a(i) == 0.0) continue;
      for (Eigen::Index j = 0; j <= m; ++j) {
        double p = 0.5 * a(i) * a(j);
        plain(i + j) += p;
        plain(std::abs(i - j)) += p;
      }
    }
  }
  ChebyshevSeries series;
  series.lambda_max = bank.lambda_max;
  series.coefficients = plain;
  series.coefficients(0) *= 2.0;
  return series;
}

}  // namespace

Vector inverse(const ChebyshevBank& bank, const Laplacian& l, const WaveletCoefficients& coeffs,
               InverseOptions options) {
  if (coeffs.bands.rows() != static_cast<Eigen::Index>(bank.bands.size()) || coeffs.bands.cols() != l.size())
    throw std::invalid_argument("coefficient block must be (J+1) x N");
  if (!(options.tol > 0.0)) throw std::invalid_argument("CG tolerance must be positive");

  const Eigen::Index n = l.size();
  Vector rhs = Vector::Zero(n);
  for (std::size_t b = 0; b < bank.bands.size(); ++b) {
    auto row = coeffs.bands.row(static_cast<Eigen::Index>(b));
    if (row.isZero(0.0)) continue;
    rhs += apply_chebyshev(bank.bands[b], l, row.transpose());
  }
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return Vector::Zero(n);

  const ChebyshevSeries frame = frame_operator_series(bank);
  auto apply = [&](const Vector& v) -> Vector { return apply_chebyshev(frame, l, v); };

  Vector x = Vector::Zero(n);
  Vector r = rhs;
  Vector p = r;
  double rr = r.squaredNorm();
  for (int it = 0; it < options.max_iterations; ++it) {
    Vector ap = apply(p);
    double pap = p.dot(ap);
    if (!(pap > 0.0)) throw ConvergenceError("frame operator is not positive definite", std::sqrt(rr) / rhs_norm, it);
    double alpha = rr / pap;
    x += alpha * p;
    r -= alpha * ap;
    double rr_next = r.squaredNorm();
    if (std::sqrt(rr_next) <= options.tol * rhs_norm) return x;
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  throw ConvergenceError("conjugate gradients did not converge in " + std::to_string(options.max_iterations) +
                             " iterations (relative residual " + std::to_string(std::sqrt(rr) / rhs_norm) + ")",
                         std::sqrt(rr) / rhs_norm, options.max_iterations);
}

Vector inverse(const FilterBank& fb, const Laplacian& l, const WaveletCoefficients& coeffs, int order, double tol) {
  return inverse(approximate(fb, order), l, coeffs, {tol, 500});
}

void save_coefficients(const WaveletCoefficients& coeffs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "band,vertex,value\n";
  char buf[64];
  for (Eigen::Index b = 0; b < coeffs.bands.rows(); ++b) {
    for (Eigen::Index v = 0; v < coeffs.bands.cols(); ++v) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), coeffs.bands(b, v), std::chars_format::general, 17);
      out << b << ',' << v << ',';
      out.write(buf, end - buf);
      out.put('\n');
    }
  }
}

}  // namespace mfd
