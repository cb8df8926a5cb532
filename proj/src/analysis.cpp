#include <mfd/analysis.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include <mfd/knn.hpp>
#include <mfd/parallel.hpp>

#include "rng.hpp"

namespace mfd {

void ManifoldMeta::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(covering_radius >= 0.0)) throw std::invalid_argument("covering radius must be nonnegative");
  if (!(c_const >= 1.0)) throw std::invalid_argument("C must be at least 1");
}

double estimate_covering_radius(const Eigen::Ref<const Matrix>& coords) {
  if (coords.rows() < 2) throw std::invalid_argument("covering radius needs at least two points");
  KdTree tree(coords);
  const auto n = static_cast<std::size_t>(coords.rows());
  std::vector<double> nearest(n);
  parallel_for(n, [&](std::size_t i) { nearest[i] = tree.knn(static_cast<Eigen::Index>(i), 1).front().distance; });
  return *std::max_element(nearest.begin(), nearest.end());
}

double estimate_covering_radius(const PointCloud& pc) { return estimate_covering_radius(pc.coords()); }

std::size_t check_lemma1(const PointCloud& pc, const WeightedGraph& g, const ManifoldMeta& meta) {
  meta.validate();
  if (g.n_vertices() != pc.n_points()) throw std::invalid_argument("graph and cloud sizes differ");
  const Matrix& x = pc.coords();
  const double delta = meta.delta();
  std::size_t violations = 0;
  for (const auto& e : g.edges())
    for (Eigen::Index r = 0; r < x.cols(); ++r)
      if (std::abs(x(e.i, r) - x(e.j, r)) > delta) ++violations;
  return violations;
}

double laplacian_form(const Laplacian& l, const Eigen::Ref<const Vector>& f) {
  if (f.size() != l.size()) throw std::invalid_argument("laplacian_form: signal length mismatch");
  return f.dot(l.matrix * f);
}

namespace {

double squared_mean(const Eigen::Ref<const Vector>& f) {
  const double mean = f.mean();
  if (!(std::abs(mean) > 0.0))
    throw std::invalid_argument("signal has zero mean; translate the manifold away from the origin "
                                "(e.g. by twice its diameter) before checking the bounds");
  return mean * mean;
}

double band_energy(const FilterBank& fb, const EigenSystem& es, const Vector& spectrum, double s) {
  double sum = 0.0;
  for (Eigen::Index l = 0; l < spectrum.size(); ++l) {
    const double g = fb.wavelet_kernel(s * es.eigenvalues(l));
    sum += g * g * spectrum(l) * spectrum(l);
  }
  return sum;
}

}  // namespace

BoundCheck check_lemma2(const Laplacian& l, const Eigen::Ref<const Vector>& f, const ManifoldMeta& meta) {
  meta.validate();
  const double c_f = squared_mean(f);
  BoundCheck out;
  out.value = laplacian_form(l, f) / f.squaredNorm();
  out.bound = meta.delta() * largest_eigenvalue(l) / c_f;
  out.satisfied = out.value <= out.bound;
  return out;
}

double compute_cs(const FilterBank& fb, const Eigen::Ref<const Vector>& eigenvalues, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("scale must be positive");
  double sum = 0.0;
  for (Eigen::Index l = 0; l < eigenvalues.size(); ++l) {
    const double lambda = eigenvalues(l);
    if (lambda < -1e-10) throw std::invalid_argument("negative eigenvalue " + std::to_string(lambda));
    if (l == 0 || lambda <= 1e-10) continue;
    const double g = fb.wavelet_kernel(s * lambda);
    sum += g * g / (s * s * lambda);
  }
  return sum;
}

bool BandBoundReport::all_satisfied() const {
  return std::all_of(scales.begin(), scales.end(), [](const ScaleRecord& r) { return r.satisfied; });
}

ScaleRecord check_theorem1(const FilterBank& fb, const EigenSystem& es, const Eigen::Ref<const Vector>& f,
                           const ManifoldMeta& meta, double s) {
  meta.validate();
  const double c_f = squared_mean(f);
  const Vector spectrum = gft(es, f);
  ScaleRecord r;
  r.scale = s;
  r.empirical = band_energy(fb, es, spectrum, s);
  r.c_s = compute_cs(fb, es.eigenvalues, s);
  r.bound = s * s * meta.delta() * es.eigenvalues.maxCoeff() / c_f * r.c_s;
  r.satisfied = r.empirical <= r.bound;
  return r;
}

BandBoundReport check_theorem1(const FilterBank& fb, const EigenSystem& es, const Eigen::Ref<const Vector>& f,
                              const ManifoldMeta& meta) {
  BandBoundReport report;
  report.c_f = squared_mean(f);
  report.lambda_n = es.eigenvalues.maxCoeff();
  const Vector spectrum = gft(es, f);
  double form = 0.0;
  for (Eigen::Index l = 0; l < spectrum.size(); ++l) form += std::max(es.eigenvalues(l), 0.0) * spectrum(l) * spectrum(l);
  report.laplacian_form_value = form / f.squaredNorm();
  for (double s : fb.scales()) {
    report.scales.push_back(check_theorem1(fb, es, f, meta, s));
    report.scaled_cs.push_back(s * report.scales.back().c_s);
  }
  return report;
}

bool NoiseEnergyReport::all_satisfied() const {
  return vertex_violations == 0 &&
         std::all_of(scales.begin(), scales.end(), [](const NoiseRecord& r) { return r.satisfied; });
}

NoiseEnergyReport check_lemma3(const FilterBank& fb, const EigenSystem& es, double sigma2, std::size_t trials,
                          std::uint64_t seed) {
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("noise variance must be nonnegative");
  if (trials < 2) throw std::invalid_argument("Monte Carlo needs at least two trials");
  const Eigen::Index n = es.eigenvalues.size();
  const auto j = static_cast<Eigen::Index>(fb.scale_count());

  // Trial t only touches slot t, so the result is independent of scheduling.
  std::vector<Matrix> coeffs(trials);
  parallel_for(trials, [&](std::size_t t) {
    auto rng = make_rng(seed, t);
    std::normal_distribution<double> normal(0.0, std::sqrt(sigma2));
    Vector noise(n);
    for (Eigen::Index i = 0; i < n; ++i) noise(i) = sigma2 > 0.0 ? normal(rng) : 0.0;
    coeffs[t] = forward_exact(fb, es, noise).bands.bottomRows(j);
  });

  const double count = static_cast<double>(trials);
  Matrix sum = Matrix::Zero(j, n), sum_sq = Matrix::Zero(j, n);
  Vector energy_sum = Vector::Zero(j), energy_sq = Vector::Zero(j);
  for (const auto& c : coeffs) {
    sum += c;
    sum_sq += c.cwiseAbs2();
    Vector e = c.rowwise().squaredNorm();
    energy_sum += e;
    energy_sq += e.cwiseAbs2();
  }

  NoiseEnergyReport report;
  report.vertex_mean = sum / count;
  Matrix var = ((sum_sq - count * report.vertex_mean.cwiseAbs2()) / (count - 1.0)).cwiseMax(0.0);
  report.vertex_std_err = (var / count).cwiseSqrt();
  for (Eigen::Index b = 0; b < j; ++b) {
    for (Eigen::Index v = 0; v < n; ++v) {
      const double m = std::abs(report.vertex_mean(b, v));
      const double se = report.vertex_std_err(b, v);
      ++report.vertex_tests;
      if (m > 3.0 * se) ++report.vertex_violations;
      if (se > 0.0) report.max_mean_over_stderr = std::max(report.max_mean_over_stderr, m / se);
    }
  }

  for (Eigen::Index b = 0; b < j; ++b) {
    const double s = fb.scales()[static_cast<std::size_t>(b)];
    NoiseRecord r;
    r.scale = s;
    r.mc_mean_energy = energy_sum(b) / count;
    const double e_var = std::max(0.0, (energy_sq(b) - count * r.mc_mean_energy * r.mc_mean_energy) / (count - 1.0));
    r.mc_std_err = std::sqrt(e_var / count);
    r.noise_bound = s * s * sigma2 * compute_cs(fb, es.eigenvalues, s);
    for (Eigen::Index l = 0; l < n; ++l) {
      const double g = fb.wavelet_kernel(s * es.eigenvalues(l));
      r.exact_expectation += sigma2 * g * g;
    }
    r.satisfied = r.mc_mean_energy <= r.noise_bound + 3.0 * r.mc_std_err;
    report.scales.push_back(r);
  }
  for (std::size_t b = 1; b < report.scales.size(); ++b) {
    const double prev = report.scales[b - 1].mc_mean_energy;
    report.adjacent_ratios.push_back(prev > 0.0 ? report.scales[b].mc_mean_energy / prev
                                                : std::numeric_limits<double>::quiet_NaN());
  }
  return report;
}

bool NoisyBoundReport::all_satisfied() const {
  return std::all_of(dimensions.begin(), dimensions.end(), [](const NoisyBoundDimension& d) {
    return std::all_of(d.scales.begin(), d.scales.end(), [](const ScaleRecord& r) { return r.satisfied; });
  });
}

NoisyBoundReport check_theorem2(const PointCloud& noisy, std::size_t k, const ManifoldMeta& meta, std::size_t j_scales,
                              SigmaMode sigma) {
  meta.validate();
  if (!noisy.has_ground_truth()) throw std::invalid_argument("the noisy-case check needs the ground truth");
  const Matrix& x = noisy.ground_truth();
  const Matrix& xt = noisy.coords();

  const WeightedGraph g_clean = build_knn_graph(x, k, sigma);
  const WeightedGraph g_noisy = build_knn_graph(xt, k, sigma);
  const Laplacian l_clean = laplacian(g_clean);
  const Laplacian l_noisy = laplacian(g_noisy);
  const EigenSystem es_clean = eigensystem(l_clean);
  const EigenSystem es_noisy = eigensystem(l_noisy);
  const FilterBank fb_clean = design_filterbank(l_clean.lambda_max_estimate, j_scales);
  const FilterBank fb_noisy = design_filterbank(l_noisy.lambda_max_estimate, j_scales);

  const double c = meta.c_const, t = meta.covering_radius, tau = meta.tau;
  const double floor_term = 4.0 * c * c * t * t / tau;
  const Vector xi = (xt - x).rowwise().norm();

  NoisyBoundReport report;
  report.q_xi = 2.0 * xi.cwiseMax(floor_term).minCoeff();
  report.q_floor = 2.0 * floor_term;
  report.max_xi = xi.maxCoeff();
  report.d_max2 = two_hop_max_degree(g_clean);
  report.d_max2_noisy = two_hop_max_degree(g_noisy);
  report.lambda_n = es_clean.eigenvalues.maxCoeff();
  report.lambda_n_noisy = es_noisy.eigenvalues.maxCoeff();
  report.outside_bounded_regime = report.q_xi > tau;
  report.noise_exceeds_q = report.max_xi > 0.5 * report.q_xi;

  const double lift = report.lambda_n + static_cast<double>(report.d_max2);
  const double delta_noisy = 4.0 * c * (t + report.q_xi);
  const double delta_floor = 4.0 * c * (t + report.q_floor);
  for (Eigen::Index r = 0; r < xt.cols(); ++r) {
    NoisyBoundDimension dim;
    const Vector ft = xt.col(r);
    dim.c_f_tilde = squared_mean(ft);
    const Vector spectrum = gft(es_noisy, ft);
    for (double s : fb_noisy.scales()) {
      ScaleRecord rec;
      rec.scale = s;
      rec.empirical = band_energy(fb_noisy, es_noisy, spectrum, s);
      rec.c_s = compute_cs(fb_noisy, es_noisy.eigenvalues, s);
      rec.bound = s * s * delta_noisy * lift / dim.c_f_tilde * rec.c_s;
      rec.satisfied = rec.empirical <= rec.bound;
      dim.scales.push_back(rec);
    }
    // Noise-free reading on the clean graph: q at its floor next to the plain bound.
    const Vector f = x.col(r);
    const double c_f = squared_mean(f);
    for (double s : fb_clean.scales()) {
      const double cs = compute_cs(fb_clean, es_clean.eigenvalues, s);
      dim.zero_noise_bounds.push_back(s * s * delta_floor * lift / c_f * cs);
      dim.clean_bounds.push_back(s * s * meta.delta() * report.lambda_n / c_f * cs);
    }
    report.dimensions.push_back(std::move(dim));
  }
  return report;
}

EnergyProfile band_energy_profile(const WaveletCoefficients& coeffs) {
  const Vector e = coeffs.band_energies();
  EnergyProfile p;
  p.fractions.assign(static_cast<std::size_t>(e.size()), 0.0);
  const double total = e.sum();
  if (!(total > 0.0)) {
    p.all_zero = true;
    return p;
  }
  for (Eigen::Index b = 0; b < e.size(); ++b) p.fractions[static_cast<std::size_t>(b)] = e(b) / total;
  return p;
}

Matrix sphere_normals(const Eigen::Ref<const Matrix>& coords) {
  Matrix n = coords;
  for (Eigen::Index i = 0; i < n.rows(); ++i) {
    const double norm = n.row(i).norm();
    if (norm == 0.0) throw std::invalid_argument("point at the origin has no radial direction");
    n.row(i) /= norm;
  }
  return n;
}

double local_pca_tangent_error(const Eigen::Ref<const Matrix>& coords, const Eigen::Ref<const Matrix>& normals,
                               std::size_t k) {
  if (normals.rows() != coords.rows() || normals.cols() != coords.cols())
    throw std::invalid_argument("normals must match the cloud's shape");
  if (static_cast<Eigen::Index>(k) < coords.cols())
    throw std::invalid_argument("k = " + std::to_string(k) + " is below the ambient dimension; covariance is degenerate");
  if (static_cast<Eigen::Index>(k) > coords.rows()) throw std::invalid_argument("k exceeds the number of points");

  KdTree tree(coords);
  const auto n = static_cast<std::size_t>(coords.rows());
  std::vector<double> angle(n);
  parallel_for(n, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    Matrix local(static_cast<Eigen::Index>(k), coords.cols());
    local.row(0) = coords.row(row);
    Eigen::Index m = 1;
    for (const auto& nb : tree.knn(row, k - 1)) local.row(m++) = coords.row(nb.index);
    local.rowwise() -= local.colwise().mean();
    Eigen::SelfAdjointEigenSolver<Matrix> solver(local.transpose() * local);
    const Vector est = solver.eigenvectors().col(0);
    const double cosine = std::min(1.0, std::abs(est.dot(normals.row(row).transpose().normalized())));
    angle[i] = std::acos(cosine) * 180.0 / std::numbers::pi;
  });
  double sum = 0.0;
  for (double a : angle) sum += a;
  return sum / static_cast<double>(n);
}

BestK best_local_pca_error(const Eigen::Ref<const Matrix>& coords, const Eigen::Ref<const Matrix>& normals,
                           const std::vector<std::size_t>& k_values) {
  if (k_values.empty()) throw std::invalid_argument("no k values to sweep");
  BestK best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t k : k_values) {
    const double e = local_pca_tangent_error(coords, normals, k);
    if (e < best.error) best = {k, e};
  }
  return best;
}

std::vector<TangentStudyRow> tangent_space_study(const TangentStudyConfig& cfg, bool denoise) {
  ManifoldParams params;
  params.radius = cfg.radius;
  const PointCloud sphere = sample_manifold(ManifoldKind::sphere, cfg.n, params, cfg.sample_seed);

  std::vector<TangentStudyRow> rows;
  for (double var : cfg.noise_variance) {
    TangentStudyRow row;
    row.noise_variance = var;
    const PointCloud noisy = add_gaussian_noise(sphere, var, cfg.noise_seed);
    row.before = best_local_pca_error(noisy.coords(), sphere_normals(noisy.coords()), cfg.pca_k);
    if (denoise && var > 0.0) {
      row.after.error = std::numeric_limits<double>::infinity();
      for (std::size_t k : cfg.mfd_k) {
        for (double e : cfg.mfd_thresholds) {
          DenoiseConfig dc;
          dc.k = k;
          dc.energy_threshold = e;
          const Matrix out = mfd_denoise(noisy, dc).cloud.coords();
          const BestK b = best_local_pca_error(out, sphere_normals(out), cfg.pca_k);
          if (b.error < row.after.error) {
            row.after = b;
            row.mfd_k = k;
            row.mfd_threshold = e;
          }
        }
      }
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepRow> k_sweep(const PointCloud& noisy, const std::vector<std::size_t>& k_values,
                              const DenoiseConfig& cfg) {
  if (!noisy.has_ground_truth()) throw std::invalid_argument("k sweep needs the ground truth");
  std::vector<SweepRow> rows(k_values.size());
  parallel_for(k_values.size(), [&](std::size_t c) {
    DenoiseConfig cell = cfg;
    cell.k = k_values[c];
    const auto result = mfd_denoise(noisy, cell);
    rows[c] = {k_values[c], rmse(result.cloud.coords(), noisy.ground_truth())};
  });
  return rows;
}

void save_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "k,rmse\n";
  char buf[64];
  for (const auto& r : rows) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), r.rmse, std::chars_format::general, 17);
    out << r.k << ',';
    out.write(buf, end - buf);
    out.put('\n');
  }
}

nlohmann::json to_json(const ManifoldMeta& meta) {
  return {{"tau", meta.tau},
          {"covering_radius", meta.covering_radius},
          {"c_const", meta.c_const},
          {"delta", meta.delta()},
          {"resolution_ok", meta.resolution_ok()}};
}

namespace {

nlohmann::json scale_records(const std::vector<ScaleRecord>& records) {
  auto out = nlohmann::json::array();
  for (const auto& r : records)
    out.push_back({{"scale", r.scale}, {"empirical", r.empirical}, {"bound", r.bound}, {"c_s", r.c_s},
                   {"satisfied", r.satisfied}});
  return out;
}

}  // namespace

nlohmann::json to_json(const TheoryReport& report) {
  nlohmann::json j;
  j["meta"] = to_json(report.meta);
  j["k"] = report.k;
  j["neighbor_differences"] = {{"violations", report.neighbor_violations}};

  auto gradient = nlohmann::json::array();
  for (const auto& c : report.gradient) gradient.push_back({{"value", c.value}, {"bound", c.bound}, {"satisfied", c.satisfied}});
  j["gradient_bound"] = gradient;

  auto bands = nlohmann::json::array();
  for (std::size_t r = 0; r < report.band_bounds.size(); ++r) {
    const auto& t = report.band_bounds[r];
    bands.push_back({{"dimension", r},
                    {"c_f", t.c_f},
                    {"lambda_n", t.lambda_n},
                    {"laplacian_form", t.laplacian_form_value},
                    {"scaled_cs", t.scaled_cs},
                    {"scales", scale_records(t.scales)},
                    {"satisfied", t.all_satisfied()}});
  }
  j["band_bounds"] = bands;

  if (report.noise_energy) {
    const auto& noise = *report.noise_energy;
    auto scales = nlohmann::json::array();
    for (const auto& r : noise.scales)
      scales.push_back({{"scale", r.scale},
                        {"mc_mean_energy", r.mc_mean_energy},
                        {"mc_std_err", r.mc_std_err},
                        {"noise_bound", r.noise_bound},
                        {"exact_expectation", r.exact_expectation},
                        {"satisfied", r.satisfied}});
    j["noise_energy"] = {{"scales", scales},
                   {"vertex_violations", noise.vertex_violations},
                   {"vertex_tests", noise.vertex_tests},
                   {"max_mean_over_stderr", noise.max_mean_over_stderr},
                   {"adjacent_ratios", noise.adjacent_ratios},
                   {"satisfied", noise.all_satisfied()}};
  }

  if (report.noisy_bounds) {
    const auto& noisy = *report.noisy_bounds;
    auto dims = nlohmann::json::array();
    for (std::size_t r = 0; r < noisy.dimensions.size(); ++r) {
      const auto& d = noisy.dimensions[r];
      dims.push_back({{"dimension", r},
                      {"c_f_tilde", d.c_f_tilde},
                      {"scales", scale_records(d.scales)},
                      {"zero_noise_bounds", d.zero_noise_bounds},
                      {"clean_bounds", d.clean_bounds}});
    }
    j["noisy_bounds"] = {{"q_xi", noisy.q_xi},
                     {"q_floor", noisy.q_floor},
                     {"max_xi", noisy.max_xi},
                     {"d_max2", noisy.d_max2},
                     {"d_max2_noisy", noisy.d_max2_noisy},
                     {"lambda_n", noisy.lambda_n},
                     {"lambda_n_noisy", noisy.lambda_n_noisy},
                     {"outside_bounded_regime", noisy.outside_bounded_regime},
                     {"noise_exceeds_q", noisy.noise_exceeds_q},
                     {"dimensions", dims},
                     {"satisfied", noisy.all_satisfied()}};
  }
  return j;
}

}  // namespace mfd
