#include <mfd/denoise.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

#include <mfd/parallel.hpp>

namespace mfd {

int DenoiseConfig::resolved_cheb_order() const {
  if (cheb_order) return *cheb_order;
  return std::max(static_cast<int>((k + 1) / 2), 20);
}

void DenoiseConfig::validate() const {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  if (j_scales < 1) throw std::invalid_argument("at least one wavelet scale is required");
  if (!(energy_threshold > 0.0 && energy_threshold <= 1.0))
    throw std::invalid_argument("energy threshold must lie in (0, 1]");
  if (cheb_order && *cheb_order < 1) throw std::invalid_argument("Chebyshev order must be at least 1");
  if (!(cg_tol > 0.0)) throw std::invalid_argument("CG tolerance must be positive");
  if (cg_max_iterations < 1) throw std::invalid_argument("CG iteration cap must be positive");
}

BandSelection select_bands(const WaveletCoefficients& coeffs, double e_thresh) {
  if (!(e_thresh > 0.0 && e_thresh <= 1.0)) throw std::invalid_argument("energy threshold must lie in (0, 1]");
  const Vector energy = coeffs.band_energies();
  const auto bands = static_cast<std::size_t>(energy.size());
  const double total = energy.sum();

  BandSelection sel;
  sel.energies.assign(energy.data(), energy.data() + energy.size());
  sel.energy_profile.assign(bands, 0.0);
  if (!(total > 0.0)) {
    sel.retained = {0};
    sel.cut_index = 1;
    return sel;
  }
  for (std::size_t b = 0; b < bands; ++b) sel.energy_profile[b] = sel.energies[b] / total;

  // Relative slack so that e.g. 3/6 of uniform energy counts as reaching 0.5.
  const double target = e_thresh * total * (1.0 - 1e-12);
  double cumulative = 0.0;
  std::size_t keep = bands;
  for (std::size_t b = 0; b < bands; ++b) {
    cumulative += sel.energies[b];
    if (cumulative >= target) {
      keep = b + 1;
      break;
    }
  }
  for (std::size_t b = 0; b < keep; ++b) sel.retained.push_back(b);
  sel.cut_index = keep;
  return sel;
}

DenoiseResult mfd_denoise(const PointCloud& pc, const DenoiseConfig& cfg) {
  cfg.validate();
  if (static_cast<Eigen::Index>(cfg.k) > pc.n_points() - 1)
    throw std::invalid_argument("k must lie in [1, " + std::to_string(pc.n_points() - 1) + "], got " +
                                std::to_string(cfg.k));
  return mfd_denoise(pc, build_knn_graph(pc, cfg.k, cfg.sigma_mode), cfg);
}

DenoiseResult mfd_denoise(const PointCloud& pc, const WeightedGraph& g, const DenoiseConfig& cfg) {
  cfg.validate();
  if (g.n_vertices() != pc.n_points()) throw std::invalid_argument("graph and cloud sizes differ");

  DenoiseResult result{pc, {}, g.checksum(), {}, cfg};
  result.config.cheb_order = cfg.resolved_cheb_order();

  if (!g.is_connected())
    result.warnings.push_back("graph has " + std::to_string(g.component_count()) +
                              " connected components; denoising acts per component");
  const Matrix& x = pc.coords();
  if ((x.rowwise() - x.row(0)).isZero(0.0))
    result.warnings.push_back("all points coincide; every edge has unit weight");

  const Laplacian l = laplacian(g);
  if (!(l.lambda_max_estimate > 0.0)) {
    // No edges carry weight: every signal is already in the null space.
    result.selections.assign(static_cast<std::size_t>(pc.ambient_dim()), BandSelection{{0}, 1, {}, {}});
    result.warnings.push_back("graph has no edges; input returned unchanged");
    return result;
  }

  const FilterBank fb = design_filterbank(l.lambda_max_estimate, cfg.j_scales);
  const ChebyshevBank bank = approximate(fb, *result.config.cheb_order);
  auto coeffs = forward_chebyshev_block(bank, l, x);

  const auto dims = static_cast<std::size_t>(pc.ambient_dim());
  result.selections.resize(dims);
  Matrix out(x.rows(), x.cols());
  parallel_for(dims, [&](std::size_t r) {
    BandSelection sel = select_bands(coeffs[r], cfg.energy_threshold);
    const auto col = static_cast<Eigen::Index>(r);
    if ((x.col(col).array() == x(0, col)).all()) {
      // A constant coordinate spans the null space of L: the exact transform is the
      // identity and lives wholly in the scaling band. The polynomial bands only leak
      // their approximation error into it, so it passes through untouched.
      sel.retained = {0};
      sel.cut_index = 1;
      out.col(col) = x.col(col);
      result.selections[r] = std::move(sel);
      return;
    }
    auto& c = coeffs[r];
    for (std::size_t b = sel.cut_index; b < fb.band_count(); ++b) c.bands.row(static_cast<Eigen::Index>(b)).setZero();
    out.col(static_cast<Eigen::Index>(r)) = inverse(bank, l, c, {cfg.cg_tol, cfg.cg_max_iterations});
    result.selections[r] = std::move(sel);
  });
  result.cloud = pc.with_coords(std::move(out));
  return result;
}

}  // namespace mfd
