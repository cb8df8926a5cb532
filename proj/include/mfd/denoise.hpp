#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <mfd/graph.hpp>
#include <mfd/point_cloud.hpp>
#include <mfd/sgw.hpp>

namespace mfd {

struct DenoiseConfig {
  std::size_t k = 30;
  SigmaMode sigma_mode;
  std::size_t j_scales = 5;
  std::optional<int> cheb_order;  // unset: max(ceil(k / 2), 20)
  double energy_threshold = 0.99;
  double cg_tol = 1e-8;
  int cg_max_iterations = 500;

  int resolved_cheb_order() const;
  void validate() const;
};

// Bands are ordered scaling band first, then wavelet bands by decreasing scale.
struct BandSelection {
  std::vector<std::size_t> retained;  // always starts with 0 (scaling band)
  std::size_t cut_index = 0;          // first discarded band; band_count() when nothing is cut
  std::vector<double> energy_profile; // per-band fraction of total energy
  std::vector<double> energies;       // per-band sum of squared coefficients
};

// Shortest prefix whose cumulative energy fraction reaches e_thresh.
BandSelection select_bands(const WaveletCoefficients& coeffs, double e_thresh);

struct DenoiseResult {
  PointCloud cloud;
  std::vector<BandSelection> selections;  // one per ambient dimension
  std::uint64_t graph_checksum = 0;
  std::vector<std::string> warnings;
  DenoiseConfig config;  // with cheb_order resolved
};

DenoiseResult mfd_denoise(const PointCloud& pc, const DenoiseConfig& cfg);

// Same pipeline on a prebuilt graph; used when the caller wants to reuse it.
DenoiseResult mfd_denoise(const PointCloud& pc, const WeightedGraph& g, const DenoiseConfig& cfg);

}  // namespace mfd
