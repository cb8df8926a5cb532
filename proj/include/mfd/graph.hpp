#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <mfd/point_cloud.hpp>

namespace mfd {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Edge {
  Eigen::Index i;  // i < j
  Eigen::Index j;
  double weight;
};

// Kernel bandwidth for the Gaussian edge weights. Unset means automatic:
// the mean Euclidean length of the retained edges.
struct SigmaMode {
  std::optional<double> fixed;

  static SigmaMode automatic() { return {}; }
  static SigmaMode fixed_value(double sigma) { return {sigma}; }
};

// Undirected weighted graph with symmetric weights in (0, 1] and no self-loops.
class WeightedGraph {
 public:
  struct Entry {
    Eigen::Index vertex;
    double weight;
  };

  // Builds a graph from an explicit edge list. Duplicate or reversed pairs are an error.
  static WeightedGraph from_edges(Eigen::Index n_vertices, std::vector<Edge> edges, std::size_t k = 0,
                                  double sigma_d = 0.0);

  Eigen::Index n_vertices() const { return static_cast<Eigen::Index>(adjacency_.size()); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Entry>& neighbors(Eigen::Index v) const { return adjacency_.at(static_cast<std::size_t>(v)); }
  std::optional<double> weight(Eigen::Index i, Eigen::Index j) const;
  double degree(Eigen::Index v) const;
  double max_degree() const;

  std::size_t k() const { return k_; }
  double sigma_d() const { return sigma_d_; }

  std::size_t component_count() const;
  bool is_connected() const { return component_count() <= 1; }

  // FNV-1a over the edge list (indices and weight bit patterns).
  std::uint64_t checksum() const;

 private:
  WeightedGraph() = default;

  std::vector<Edge> edges_;  // sorted by (i, j)
  std::vector<std::vector<Entry>> adjacency_;  // each list sorted by vertex
  std::size_t k_ = 0;
  double sigma_d_ = 0.0;
};

// w_ij = exp(-|x_i - x_j|^2 / (2 sigma^2)) whenever j is among the k nearest
// neighbors of i or i among those of j.
WeightedGraph build_knn_graph(const Eigen::Ref<const Matrix>& points, std::size_t k,
                              SigmaMode sigma = SigmaMode::automatic());
WeightedGraph build_knn_graph(const PointCloud& pc, std::size_t k, SigmaMode sigma = SigmaMode::automatic());

// Combinatorial Laplacian L = D - W.
struct Laplacian {
  SparseMatrix matrix;
  Vector degrees;
  double lambda_max_estimate = 0.0;  // upper bound on the largest eigenvalue

  Eigen::Index size() const { return matrix.rows(); }
};

Laplacian laplacian(const WeightedGraph& g);

// Power iteration to 1e-4 relative change, times 1.01. Falls back to 2 * d_max
// (Gershgorin) when the iteration does not settle within 1000 steps.
double estimate_lambda_max(const Laplacian& l);

// Rayleigh quotient from a long power iteration; a tight lower estimate of the
// largest eigenvalue, used where a bound must not be loosened.
double largest_eigenvalue(const Laplacian& l, double rel_tol = 1e-10, int max_iter = 100000);

// Vertices at hop distance exactly `hops` from `vertex`, ascending.
std::vector<Eigen::Index> neighborhood(const WeightedGraph& g, Eigen::Index vertex, int hops);

// max over vertices of the number of vertices at hop distance exactly 2.
std::size_t two_hop_max_degree(const WeightedGraph& g);

// Edge list CSV "i,j,weight" with i < j.
void save_edge_list(const WeightedGraph& g, const std::filesystem::path& path);

}  // namespace mfd
