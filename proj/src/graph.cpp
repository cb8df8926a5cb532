#include <mfd/graph.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include <mfd/knn.hpp>
#include <mfd/parallel.hpp>

#include "rng.hpp"

namespace mfd {

WeightedGraph WeightedGraph::from_edges(Eigen::Index n_vertices, std::vector<Edge> edges, std::size_t k,
                                        double sigma_d) {
  if (n_vertices < 1) throw std::invalid_argument("graph needs at least one vertex");
  for (auto& e : edges) {
    if (e.i > e.j) std::swap(e.i, e.j);
    if (e.i == e.j) throw std::invalid_argument("self-loops are not allowed");
    if (e.i < 0 || e.j >= n_vertices) throw std::out_of_range("edge endpoint out of range");
    if (!(e.weight > 0.0 && e.weight <= 1.0)) throw std::invalid_argument("edge weight must lie in (0, 1]");
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.i < b.i || (a.i == b.i && a.j < b.j);
  });
  for (std::size_t e = 1; e < edges.size(); ++e)
    if (edges[e].i == edges[e - 1].i && edges[e].j == edges[e - 1].j)
      throw std::invalid_argument("duplicate edge (" + std::to_string(edges[e].i) + ", " +
                                  std::to_string(edges[e].j) + ")");

  WeightedGraph g;
  g.adjacency_.resize(static_cast<std::size_t>(n_vertices));
  for (const auto& e : edges) {
    g.adjacency_[static_cast<std::size_t>(e.i)].push_back({e.j, e.weight});
    g.adjacency_[static_cast<std::size_t>(e.j)].push_back({e.i, e.weight});
  }
  for (auto& list : g.adjacency_)
    std::sort(list.begin(), list.end(), [](const Entry& a, const Entry& b) { return a.vertex < b.vertex; });
  g.edges_ = std::move(edges);
  g.k_ = k;
  g.sigma_d_ = sigma_d;
  return g;
}

std::optional<double> WeightedGraph::weight(Eigen::Index i, Eigen::Index j) const {
  const auto& list = neighbors(i);
  auto it = std::lower_bound(list.begin(), list.end(), j,
                             [](const Entry& e, Eigen::Index v) { return e.vertex < v; });
  if (it == list.end() || it->vertex != j) return std::nullopt;
  return it->weight;
}

double WeightedGraph::degree(Eigen::Index v) const {
  double d = 0.0;
  for (const auto& e : neighbors(v)) d += e.weight;
  return d;
}

double WeightedGraph::max_degree() const {
  double best = 0.0;
  for (Eigen::Index v = 0; v < n_vertices(); ++v) best = std::max(best, degree(v));
  return best;
}

std::size_t WeightedGraph::component_count() const {
  std::vector<char> seen(adjacency_.size(), 0);
  std::size_t count = 0;
  std::vector<Eigen::Index> stack;
  for (std::size_t s = 0; s < adjacency_.size(); ++s) {
    if (seen[s]) continue;
    ++count;
    seen[s] = 1;
    stack.push_back(static_cast<Eigen::Index>(s));
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      for (const auto& e : adjacency_[static_cast<std::size_t>(v)]) {
        if (!seen[static_cast<std::size_t>(e.vertex)]) {
          seen[static_cast<std::size_t>(e.vertex)] = 1;
          stack.push_back(e.vertex);
        }
      }
    }
  }
  return count;
}

std::uint64_t WeightedGraph::checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(n_vertices()));
  for (const auto& e : edges_) {
    mix(static_cast<std::uint64_t>(e.i));
    mix(static_cast<std::uint64_t>(e.j));
    mix(std::bit_cast<std::uint64_t>(e.weight));
  }
  return h;
}

WeightedGraph build_knn_graph(const Eigen::Ref<const Matrix>& points, std::size_t k, SigmaMode sigma) {
  const Eigen::Index n = points.rows();
  if (k < 1 || static_cast<Eigen::Index>(k) > n - 1)
    throw std::invalid_argument("k must lie in [1, " + std::to_string(n - 1) + "], got " + std::to_string(k));
  if (sigma.fixed && !(*sigma.fixed > 0.0 && std::isfinite(*sigma.fixed)))
    throw std::invalid_argument("fixed sigma_D must be positive");

  KdTree tree(points);
  std::vector<std::vector<Neighbor>> knn(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    knn[i] = tree.knn(static_cast<Eigen::Index>(i), k);
  });

  // Union symmetrization: keep each unordered pair once.
  std::vector<Edge> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (const auto& nb : knn[static_cast<std::size_t>(i)])
      pairs.push_back({std::min(i, nb.index), std::max(i, nb.index), nb.distance});
  std::sort(pairs.begin(), pairs.end(), [](const Edge& a, const Edge& b) {
    return a.i < b.i || (a.i == b.i && a.j < b.j);
  });
  pairs.erase(std::unique(pairs.begin(), pairs.end(),
                          [](const Edge& a, const Edge& b) { return a.i == b.i && a.j == b.j; }),
              pairs.end());

  double sigma_d = 0.0;
  if (sigma.fixed) {
    sigma_d = *sigma.fixed;
  } else {
    double total = 0.0;
    for (const auto& p : pairs) total += p.weight;
    sigma_d = total / static_cast<double>(pairs.size());
    if (!(sigma_d > 0.0)) sigma_d = 1.0;  // all retained edges have length zero
  }

  const double floor_weight = std::numeric_limits<double>::min();
  for (auto& p : pairs) {
    double d = p.weight;
    p.weight = std::max(floor_weight, std::exp(-d * d / (2.0 * sigma_d * sigma_d)));
  }
  return WeightedGraph::from_edges(n, std::move(pairs), k, sigma_d);
}

WeightedGraph build_knn_graph(const PointCloud& pc, std::size_t k, SigmaMode sigma) {
  return build_knn_graph(pc.coords(), k, sigma);
}

Laplacian laplacian(const WeightedGraph& g) {
  const Eigen::Index n = g.n_vertices();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * g.edge_count() + static_cast<std::size_t>(n));
  Vector degrees = Vector::Zero(n);
  for (const auto& e : g.edges()) {
    triplets.emplace_back(e.i, e.j, -e.weight);
    triplets.emplace_back(e.j, e.i, -e.weight);
    degrees(e.i) += e.weight;
    degrees(e.j) += e.weight;
  }
  for (Eigen::Index v = 0; v < n; ++v) triplets.emplace_back(v, v, degrees(v));

  Laplacian l;
  l.matrix.resize(n, n);
  l.matrix.setFromTriplets(triplets.begin(), triplets.end());
  l.matrix.makeCompressed();
  l.degrees = std::move(degrees);
  l.lambda_max_estimate = estimate_lambda_max(l);
  return l;
}

namespace {

Vector start_vector(Eigen::Index n) {
  auto rng = make_rng(0x5eed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = unit(rng);
  return v.normalized();
}

// Returns the Rayleigh quotient and whether the relative change fell below rel_tol.
std::pair<double, bool> power_iteration(const Laplacian& l, double rel_tol, int max_iter) {
  const Eigen::Index n = l.size();
  if (n == 0) return {0.0, true};
  Vector v = start_vector(n);
  double mu = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = l.matrix * v;
    double next = v.dot(w);
    double norm = w.norm();
    if (norm == 0.0) return {0.0, true};
    v = w / norm;
    if (it > 0 && std::abs(next - mu) <= rel_tol * std::abs(next)) return {next, true};
    mu = next;
  }
  return {mu, false};
}

}  // namespace

double estimate_lambda_max(const Laplacian& l) {
  auto [mu, converged] = power_iteration(l, 1e-4, 1000);
  if (!converged) return 2.0 * l.degrees.maxCoeff();
  return 1.01 * mu;
}

double largest_eigenvalue(const Laplacian& l, double rel_tol, int max_iter) {
  return power_iteration(l, rel_tol, max_iter).first;
}

std::vector<Eigen::Index> neighborhood(const WeightedGraph& g, Eigen::Index vertex, int hops) {
  if (vertex < 0 || vertex >= g.n_vertices())
    throw std::out_of_range("vertex " + std::to_string(vertex) + " out of range");
  if (hops < 1) throw std::invalid_argument("hop count must be at least 1");

  std::vector<int> dist(static_cast<std::size_t>(g.n_vertices()), -1);
  std::deque<Eigen::Index> queue{vertex};
  dist[static_cast<std::size_t>(vertex)] = 0;
  std::vector<Eigen::Index> out;
  while (!queue.empty()) {
    auto v = queue.front();
    queue.pop_front();
    int dv = dist[static_cast<std::size_t>(v)];
    if (dv == hops) {
      out.push_back(v);
      continue;
    }
    for (const auto& e : g.neighbors(v)) {
      auto& de = dist[static_cast<std::size_t>(e.vertex)];
      if (de < 0) {
        de = dv + 1;
        queue.push_back(e.vertex);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t two_hop_max_degree(const WeightedGraph& g) {
  const auto n = static_cast<std::size_t>(g.n_vertices());
  std::vector<std::size_t> mark(n, 0);  // stamp per source vertex
  std::size_t best = 0;
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t stamp = v + 1;
    mark[v] = stamp;
    for (const auto& e : g.neighbors(static_cast<Eigen::Index>(v))) mark[static_cast<std::size_t>(e.vertex)] = stamp;
    std::size_t count = 0;
    for (const auto& e : g.neighbors(static_cast<Eigen::Index>(v))) {
      for (const auto& f : g.neighbors(e.vertex)) {
        auto& m = mark[static_cast<std::size_t>(f.vertex)];
        if (m != stamp) {
          m = stamp;
          ++count;
        }
      }
    }
    best = std::max(best, count);
  }
  return best;
}

void save_edge_list(const WeightedGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  char buf[64];
  for (const auto& e : g.edges()) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), e.weight, std::chars_format::general, 17);
    out << e.i << ',' << e.j << ',';
    out.write(buf, end - buf);
    out.put('\n');
  }
}

}  // namespace mfd
