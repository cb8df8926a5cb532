#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include <mfd/graph.hpp>

namespace mfd::test {

inline WeightedGraph cycle_graph(Eigen::Index n, double w = 1.0) {
  std::vector<Edge> edges;
  for (Eigen::Index i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, w});
  return WeightedGraph::from_edges(n, edges);
}

inline WeightedGraph path_graph(Eigen::Index n, double w = 1.0) {
  std::vector<Edge> edges;
  for (Eigen::Index i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, w});
  return WeightedGraph::from_edges(n, edges);
}

inline WeightedGraph star_graph(Eigen::Index leaves) {
  std::vector<Edge> edges;
  for (Eigen::Index i = 1; i <= leaves; ++i) edges.push_back({0, i, 1.0});
  return WeightedGraph::from_edges(leaves + 1, edges);
}

inline Vector random_signal(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector f(n);
  for (Eigen::Index i = 0; i < n; ++i) f(i) = normal(rng);
  return f;
}

inline Matrix random_points(Eigen::Index n, Eigen::Index d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = unit(rng);
  return x;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
    : path_(std::filesystem::temp_directory_path() / ("mfd_test_" + name + "_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& f) const { return path_ / f; }

 private:
  std::filesystem::path path_;
};

}  // namespace mfd::test
