#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <mfd/graph.hpp>
#include <mfd/knn.hpp>

#include "helpers.hpp"

using namespace mfd;

namespace {

Vector dense_eigenvalues(const Laplacian& l) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(Matrix(l.matrix), Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

// Brute-force BFS distances from `source`, -1 when unreachable.
std::vector<int> bfs(const WeightedGraph& g, Eigen::Index source) {
  std::vector<int> dist(static_cast<std::size_t>(g.n_vertices()), -1);
  dist[static_cast<std::size_t>(source)] = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& e : g.edges()) {
      auto& di = dist[static_cast<std::size_t>(e.i)];
      auto& dj = dist[static_cast<std::size_t>(e.j)];
      if (di >= 0 && (dj < 0 || dj > di + 1)) dj = di + 1, changed = true;
      if (dj >= 0 && (di < 0 || di > dj + 1)) di = dj + 1, changed = true;
    }
  }
  return dist;
}

}  // namespace

TEST(KdTree, MatchesBruteForce) {
  const Matrix x = test::random_points(300, 3, 4);
  KdTree tree(x);
  for (Eigen::Index q = 0; q < x.rows(); q += 7) {
    std::vector<std::pair<double, Eigen::Index>> all;
    for (Eigen::Index j = 0; j < x.rows(); ++j)
      if (j != q) all.push_back({(x.row(q) - x.row(j)).squaredNorm(), j});
    std::sort(all.begin(), all.end());
    auto got = tree.knn(q, 12);
    ASSERT_EQ(got.size(), 12u);
    for (std::size_t m = 0; m < 12; ++m) {
      EXPECT_EQ(got[m].index, all[m].second);
      EXPECT_NEAR(got[m].distance, std::sqrt(all[m].first), 1e-14);
    }
  }
}

TEST(KdTree, TiesResolveToLowerIndex) {
  // Points on a line at integer positions; from position 5 the candidates at 4 and 6 tie.
  Matrix x(11, 1);
  for (int i = 0; i < 11; ++i) x(i, 0) = (i * 7) % 11;  // scrambled order
  KdTree tree(x);
  Eigen::Index five = 0;
  for (Eigen::Index i = 0; i < 11; ++i)
    if (x(i, 0) == 5.0) five = i;
  auto nb = tree.knn(five, 1);
  Eigen::Index four = -1, six = -1;
  for (Eigen::Index i = 0; i < 11; ++i) {
    if (x(i, 0) == 4.0) four = i;
    if (x(i, 0) == 6.0) six = i;
  }
  EXPECT_EQ(nb[0].index, std::min(four, six));
}

TEST(KnnGraph, CoincidentPair) {
  Matrix x = Matrix::Zero(2, 3);
  auto g = build_knn_graph(x, 1);
  ASSERT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.edges()[0].weight, 1.0);
}

TEST(KnnGraph, CollinearHandExample) {
  Matrix x(3, 1);
  x << 0, 1, 2;
  auto g = build_knn_graph(x, 1, SigmaMode::fixed_value(1.0));
  ASSERT_EQ(g.edge_count(), 2u);
  EXPECT_DOUBLE_EQ(*g.weight(0, 1), std::exp(-0.5));
  EXPECT_DOUBLE_EQ(*g.weight(1, 2), std::exp(-0.5));
  EXPECT_FALSE(g.weight(0, 2).has_value());
}

TEST(KnnGraph, FullKIsComplete) {
  const Matrix x = test::random_points(12, 2, 1);
  auto g = build_knn_graph(x, 11);
  EXPECT_EQ(g.edge_count(), 12u * 11u / 2u);
}

TEST(KnnGraph, KRangeChecked) {
  const Matrix x = test::random_points(5, 2, 1);
  EXPECT_THROW(build_knn_graph(x, 0), std::invalid_argument);
  EXPECT_THROW(build_knn_graph(x, 5), std::invalid_argument);
  EXPECT_THROW(build_knn_graph(x, 2, SigmaMode::fixed_value(-1.0)), std::invalid_argument);
}

TEST(KnnGraph, UnionSymmetrizationAndAutoSigma) {
  const Matrix x = test::random_points(80, 2, 9);
  const std::size_t k = 4;
  auto g = build_knn_graph(x, k);
  KdTree tree(x);
  std::set<std::pair<Eigen::Index, Eigen::Index>> expected;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (const auto& nb : tree.knn(i, k)) expected.insert({std::min(i, nb.index), std::max(i, nb.index)});
  ASSERT_EQ(g.edge_count(), expected.size());

  double mean_len = 0.0;
  for (const auto& e : g.edges()) {
    EXPECT_TRUE(expected.count({e.i, e.j}));
    mean_len += (x.row(e.i) - x.row(e.j)).norm();
  }
  mean_len /= static_cast<double>(g.edge_count());
  EXPECT_NEAR(g.sigma_d(), mean_len, 1e-14);

  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (const auto& e : g.neighbors(i)) {
      EXPECT_EQ(*g.weight(e.vertex, i), e.weight);  // exact symmetry
      EXPECT_NE(e.vertex, i);
      EXPECT_GT(e.weight, 0.0);
      EXPECT_LE(e.weight, 1.0);
      const double d = (x.row(i) - x.row(e.vertex)).norm();
      EXPECT_NEAR(e.weight, std::exp(-d * d / (2.0 * g.sigma_d() * g.sigma_d())), 1e-15);
    }
  }
}

TEST(Graph, FromEdgesValidation) {
  EXPECT_THROW(WeightedGraph::from_edges(3, {{0, 0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(WeightedGraph::from_edges(3, {{0, 3, 1.0}}), std::out_of_range);
  EXPECT_THROW(WeightedGraph::from_edges(3, {{0, 1, 1.5}}), std::invalid_argument);
  EXPECT_THROW(WeightedGraph::from_edges(3, {{0, 1, 1.0}, {1, 0, 1.0}}), std::invalid_argument);
}

TEST(Graph, ComponentsAndChecksum) {
  auto g = WeightedGraph::from_edges(4, {{0, 1, 1.0}, {2, 3, 1.0}});
  EXPECT_EQ(g.component_count(), 2u);
  EXPECT_FALSE(g.is_connected());
  EXPECT_TRUE(test::cycle_graph(5).is_connected());
  EXPECT_EQ(test::cycle_graph(5).checksum(), test::cycle_graph(5).checksum());
  EXPECT_NE(test::cycle_graph(5).checksum(), test::cycle_graph(5, 0.5).checksum());
}

TEST(Laplacian, SingleEdge) {
  const double w = 0.3;
  auto l = laplacian(WeightedGraph::from_edges(2, {{0, 1, w}}));
  Matrix dense(l.matrix);
  Matrix expected(2, 2);
  expected << w, -w, -w, w;
  EXPECT_TRUE(dense.isApprox(expected));
  Vector ev = dense_eigenvalues(l);
  EXPECT_NEAR(ev(0), 0.0, 1e-15);
  EXPECT_NEAR(ev(1), 2.0 * w, 1e-15);
}

TEST(Laplacian, ThreePath) {
  Vector ev = dense_eigenvalues(laplacian(test::path_graph(3)));
  EXPECT_NEAR(ev(0), 0.0, 1e-12);
  EXPECT_NEAR(ev(1), 1.0, 1e-12);
  EXPECT_NEAR(ev(2), 3.0, 1e-12);
}

TEST(Laplacian, Invariants) {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const Matrix x = test::random_points(60, 3, seed);
    auto g = build_knn_graph(x, 6);
    auto l = laplacian(g);
    Matrix dense(l.matrix);
    EXPECT_TRUE(dense.isApprox(dense.transpose()));
    for (Eigen::Index i = 0; i < dense.rows(); ++i) {
      EXPECT_NEAR(dense.row(i).sum(), 0.0, 1e-12);
      EXPECT_NEAR(dense(i, i), g.degree(i), 1e-14);
      for (Eigen::Index j = 0; j < dense.cols(); ++j)
        if (j != i) EXPECT_LE(dense(i, j), 0.0);
    }
    EXPECT_NEAR((l.matrix * Vector::Ones(60)).norm(), 0.0, 1e-12);

    // Quadratic form against direct edge summation; positive semidefinite.
    for (unsigned t = 0; t < 5; ++t) {
      Vector f = test::random_signal(60, 100 * seed + t);
      double edge_sum = 0.0;
      for (const auto& e : g.edges()) edge_sum += e.weight * std::pow(f(e.i) - f(e.j), 2);
      const double form = f.dot(l.matrix * f);
      EXPECT_NEAR(form, edge_sum, 1e-10 * edge_sum);
      EXPECT_GE(form, -1e-10 * f.squaredNorm());
    }

    // Simple zero eigenvalue with constant eigenvector when connected.
    if (g.is_connected()) {
      Eigen::SelfAdjointEigenSolver<Matrix> solver(dense);
      EXPECT_NEAR(solver.eigenvalues()(0), 0.0, 1e-10);
      EXPECT_GT(solver.eigenvalues()(1), 1e-10);
      Vector phi0 = solver.eigenvectors().col(0);
      EXPECT_NEAR(std::abs(phi0.dot(Vector::Ones(60) / std::sqrt(60.0))), 1.0, 1e-10);
      // d_max < lambda_N
      EXPECT_LT(l.degrees.maxCoeff(), solver.eigenvalues().maxCoeff());
    }
  }
}

TEST(LambdaMax, Examples) {
  double single = estimate_lambda_max(laplacian(WeightedGraph::from_edges(2, {{0, 1, 1.0}})));
  EXPECT_GE(single, 2.0);
  EXPECT_LE(single, 2.02 + 1e-12);
  double path = estimate_lambda_max(laplacian(test::path_graph(3)));
  EXPECT_GE(path, 3.0);
  EXPECT_LE(path, 3.03 + 1e-12);
  double pair = estimate_lambda_max(laplacian(WeightedGraph::from_edges(4, {{0, 1, 1.0}, {2, 3, 1.0}})));
  EXPECT_GE(pair, 2.0);
  EXPECT_LE(pair, 2.02 + 1e-12);
}

TEST(LambdaMax, UpperBoundWithinFivePercent) {
  for (unsigned seed = 0; seed < 8; ++seed) {
    auto l = laplacian(build_knn_graph(test::random_points(150, 2, seed), 5 + seed));
    const double truth = dense_eigenvalues(l).maxCoeff();
    EXPECT_GE(l.lambda_max_estimate, truth);
    EXPECT_LE(l.lambda_max_estimate, 1.05 * truth);
    EXPECT_NEAR(largest_eigenvalue(l), truth, 1e-6 * truth);
  }
}

TEST(TwoHop, Examples) {
  auto triangle = WeightedGraph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
  EXPECT_EQ(two_hop_max_degree(triangle), 0u);
  EXPECT_EQ(two_hop_max_degree(test::path_graph(5)), 2u);
  EXPECT_EQ(two_hop_max_degree(test::star_graph(4)), 3u);
}

TEST(TwoHop, MatchesBfsOracle) {
  auto g = build_knn_graph(test::random_points(70, 2, 3), 3);
  std::size_t best = 0;
  for (Eigen::Index v = 0; v < g.n_vertices(); ++v) {
    auto dist = bfs(g, v);
    best = std::max<std::size_t>(best, std::count(dist.begin(), dist.end(), 2));
  }
  EXPECT_EQ(two_hop_max_degree(g), best);
}

TEST(Neighborhood, Examples) {
  auto p5 = test::path_graph(5);
  EXPECT_EQ(neighborhood(p5, 0, 2), (std::vector<Eigen::Index>{2}));
  EXPECT_EQ(neighborhood(p5, 2, 1), (std::vector<Eigen::Index>{1, 3}));
  auto isolated = WeightedGraph::from_edges(3, {{0, 1, 1.0}});
  EXPECT_TRUE(neighborhood(isolated, 2, 1).empty());
  EXPECT_TRUE(neighborhood(isolated, 2, 4).empty());
  EXPECT_THROW(neighborhood(p5, 5, 1), std::out_of_range);
  EXPECT_THROW(neighborhood(p5, 0, 0), std::invalid_argument);
}

TEST(Neighborhood, MatchesBfsOracle) {
  auto g = build_knn_graph(test::random_points(70, 2, 8), 3);
  for (Eigen::Index v = 0; v < g.n_vertices(); v += 9) {
    auto dist = bfs(g, v);
    for (int r = 1; r <= 4; ++r) {
      std::vector<Eigen::Index> expected;
      for (Eigen::Index u = 0; u < g.n_vertices(); ++u)
        if (dist[static_cast<std::size_t>(u)] == r) expected.push_back(u);
      EXPECT_EQ(neighborhood(g, v, r), expected);
    }
    // r = 1 is exactly the adjacency list.
    std::vector<Eigen::Index> adj;
    for (const auto& e : g.neighbors(v)) adj.push_back(e.vertex);
    EXPECT_EQ(neighborhood(g, v, 1), adj);
  }
}

TEST(EdgeList, Dump) {
  test::TempDir dir("edges");
  save_edge_list(test::path_graph(3, 0.5), dir / "e.csv");
  std::ifstream in(dir / "e.csv");
  std::string all((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(all, "0,1,0.5\n1,2,0.5\n");
}
