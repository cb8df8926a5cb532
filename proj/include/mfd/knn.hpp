#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace mfd {

struct Neighbor {
  Eigen::Index index;
  double distance;
};

// Exact k-nearest-neighbor search over the rows of a point matrix (kd-tree).
// Results are ordered by (distance, index), so equal distances resolve to the lower index.
class KdTree {
 public:
  explicit KdTree(const Eigen::Ref<const Eigen::MatrixXd>& points, std::size_t leaf_size = 16);

  // k nearest rows to row `query`, excluding `query` itself.
  std::vector<Neighbor> knn(Eigen::Index query, std::size_t k) const;

  // k nearest rows to an arbitrary point.
  std::vector<Neighbor> knn(const Eigen::Ref<const Eigen::VectorXd>& point, std::size_t k) const;

  Eigen::Index size() const { return n_; }

 private:
  struct Node {
    std::size_t begin;
    std::size_t end;
    int split_dim;  // -1 for leaves
    double split_value;
    std::size_t left;
    std::size_t right;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  std::vector<Neighbor> search(const double* q, std::size_t k, Eigen::Index exclude) const;

  Eigen::Index n_;
  Eigen::Index dim_;
  std::size_t leaf_size_;
  std::vector<double> data_;  // row-major copy
  std::vector<Eigen::Index> order_;
  std::vector<Node> nodes_;
};

}  // namespace mfd
