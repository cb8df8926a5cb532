#include <mfd/knn.hpp>

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace mfd {

namespace {

struct Candidate {
  double dist2;
  Eigen::Index index;
  bool operator<(const Candidate& other) const {
    return dist2 < other.dist2 || (dist2 == other.dist2 && index < other.index);
  }
};

}  // namespace

KdTree::KdTree(const Eigen::Ref<const Eigen::MatrixXd>& points, std::size_t leaf_size)
  : n_(points.rows())
  , dim_(points.cols())
  , leaf_size_(std::max<std::size_t>(1, leaf_size))
  , data_(static_cast<std::size_t>(points.size()))
  , order_(static_cast<std::size_t>(points.rows())) {
  for (Eigen::Index i = 0; i < n_; ++i)
    for (Eigen::Index j = 0; j < dim_; ++j) data_[static_cast<std::size_t>(i * dim_ + j)] = points(i, j);
  for (Eigen::Index i = 0; i < n_; ++i) order_[static_cast<std::size_t>(i)] = i;
  if (n_ > 0) build(0, static_cast<std::size_t>(n_));
}

std::size_t KdTree::build(std::size_t begin, std::size_t end) {
  std::size_t id = nodes_.size();
  nodes_.push_back({begin, end, -1, 0.0, 0, 0});
  if (end - begin <= leaf_size_) return id;

  int best_dim = 0;
  double best_spread = -1.0;
  for (Eigen::Index d = 0; d < dim_; ++d) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = begin; i < end; ++i) {
      double v = data_[static_cast<std::size_t>(order_[i] * dim_ + d)];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = static_cast<int>(d);
    }
  }
  if (best_spread <= 0.0) return id;  // all points coincide

  std::size_t mid = begin + (end - begin) / 2;
  auto key = [&](Eigen::Index i) { return data_[static_cast<std::size_t>(i * dim_ + best_dim)]; };
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](Eigen::Index a, Eigen::Index b) { return key(a) < key(b); });
  double split = key(order_[mid]);

  std::size_t left = build(begin, mid);
  std::size_t right = build(mid, end);
  nodes_[id].split_dim = best_dim;
  nodes_[id].split_value = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<Neighbor> KdTree::search(const double* q, std::size_t k, Eigen::Index exclude) const {
  std::priority_queue<Candidate> heap;  // worst candidate on top
  if (k == 0 || nodes_.empty()) return {};

  auto visit = [&](auto&& self, std::size_t node_id) -> void {
    const Node& node = nodes_[node_id];
    if (node.split_dim < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        Eigen::Index idx = order_[i];
        if (idx == exclude) continue;
        const double* p = &data_[static_cast<std::size_t>(idx * dim_)];
        double d2 = 0.0;
        for (Eigen::Index d = 0; d < dim_; ++d) {
          double diff = p[d] - q[d];
          d2 += diff * diff;
        }
        Candidate c{d2, idx};
        if (heap.size() < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    double diff = q[node.split_dim] - node.split_value;
    std::size_t near = diff < 0.0 ? node.left : node.right;
    std::size_t far = diff < 0.0 ? node.right : node.left;
    self(self, near);
    // Points equal to the split value can sit on either side, so ties are still explored.
    if (heap.size() < k || diff * diff <= heap.top().dist2) self(self, far);
  };
  visit(visit, 0);

  std::vector<Neighbor> out(heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = {heap.top().index, std::sqrt(heap.top().dist2)};
    heap.pop();
  }
  return out;
}

std::vector<Neighbor> KdTree::knn(Eigen::Index query, std::size_t k) const {
  if (query < 0 || query >= n_) throw std::out_of_range("knn: query index out of range");
  return search(&data_[static_cast<std::size_t>(query * dim_)], k, query);
}

std::vector<Neighbor> KdTree::knn(const Eigen::Ref<const Eigen::VectorXd>& point, std::size_t k) const {
  if (point.size() != dim_) throw std::invalid_argument("knn: dimension mismatch");
  std::vector<double> q(point.data(), point.data() + point.size());
  return search(q.data(), k, -1);
}

}  // namespace mfd
