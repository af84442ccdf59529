#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "sheetloc/core/point_cloud.hpp"

namespace sheetloc {

/// Spatial index over a point cloud for k-nearest-neighbor and radius
/// queries. Results are defined to be exactly what a brute-force scan
/// returns: ties at the k-th distance are broken by ascending point index,
/// and radius queries are inclusive (dist <= r).
///
/// Immutable after construction; queries are const and thread-safe.
class NeighborIndex {
 public:
  NeighborIndex() = default;

  explicit NeighborIndex(const std::vector<Vec3>& points) : points_(points) {
    build();
  }

  explicit NeighborIndex(const PointCloud& cloud) : points_(cloud.points) {
    build();
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Vec3>& points() const { return points_; }

  /// Indices of the k nearest points, ordered by (distance, index).
  std::vector<int> knn(const Vec3& query, int k) const {
    std::vector<int> out;
    if (empty() || k <= 0) return out;
    k = std::min<int>(k, static_cast<int>(points_.size()));

    // Bounded best-list ordered by (dist2, index); admission is strict
    // lexicographic improvement over the current worst entry.
    std::vector<std::pair<double, int>> best;
    best.reserve(k + 1);
    knn_recurse(root_, query, k, best);
    out.reserve(best.size());
    for (const auto& [d2, idx] : best) out.push_back(idx);
    return out;
  }

  /// Indices of all points with dist <= radius, ascending by index.
  std::vector<int> radius(const Vec3& query, double r) const {
    std::vector<int> out;
    if (empty() || r < 0.0) return out;
    radius_recurse(root_, query, r * r, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Nearest neighbor as (index, distance); index -1 when empty.
  std::pair<int, double> nearest(const Vec3& query) const {
    auto idx = knn(query, 1);
    if (idx.empty()) return {-1, 0.0};
    return {idx[0], (points_[idx[0]] - query).norm()};
  }

  bool has_neighbor_within(const Vec3& query, double r) const {
    if (empty()) return false;
    return within_recurse(root_, query, r * r);
  }

 private:
  static constexpr int kLeafSize = 16;

  struct Node {
    int begin = 0;
    int end = 0;        // leaf: index range into order_
    int axis = -1;      // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
    Vec3 box_min = Vec3::Zero();
    Vec3 box_max = Vec3::Zero();
  };

  void build() {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.clear();
    if (!points_.empty()) {
      root_ = build_node(0, static_cast<int>(points_.size()));
    }
  }

  int build_node(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    node.box_min = Vec3::Constant(std::numeric_limits<double>::infinity());
    node.box_max = -node.box_min;
    for (int i = begin; i < end; ++i) {
      const Vec3& p = points_[order_[i]];
      node.box_min = node.box_min.cwiseMin(p);
      node.box_max = node.box_max.cwiseMax(p);
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) return id;

    int axis;
    (node.box_max - node.box_min).maxCoeff(&axis);
    if (node.box_max[axis] - node.box_min[axis] <= 0.0) return id;  // all equal

    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end, [&](int a, int b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    const double split = points_[order_[mid]][axis];
    const int left = build_node(begin, mid);
    const int right = build_node(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  double box_dist2(const Node& n, const Vec3& q) const {
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      double d = 0.0;
      if (q[a] < n.box_min[a]) d = n.box_min[a] - q[a];
      else if (q[a] > n.box_max[a]) d = q[a] - n.box_max[a];
      d2 += d * d;
    }
    return d2;
  }

  static bool better(const std::pair<double, int>& a,
                     const std::pair<double, int>& b) {
    return a.first < b.first || (a.first == b.first && a.second < b.second);
  }

  void knn_recurse(int node_id, const Vec3& q, int k,
                   std::vector<std::pair<double, int>>& best) const {
    const Node& n = nodes_[node_id];
    // Prune on <= so that equal-distance candidates with smaller indices
    // are still reachable.
    if (static_cast<int>(best.size()) == k &&
        box_dist2(n, q) > best.back().first) {
      return;
    }
    if (n.axis < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        const int idx = order_[i];
        const double d2 = (points_[idx] - q).squaredNorm();
        std::pair<double, int> cand{d2, idx};
        if (static_cast<int>(best.size()) < k) {
          best.insert(std::upper_bound(best.begin(), best.end(), cand, better),
                      cand);
        } else if (better(cand, best.back())) {
          best.insert(std::upper_bound(best.begin(), best.end(), cand, better),
                      cand);
          best.pop_back();
        }
      }
      return;
    }
    const bool left_first = q[n.axis] < n.split;
    knn_recurse(left_first ? n.left : n.right, q, k, best);
    knn_recurse(left_first ? n.right : n.left, q, k, best);
  }

  void radius_recurse(int node_id, const Vec3& q, double r2,
                      std::vector<int>& out) const {
    const Node& n = nodes_[node_id];
    if (box_dist2(n, q) > r2) return;
    if (n.axis < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        const int idx = order_[i];
        if ((points_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
      }
      return;
    }
    radius_recurse(n.left, q, r2, out);
    radius_recurse(n.right, q, r2, out);
  }

  bool within_recurse(int node_id, const Vec3& q, double r2) const {
    const Node& n = nodes_[node_id];
    if (box_dist2(n, q) > r2) return false;
    if (n.axis < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        if ((points_[order_[i]] - q).squaredNorm() <= r2) return true;
      }
      return false;
    }
    return within_recurse(n.left, q, r2) || within_recurse(n.right, q, r2);
  }

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace sheetloc
