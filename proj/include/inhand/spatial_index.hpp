#ifndef INHAND_SPATIAL_INDEX_HPP
#define INHAND_SPATIAL_INDEX_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "inhand/geometry.hpp"

namespace inhand {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Exact kd-tree over a copy of the indexed points. Read-only after
/// construction, so concurrent queries are safe. Ties in distance resolve to
/// the smaller point index, which keeps every query deterministic.
class SpatialIndex {
 public:
  SpatialIndex() = default;

  explicit SpatialIndex(std::vector<Point3> points) : points_(std::move(points)) {
    if (points_.empty()) throw Error(ErrorCode::kEmptyInput, "cannot index an empty cloud");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::uint32_t{0});
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Point3>& points() const { return points_; }

  Neighbor nearest(const Point3& q) const {
    if (points_.empty()) throw Error(ErrorCode::kEmptyInput, "query on an empty index");
    Neighbor best{0, std::numeric_limits<double>::infinity()};
    double best_sq = std::numeric_limits<double>::infinity();
    nearest_rec(0, q, best.index, best_sq);
    best.distance = std::sqrt(best_sq);
    return best;
  }

  /// All points with distance <= radius, ascending by (distance, index).
  std::vector<Neighbor> radius_search(const Point3& q, double radius) const {
    std::vector<Neighbor> out;
    if (points_.empty()) throw Error(ErrorCode::kEmptyInput, "query on an empty index");
    if (radius < 0) return out;
    radius_rec(0, q, radius * radius, out);
    for (auto& n : out) n.distance = std::sqrt(n.distance);
    std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
      return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
    });
    return out;
  }

  /// The k closest points, ascending by (distance, index).
  std::vector<Neighbor> knn(const Point3& q, std::size_t k) const {
    if (points_.empty()) throw Error(ErrorCode::kEmptyInput, "query on an empty index");
    k = std::min(k, points_.size());
    std::vector<Neighbor> heap;  // max-heap on squared distance
    heap.reserve(k + 1);
    knn_rec(0, q, k, heap);
    std::sort_heap(heap.begin(), heap.end(), heap_less);
    for (auto& n : heap) n.distance = std::sqrt(n.distance);
    return heap;
  }

 private:
  static constexpr std::uint32_t kLeafSize = 8;

  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    Aabb box;
  };

  static bool heap_less(const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  }

  static double box_sq_distance(const Aabb& box, const Point3& q) {
    const Vector3 d = (box.min - q).cwiseMax(q - box.max).cwiseMax(0.0);
    return d.squaredNorm();
  }

  std::int32_t build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({});
    Aabb box;
    for (std::uint32_t i = begin; i < end; ++i) box.extend(points_[order_[i]]);
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    nodes_[id].box = box;
    if (end - begin <= kLeafSize) return id;

    int axis = 0;
    (box.max - box.min).maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double pa = points_[a][axis], pb = points_[b][axis];
                       return pa < pb || (pa == pb && a < b);
                     });
    nodes_[id].axis = axis;
    nodes_[id].split = points_[order_[mid]][axis];
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void nearest_rec(std::int32_t id, const Point3& q, std::size_t& best, double& best_sq) const {
    const Node& n = nodes_[id];
    if (box_sq_distance(n.box, q) > best_sq) return;
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::uint32_t idx = order_[i];
        const double d = (points_[idx] - q).squaredNorm();
        if (d < best_sq || (d == best_sq && idx < best)) {
          best_sq = d;
          best = idx;
        }
      }
      return;
    }
    const bool go_left = q[n.axis] < n.split;
    nearest_rec(go_left ? n.left : n.right, q, best, best_sq);
    nearest_rec(go_left ? n.right : n.left, q, best, best_sq);
  }

  void radius_rec(std::int32_t id, const Point3& q, double r_sq, std::vector<Neighbor>& out) const {
    const Node& n = nodes_[id];
    if (box_sq_distance(n.box, q) > r_sq) return;
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::uint32_t idx = order_[i];
        const double d = (points_[idx] - q).squaredNorm();
        if (d <= r_sq) out.push_back({idx, d});
      }
      return;
    }
    radius_rec(n.left, q, r_sq, out);
    radius_rec(n.right, q, r_sq, out);
  }

  void knn_rec(std::int32_t id, const Point3& q, std::size_t k, std::vector<Neighbor>& heap) const {
    const Node& n = nodes_[id];
    if (heap.size() == k && box_sq_distance(n.box, q) > heap.front().distance) return;
    if (n.axis < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const Neighbor cand{order_[i], (points_[order_[i]] - q).squaredNorm()};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end(), heap_less);
        } else if (heap_less(cand, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), heap_less);
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end(), heap_less);
        }
      }
      return;
    }
    const bool go_left = q[n.axis] < n.split;
    knn_rec(go_left ? n.left : n.right, q, k, heap);
    knn_rec(go_left ? n.right : n.left, q, k, heap);
  }

  std::vector<Point3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

inline SpatialIndex build_index(const PointCloud& cloud) { return SpatialIndex(cloud.points); }

}  // namespace inhand

#endif  // INHAND_SPATIAL_INDEX_HPP
