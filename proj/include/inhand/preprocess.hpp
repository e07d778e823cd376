#ifndef INHAND_PREPROCESS_HPP
#define INHAND_PREPROCESS_HPP

#include <cmath>
#include <map>
#include <tuple>

#include "inhand/geometry.hpp"
#include "inhand/parallel.hpp"
#include "inhand/spatial_index.hpp"

namespace inhand {

/// Axis-aligned working volume in camera coordinates (mm). The default is
/// the short-range volume of a Carmine-class structured-light sensor.
struct WorkingVolume {
  Point3 min{-100.0, -140.0, 400.0};
  Point3 max{100.0, 220.0, 1000.0};

  void validate() const {
    if (!(min.array() < max.array()).all())
      throw Error(ErrorCode::kInvalidArgument, "working volume min must be below max on every axis");
  }

  bool contains(const Point3& p) const { return (p.array() >= min.array()).all() && (p.array() <= max.array()).all(); }

  friend bool operator==(const WorkingVolume& a, const WorkingVolume& b) { return a.min == b.min && a.max == b.max; }
};

inline PointCloud clip_volume(const PointCloud& cloud, const WorkingVolume& vol) {
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (vol.contains(cloud.points[i])) out.push_from(cloud, i);
  return out;
}

inline constexpr std::size_t kDefaultNormalNeighbors = 16;

/// PCA normals over the k nearest neighbors, oriented toward the sensor at
/// the origin. Replaces any normals already present.
inline PointCloud estimate_normals(const PointCloud& cloud, std::size_t k = kDefaultNormalNeighbors,
                                   int threads = 1) {
  if (k < 3 || cloud.size() < k)
    throw Error(ErrorCode::kInsufficientPoints,
                "normal estimation needs at least k=" + std::to_string(k) + " points, got " +
                    std::to_string(cloud.size()));
  const SpatialIndex index(cloud.points);
  PointCloud out = cloud;
  out.normals.assign(cloud.size(), Vector3::Zero());
  std::vector<char> degenerate(cloud.size(), 0);
  parallel_for(cloud.size(), threads, [&](std::size_t i) {
    const auto nbrs = index.knn(cloud.points[i], k);
    Point3 mean = Point3::Zero();
    for (const auto& n : nbrs) mean += cloud.points[n.index];
    mean /= static_cast<double>(nbrs.size());
    Matrix3 cov = Matrix3::Zero();
    for (const auto& n : nbrs) {
      const Vector3 d = cloud.points[n.index] - mean;
      cov.noalias() += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Matrix3> eig(cov);
    const auto& ev = eig.eigenvalues();
    if (!(ev(2) > 0) || ev(1) <= 1e-12 * ev(2)) {
      degenerate[i] = 1;
      return;
    }
    Vector3 n = eig.eigenvectors().col(0).normalized();
    if (n.dot(-cloud.points[i]) < 0) n = -n;
    out.normals[i] = n;
  });
  for (char d : degenerate)
    if (d) throw Error(ErrorCode::kDegenerateConfiguration, "neighborhood is collinear; normal undefined");
  return out;
}

/// One representative per occupied voxel: the point closest to the voxel's
/// centroid. Output order follows the first point seen in each voxel.
inline PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
  if (!(voxel > 0)) return cloud;
  struct Cell {
    std::size_t first;
    Point3 sum = Point3::Zero();
    std::size_t count = 0;
    std::vector<std::size_t> members;
  };
  std::map<std::tuple<long, long, long>, std::size_t> lookup;
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    const auto key = std::make_tuple(static_cast<long>(std::floor(p.x() / voxel)),
                                     static_cast<long>(std::floor(p.y() / voxel)),
                                     static_cast<long>(std::floor(p.z() / voxel)));
    auto [it, inserted] = lookup.try_emplace(key, cells.size());
    if (inserted) cells.push_back(Cell{i, Point3::Zero(), 0, {}});
    Cell& c = cells[it->second];
    c.sum += p;
    ++c.count;
    c.members.push_back(i);
  }
  PointCloud out;
  for (const Cell& c : cells) {
    const Point3 mean = c.sum / static_cast<double>(c.count);
    std::size_t best = c.members.front();
    double best_d = (cloud.points[best] - mean).squaredNorm();
    for (std::size_t m : c.members) {
      const double d = (cloud.points[m] - mean).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = m;
      }
    }
    out.push_from(cloud, best);
  }
  return out;
}

}  // namespace inhand

#endif  // INHAND_PREPROCESS_HPP
