#ifndef INHAND_GEOMETRY_HPP
#define INHAND_GEOMETRY_HPP

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "inhand/error.hpp"

namespace inhand {

/// A position in camera or world coordinates, in millimeters.
using Point3 = Eigen::Vector3d;
using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

/// Points with optional per-point normals and RGB colors in [0,1].
/// Optional channels are either empty or exactly as long as `points`.
struct PointCloud {
  std::vector<Point3> points;
  std::vector<Vector3> normals;
  std::vector<Vector3> colors;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !points.empty() && normals.size() == points.size(); }
  bool has_colors() const { return !points.empty() && colors.size() == points.size(); }

  void validate() const {
    if (!normals.empty() && normals.size() != points.size())
      throw Error(ErrorCode::kInvalidArgument, "normal channel length differs from point count");
    if (!colors.empty() && colors.size() != points.size())
      throw Error(ErrorCode::kInvalidArgument, "color channel length differs from point count");
    for (const auto& p : points)
      if (!p.allFinite()) throw Error(ErrorCode::kInvalidArgument, "non-finite point coordinate");
    for (const auto& n : normals)
      if (std::abs(n.norm() - 1.0) > 1e-6) throw Error(ErrorCode::kInvalidArgument, "normal is not unit length");
  }

  /// Appends point `i` of `other`, carrying whichever channels both clouds share.
  void push_from(const PointCloud& other, std::size_t i) {
    points.push_back(other.points[i]);
    if (other.has_normals()) normals.push_back(other.normals[i]);
    if (other.has_colors()) colors.push_back(other.colors[i]);
  }
};

/// Projects a near-rotation onto SO(3).
inline Matrix3 orthonormalize(const Matrix3& m) {
  Eigen::JacobiSVD<Matrix3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Matrix3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return r;
}

inline double orthonormality_drift(const Matrix3& r) {
  return (r.transpose() * r - Matrix3::Identity()).cwiseAbs().maxCoeff();
}

/// Rigid motion x -> rotation * x + translation.
struct RigidTransform {
  Matrix3 rotation = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();

  static RigidTransform identity() { return {}; }

  static RigidTransform from_axis_angle(const Vector3& axis, double angle_rad,
                                        const Vector3& translation = Vector3::Zero()) {
    RigidTransform t;
    t.rotation = Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
    t.translation = translation;
    return t;
  }

  Point3 operator()(const Point3& p) const { return rotation * p + translation; }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }

  bool is_valid(double tol = 1e-9) const {
    return rotation.allFinite() && translation.allFinite() && orthonormality_drift(rotation) <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
  }

  friend bool operator==(const RigidTransform& a, const RigidTransform& b) {
    return a.rotation == b.rotation && a.translation == b.translation;
  }
};

/// Returns the transform that applies `b` first, then `a`.
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform c;
  c.rotation = a.rotation * b.rotation;
  c.translation = a.rotation * b.translation + a.translation;
  if (orthonormality_drift(c.rotation) > 1e-9) c.rotation = orthonormalize(c.rotation);
  return c;
}

inline Point3 apply(const RigidTransform& t, const Point3& p) { return t(p); }

/// Rotation angle of R in radians, in [0, pi].
inline double rotation_angle(const Matrix3& r) {
  const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Maps positions and rotates normals; colors pass through.
inline PointCloud transform_cloud(const RigidTransform& t, const PointCloud& cloud) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(t(p));
  if (cloud.has_normals()) {
    out.normals.reserve(cloud.size());
    for (const auto& n : cloud.normals) out.normals.push_back(t.rotation * n);
  }
  if (cloud.has_colors()) out.colors = cloud.colors;
  return out;
}

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// Pinhole camera parameters, all in pixels.
struct CameraIntrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  int width = 640;
  int height = 480;

  void validate() const {
    if (!(fx > 0) || !(fy > 0)) throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
    if (!(cx >= 0 && cx < width) || !(cy >= 0 && cy < height))
      throw Error(ErrorCode::kInvalidArgument, "principal point outside the image");
  }

  bool contains(const Pixel& px) const {
    return px.u >= 0 && px.v >= 0 && px.u <= width - 1 && px.v <= height - 1;
  }

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

inline Point3 back_project(const Pixel& px, double depth_mm, const CameraIntrinsics& k) {
  if (!(depth_mm > 0) || !std::isfinite(depth_mm))
    throw Error(ErrorCode::kInvalidDepth, "depth must be positive, got " + std::to_string(depth_mm));
  if (!k.contains(px)) throw Error(ErrorCode::kInvalidArgument, "pixel outside the image bounds");
  return {depth_mm * (px.u - k.cx) / k.fx, depth_mm * (px.v - k.cy) / k.fy, depth_mm};
}

/// Inverse of back_project for points in front of the camera.
inline Pixel project(const Point3& p, const CameraIntrinsics& k) {
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

struct WeightedPair {
  Point3 source;
  Point3 target;
  double weight = 1.0;
};

/// Global minimizer of sum_i w_i |target_i - (R source_i + t)|^2 over SO(3) x R^3.
///
/// Closed form: SVD of the weighted cross-covariance with the determinant
/// correction that excludes reflections. Pairs with zero weight are ignored.
/// Throws kUnderConstrained with fewer than three weighted pairs and
/// kDegenerateConfiguration when the weighted sources are collinear or
/// coincident (singular-value ratio below 1e-9).
inline RigidTransform solve_weighted_rigid(std::span<const WeightedPair> pairs) {
  double total = 0.0;
  std::size_t effective = 0;
  Vector3 src_mean = Vector3::Zero();
  Vector3 dst_mean = Vector3::Zero();
  for (const auto& p : pairs) {
    if (p.weight < 0 || !std::isfinite(p.weight))
      throw Error(ErrorCode::kInvalidArgument, "pair weights must be finite and nonnegative");
    if (p.weight == 0) continue;
    ++effective;
    total += p.weight;
    src_mean += p.weight * p.source;
    dst_mean += p.weight * p.target;
  }
  if (effective < 3)
    throw Error(ErrorCode::kUnderConstrained,
                "need at least 3 weighted pairs, got " + std::to_string(effective));
  src_mean /= total;
  dst_mean /= total;

  Matrix3 cross = Matrix3::Zero();
  Matrix3 scatter = Matrix3::Zero();
  for (const auto& p : pairs) {
    if (p.weight == 0) continue;
    const Vector3 s = p.source - src_mean;
    const Vector3 d = p.target - dst_mean;
    cross.noalias() += p.weight * s * d.transpose();
    scatter.noalias() += p.weight * s * s.transpose();
  }

  Eigen::SelfAdjointEigenSolver<Matrix3> eig(scatter);
  const double largest = eig.eigenvalues()(2);
  const double middle = std::max(eig.eigenvalues()(1), 0.0);
  if (!(largest > 0) || std::sqrt(middle / largest) < 1e-9)
    throw Error(ErrorCode::kDegenerateConfiguration, "source points are collinear or coincident");

  Eigen::JacobiSVD<Matrix3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix3& u = svd.matrixU();
  const Matrix3& v = svd.matrixV();
  Matrix3 correction = Matrix3::Identity();
  if ((v * u.transpose()).determinant() < 0) correction(2, 2) = -1.0;

  RigidTransform t;
  t.rotation = v * correction * u.transpose();
  t.translation = dst_mean - t.rotation * src_mean;
  return t;
}

inline RigidTransform solve_weighted_rigid(const std::vector<WeightedPair>& pairs) {
  return solve_weighted_rigid(std::span<const WeightedPair>(pairs.data(), pairs.size()));
}

/// sum_i w_i |target_i - T(source_i)|^2
inline double weighted_objective(std::span<const WeightedPair> pairs, const RigidTransform& t) {
  double e = 0.0;
  for (const auto& p : pairs) e += p.weight * (p.target - t(p.source)).squaredNorm();
  return e;
}

inline double weighted_objective(const std::vector<WeightedPair>& pairs, const RigidTransform& t) {
  return weighted_objective(std::span<const WeightedPair>(pairs.data(), pairs.size()), t);
}

struct Aabb {
  Point3 min = Point3::Constant(std::numeric_limits<double>::infinity());
  Point3 max = Point3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Point3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
};

inline Point3 centroid(const std::vector<Point3>& points) {
  if (points.empty()) throw Error(ErrorCode::kEmptyInput, "centroid of an empty point set");
  Point3 c = Point3::Zero();
  for (const auto& p : points) c += p;
  return c / static_cast<double>(points.size());
}

}  // namespace inhand

#endif  // INHAND_GEOMETRY_HPP
