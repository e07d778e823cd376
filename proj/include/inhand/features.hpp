#ifndef INHAND_FEATURES_HPP
#define INHAND_FEATURES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "inhand/correspondence.hpp"
#include "inhand/geometry.hpp"
#include "inhand/parallel.hpp"
#include "inhand/spatial_index.hpp"

namespace inhand {

struct Keypoint {
  Point3 position;
  double saliency = 0.0;  // smallest scatter eigenvalue, mm^2
  std::size_t index = 0;  // into the source cloud
};

struct Iss3dParams {
  double salient_radius = 6.0;
  double nonmax_radius = 4.0;
  double gamma21 = 0.975;
  double gamma32 = 0.975;
  std::size_t min_neighbors = 5;
  /// Absolute floor on the smallest eigenvalue (mm^2). Zero keeps every
  /// non-planar point eligible.
  double min_saliency = 0.0;

  friend bool operator==(const Iss3dParams&, const Iss3dParams&) = default;
};

namespace detail {

inline bool lex_less(const Point3& a, const Point3& b) {
  if (a.x() != b.x()) return a.x() < b.x();
  if (a.y() != b.y()) return a.y() < b.y();
  return a.z() < b.z();
}

/// Eigenvalues of the neighborhood scatter, descending.
inline Eigen::Vector3d scatter_eigenvalues(const PointCloud& cloud, const std::vector<Neighbor>& nbrs) {
  Point3 mean = Point3::Zero();
  for (const auto& n : nbrs) mean += cloud.points[n.index];
  mean /= static_cast<double>(nbrs.size());
  Matrix3 cov = Matrix3::Zero();
  for (const auto& n : nbrs) {
    const Vector3 d = cloud.points[n.index] - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(nbrs.size());
  const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Matrix3>(cov, Eigen::EigenvaluesOnly).eigenvalues();
  return {ev(2), ev(1), std::max(ev(0), 0.0)};
}

}  // namespace detail

/// Intrinsic-shape-signature keypoints: points whose scatter eigenvalues
/// l1 >= l2 >= l3 satisfy l2/l1 < gamma21 and l3/l2 < gamma32 with l3 > 0,
/// kept only where l3 is the maximum among eligible points within
/// nonmax_radius. Output is sorted by position, so it does not depend on the
/// input point order.
inline std::vector<Keypoint> detect_iss3d(const PointCloud& cloud, const Iss3dParams& params = {}, int threads = 1) {
  if (!(params.salient_radius > 0) || !(params.nonmax_radius > 0))
    throw Error(ErrorCode::kInvalidArgument, "ISS radii must be positive");
  if (!(params.gamma21 > 0 && params.gamma21 < 1) || !(params.gamma32 > 0 && params.gamma32 < 1))
    throw Error(ErrorCode::kInvalidArgument, "ISS ratio thresholds must lie in (0,1)");
  if (cloud.empty()) return {};

  const SpatialIndex index(cloud.points);
  std::vector<double> saliency(cloud.size(), -1.0);  // -1: not eligible
  parallel_for(cloud.size(), threads, [&](std::size_t i) {
    const auto nbrs = index.radius_search(cloud.points[i], params.salient_radius);
    if (nbrs.size() < params.min_neighbors) return;
    const Eigen::Vector3d l = detail::scatter_eigenvalues(cloud, nbrs);
    if (!(l(0) > 0) || !(l(1) > 0)) return;
    if (!(l(2) > 1e-10 * l(0)) || l(2) <= params.min_saliency) return;
    if (l(1) / l(0) < params.gamma21 && l(2) / l(1) < params.gamma32) saliency[i] = l(2);
  });

  std::vector<char> keep(cloud.size(), 0);
  parallel_for(cloud.size(), threads, [&](std::size_t i) {
    if (saliency[i] < 0) return;
    for (const auto& n : index.radius_search(cloud.points[i], params.nonmax_radius)) {
      if (n.index == i || saliency[n.index] < 0) continue;
      const double s = saliency[n.index];
      if (s > saliency[i] ||
          (s == saliency[i] && detail::lex_less(cloud.points[n.index], cloud.points[i])))
        return;
    }
    keep[i] = 1;
  });

  std::vector<Keypoint> out;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (keep[i]) out.push_back({cloud.points[i], saliency[i], i});
  std::sort(out.begin(), out.end(),
            [](const Keypoint& a, const Keypoint& b) { return detail::lex_less(a.position, b.position); });
  return out;
}

inline constexpr int kDescriptorShells = 4;
inline constexpr int kDescriptorAngleBins = 8;
inline constexpr int kDescriptorLumaBins = 8;
inline constexpr double kDescriptorAngleStep = 10.0 * std::numbers::pi / 180.0;  // last bin is open-ended

/// Normal-deviation histogram per radial shell (10 degree bins, each shell
/// normalized to unit mass), optionally followed by a luminance histogram;
/// L2-normalized, all-zero when the neighborhood is empty.
struct Descriptor {
  std::vector<double> values;

  double distance(const Descriptor& other) const {
    double d = 0.0;
    const std::size_t n = std::min(values.size(), other.values.size());
    for (std::size_t i = 0; i < n; ++i) d += (values[i] - other.values[i]) * (values[i] - other.values[i]);
    return std::sqrt(d);
  }

  bool is_zero() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
  }
};

inline Descriptor describe(const PointCloud& cloud, const SpatialIndex& index, const Keypoint& keypoint,
                           double radius) {
  if (!cloud.has_normals()) throw Error(ErrorCode::kInvalidArgument, "describe requires normals");
  const bool with_color = cloud.has_colors();
  Descriptor d;
  d.values.assign(kDescriptorShells * kDescriptorAngleBins + (with_color ? kDescriptorLumaBins : 0), 0.0);
  const Vector3 kn = cloud.normals[keypoint.index];
  std::size_t count = 0;
  for (const auto& nb : index.radius_search(keypoint.position, radius)) {
    if (nb.index == keypoint.index) continue;
    const int shell = std::min(kDescriptorShells - 1, static_cast<int>(nb.distance / radius * kDescriptorShells));
    const double angle = std::acos(std::clamp(kn.dot(cloud.normals[nb.index]), -1.0, 1.0));
    const int bin = std::min(kDescriptorAngleBins - 1, static_cast<int>(angle / kDescriptorAngleStep));
    d.values[shell * kDescriptorAngleBins + bin] += 1.0;
    if (with_color) {
      const Vector3& rgb = cloud.colors[nb.index];
      const double luma = std::clamp(0.299 * rgb.x() + 0.587 * rgb.y() + 0.114 * rgb.z(), 0.0, 1.0);
      const int lbin = std::min(kDescriptorLumaBins - 1, static_cast<int>(luma * kDescriptorLumaBins));
      d.values[kDescriptorShells * kDescriptorAngleBins + lbin] += 1.0;
    }
    ++count;
  }
  if (count == 0) return d;
  for (int shell = 0; shell < kDescriptorShells; ++shell) {
    double sum = 0.0;
    for (int b = 0; b < kDescriptorAngleBins; ++b) sum += d.values[shell * kDescriptorAngleBins + b];
    if (sum > 0)
      for (int b = 0; b < kDescriptorAngleBins; ++b) d.values[shell * kDescriptorAngleBins + b] /= sum;
  }
  double norm = 0.0;
  for (double v : d.values) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : d.values) v /= norm;
  return d;
}

inline Descriptor describe(const PointCloud& cloud, const Keypoint& keypoint, double radius) {
  return describe(cloud, SpatialIndex(cloud.points), keypoint, radius);
}

struct Feat3dParams {
  Iss3dParams iss;
  double descriptor_radius = 10.0;
  double ratio = 0.8;

  friend bool operator==(const Feat3dParams&, const Feat3dParams&) = default;
};

namespace detail {

struct DescribedKeypoints {
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;
};

inline DescribedKeypoints describe_all(const PointCloud& cloud, const Feat3dParams& params, int threads) {
  DescribedKeypoints out;
  if (cloud.empty()) return out;
  auto kps = detect_iss3d(cloud, params.iss, threads);
  const SpatialIndex index(cloud.points);
  std::vector<Descriptor> descs(kps.size());
  parallel_for(kps.size(), threads,
               [&](std::size_t i) { descs[i] = describe(cloud, index, kps[i], params.descriptor_radius); });
  for (std::size_t i = 0; i < kps.size(); ++i) {
    if (descs[i].is_zero()) continue;
    out.keypoints.push_back(kps[i]);
    out.descriptors.push_back(std::move(descs[i]));
  }
  return out;
}

struct BestTwo {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  double second_d = std::numeric_limits<double>::infinity();

  bool passes(double ratio) const {
    return std::isfinite(best_d) && second_d > 0 && best_d < ratio * second_d;
  }
};

inline std::vector<BestTwo> nearest_two(const std::vector<Descriptor>& from, const std::vector<Descriptor>& to,
                                        int threads) {
  std::vector<BestTwo> out(from.size());
  parallel_for(from.size(), threads, [&](std::size_t i) {
    BestTwo b;
    for (std::size_t j = 0; j < to.size(); ++j) {
      const double d = from[i].distance(to[j]);
      if (d < b.best_d) {
        b.second_d = b.best_d;
        b.best_d = d;
        b.best = j;
      } else if (d < b.second_d) {
        b.second_d = d;
      }
    }
    out[i] = b;
  });
  return out;
}

}  // namespace detail

/// Matches keypoint descriptors between two clouds: mutual nearest
/// neighbors that also pass the best/second-best ratio test in both
/// directions. Empty results are expected on featureless surfaces.
inline CorrespondenceSet match_feat3d(const PointCloud& source, const PointCloud& target,
                                      const Feat3dParams& params = {}, int threads = 1) {
  CorrespondenceSet set(CorrespondenceTag::kFeat3d);
  if (source.empty() || target.empty()) return set;
  if (!source.has_normals() || !target.has_normals())
    throw Error(ErrorCode::kInvalidArgument, "feature matching requires normals");
  const auto src = detail::describe_all(source, params, threads);
  const auto dst = detail::describe_all(target, params, threads);
  if (src.descriptors.empty() || dst.descriptors.empty()) return set;
  const auto forward = detail::nearest_two(src.descriptors, dst.descriptors, threads);
  const auto backward = detail::nearest_two(dst.descriptors, src.descriptors, threads);
  for (std::size_t i = 0; i < forward.size(); ++i) {
    const auto& f = forward[i];
    if (!f.passes(params.ratio)) continue;
    const auto& b = backward[f.best];
    if (b.best != i || !b.passes(params.ratio)) continue;
    set.add(src.keypoints[i].position, dst.keypoints[f.best].position);
  }
  return set;
}

/// One line of a 2D match sidecar: a pixel in the current (source) frame and
/// its match in the previous (target) frame, each with its depth in mm.
struct Feat2dMatch {
  Pixel source;
  double source_depth = 0.0;
  Pixel target;
  double target_depth = 0.0;
};

/// Parses `u v depth u' v' depth'` lines; `#` starts a comment.
inline std::vector<Feat2dMatch> parse_feat2d(std::istream& in, const std::string& origin = "<stream>") {
  std::vector<Feat2dMatch> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<double> vals;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        vals.push_back(v);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kParse, origin + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
    }
    if (vals.empty()) continue;
    if (vals.size() != 6)
      throw Error(ErrorCode::kParse, origin + ":" + std::to_string(lineno) + ": expected 6 fields, got " +
                                         std::to_string(vals.size()));
    out.push_back({{vals[0], vals[1]}, vals[2], {vals[3], vals[4]}, vals[5]});
  }
  return out;
}

inline std::vector<Feat2dMatch> read_feat2d_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open feature match file " + path);
  return parse_feat2d(in, path);
}

/// Back-projects 2D matches into a feat2d set, dropping pairs with missing
/// depth or pixels outside the image.
inline CorrespondenceSet load_feat2d(const std::vector<Feat2dMatch>& matches, const CameraIntrinsics& k) {
  CorrespondenceSet set(CorrespondenceTag::kFeat2d);
  for (const auto& m : matches) {
    if (!(m.source_depth > 0) || !(m.target_depth > 0)) continue;
    if (!k.contains(m.source) || !k.contains(m.target)) continue;
    set.add(back_project(m.source, m.source_depth, k), back_project(m.target, m.target_depth, k));
  }
  return set;
}

inline void write_feat2d(std::ostream& out, const std::vector<Feat2dMatch>& matches) {
  out << "# u v depth u' v' depth'\n";
  out.precision(17);
  for (const auto& m : matches)
    out << m.source.u << ' ' << m.source.v << ' ' << m.source_depth << ' ' << m.target.u << ' ' << m.target.v
        << ' ' << m.target_depth << '\n';
}

}  // namespace inhand

#endif  // INHAND_FEATURES_HPP
