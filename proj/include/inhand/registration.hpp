#ifndef INHAND_REGISTRATION_HPP
#define INHAND_REGISTRATION_HPP

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "inhand/contact.hpp"
#include "inhand/correspondence.hpp"
#include "inhand/features.hpp"
#include "inhand/frame.hpp"
#include "inhand/parallel.hpp"
#include "inhand/preprocess.hpp"
#include "inhand/spatial_index.hpp"

namespace inhand {

struct RegistrationConfig {
  double gamma_t = 15.0;
  double icp_max_dist = 5.0;       // mm
  int icp_max_iters = 50;
  double icp_convergence_eps = 1e-3;  // mm change in RMS
  bool use_contact = true;
  bool use_detector = false;  // detector pairs replace contact pairs
  bool use_icp = true;
  bool icp_reciprocal = true;  // keep only mutual nearest-neighbor pairs
  double metascan_voxel = 2.0;  // mm
  std::size_t normal_neighbors = kDefaultNormalNeighbors;
  Feat3dParams feat3d;
  ContactParams contact;
  WorkingVolume volume;
  int threads = 1;

  friend bool operator==(const RegistrationConfig&, const RegistrationConfig&) = default;

  void validate() const {
    if (!(gamma_t >= 0) || !std::isfinite(gamma_t)) throw Error(ErrorCode::kInvalidArgument, "gamma_t must be >= 0");
    if (!(icp_max_dist > 0)) throw Error(ErrorCode::kInvalidArgument, "icp_max_dist must be positive");
    if (icp_max_iters < 1) throw Error(ErrorCode::kInvalidArgument, "icp_max_iters must be >= 1");
    volume.validate();
  }
};

/// Weight each set carries in the sparse energy: unit for visual terms,
/// gamma_t for the hand term (contact or its detector replacement).
inline double sparse_weight(CorrespondenceTag tag, const RegistrationConfig& config) {
  switch (tag) {
    case CorrespondenceTag::kContact:
    case CorrespondenceTag::kDetector: return config.gamma_t;
    default: return 1.0;
  }
}

inline std::vector<WeightedPair> weighted_pairs(const std::vector<CorrespondenceSet>& sets) {
  std::vector<WeightedPair> pairs;
  for (const auto& s : sets)
    for (const auto& c : s.pairs()) pairs.push_back({c.source, c.target, s.weight()});
  return pairs;
}

/// Sum over sets of weight * sum |target - T(source)|^2.
inline double sparse_energy(const std::vector<CorrespondenceSet>& sets, const RigidTransform& t) {
  double e = 0.0;
  for (const auto& s : sets) e += s.weight() * s.energy(t);
  return e;
}

/// Exact minimizer of the weighted sparse energy. Set weights are taken from
/// the config by tag; the sets passed in are not modified.
inline RigidTransform align_sparse(std::vector<CorrespondenceSet> sets, const RegistrationConfig& config) {
  for (auto& s : sets) s.set_weight(sparse_weight(s.tag(), config));
  try {
    return solve_weighted_rigid(weighted_pairs(sets));
  } catch (const Error& e) {
    std::ostringstream msg;
    msg << "sparse alignment failed (" << e.what() << "); sets:";
    if (sets.empty()) msg << " none";
    for (const auto& s : sets)
      msg << ' ' << to_string(s.tag()) << '=' << s.size() << (s.weight() == 0 ? "(weight 0)" : "");
    throw Error(e.code(), msg.str());
  }
}

/// Accumulated world-frame model used as the ICP target. Points are added
/// first-come per metascan voxel, so every stored point is an original
/// observation and remembers its frame and index of origin.
class Metascan {
 public:
  explicit Metascan(double voxel = 2.0) : voxel_(voxel) {}

  const PointCloud& cloud() const { return cloud_; }
  const SpatialIndex& index() const { return index_; }
  const std::vector<int>& frame_ids() const { return frame_ids_; }
  const std::vector<std::size_t>& local_indices() const { return local_indices_; }
  bool empty() const { return cloud_.empty(); }
  std::size_t size() const { return cloud_.size(); }

  void add(int frame_id, const PointCloud& local, const RigidTransform& world_from_frame) {
    for (std::size_t i = 0; i < local.size(); ++i) {
      const Point3 p = world_from_frame(local.points[i]);
      if (voxel_ > 0) {
        const Key key{static_cast<long>(std::floor(p.x() / voxel_)), static_cast<long>(std::floor(p.y() / voxel_)),
                      static_cast<long>(std::floor(p.z() / voxel_))};
        if (!occupied_.insert(key).second) continue;
      }
      cloud_.points.push_back(p);
      if (local.has_normals()) cloud_.normals.push_back(world_from_frame.rotation * local.normals[i]);
      frame_ids_.push_back(frame_id);
      local_indices_.push_back(i);
    }
    if (cloud_.normals.size() != cloud_.points.size()) cloud_.normals.clear();
    if (!cloud_.empty()) index_ = SpatialIndex(cloud_.points);
  }

 private:
  struct Key {
    long x, y, z;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return static_cast<std::size_t>(k.x * 73856093L) ^ static_cast<std::size_t>(k.y * 19349663L) ^
             static_cast<std::size_t>(k.z * 83492791L);
    }
  };

  double voxel_;
  PointCloud cloud_;
  std::vector<int> frame_ids_;
  std::vector<std::size_t> local_indices_;
  std::unordered_set<Key, KeyHash> occupied_;
  SpatialIndex index_;
};

struct IcpResult {
  RigidTransform increment;  // maps the pre-aligned source onto the metascan
  int iterations = 0;
  std::size_t pairs = 0;
  double inlier_rms = 0.0;
  /// RMS over the accepted pairs at the start and after each accepted step.
  /// A step that would raise it is rejected, so the history never increases.
  std::vector<double> rms_history;
};

/// Point-to-point ICP against the metascan with a hard distance gate. With
/// `icp_reciprocal`, a pair survives only when the metascan point's nearest
/// source point is the query itself; points on newly exposed surface then
/// stop pulling the frame back onto the metascan's boundary.
inline IcpResult refine_icp(const PointCloud& source, const Metascan& metascan, const RegistrationConfig& config) {
  if (metascan.empty()) throw Error(ErrorCode::kEmptyInput, "metascan is empty");
  if (source.empty()) throw Error(ErrorCode::kEmptyInput, "ICP source is empty");
  const double gate = config.icp_max_dist;
  const auto& index = metascan.index();
  const auto& targets = metascan.cloud().points;
  const std::size_t n = source.size();

  struct Pairing {
    std::vector<WeightedPair> pairs;
    std::size_t gated = 0;
    double rms = 0.0;
  };
  std::vector<Neighbor> nn(n);
  std::vector<char> keep(n);
  auto associate = [&](const RigidTransform& t) {
    std::vector<Point3> moved(n);
    for (std::size_t i = 0; i < n; ++i) moved[i] = t(source.points[i]);
    parallel_for(n, config.threads, [&](std::size_t i) { nn[i] = index.nearest(moved[i]); });
    std::optional<SpatialIndex> back;
    if (config.icp_reciprocal) back.emplace(moved);
    parallel_for(n, config.threads, [&](std::size_t i) {
      keep[i] = nn[i].distance <= gate && (!back || back->nearest(targets[nn[i].index]).index == i);
    });
    Pairing out;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (nn[i].distance <= gate) ++out.gated;
      if (!keep[i]) continue;
      out.pairs.push_back({source.points[i], targets[nn[i].index], 1.0});
      sum += nn[i].distance * nn[i].distance;
    }
    out.rms = out.pairs.empty() ? 0.0 : std::sqrt(sum / out.pairs.size());
    return out;
  };

  IcpResult result;
  RigidTransform current;
  Pairing pairing = associate(current);
  if (pairing.gated == 0 || pairing.pairs.empty())
    throw Error(ErrorCode::kDivergence, "no ICP correspondences within " + std::to_string(gate) + " mm");
  result.rms_history.push_back(pairing.rms);
  result.pairs = pairing.pairs.size();
  result.inlier_rms = pairing.rms;

  for (int it = 0; it < config.icp_max_iters; ++it) {
    if (pairing.pairs.size() < 3) break;
    RigidTransform next;
    try {
      next = solve_weighted_rigid(pairing.pairs);
    } catch (const Error&) {
      break;
    }
    Pairing candidate = associate(next);
    result.iterations = it + 1;
    if (candidate.pairs.empty() || candidate.rms > pairing.rms) break;
    const double change = pairing.rms - candidate.rms;
    current = next;
    pairing = std::move(candidate);
    result.rms_history.push_back(pairing.rms);
    result.pairs = pairing.pairs.size();
    result.inlier_rms = pairing.rms;
    if (change < config.icp_convergence_eps) break;
  }
  result.increment = current;
  return result;
}

/// A frame after preprocessing: clipped clouds, normals, index, contacts.
struct PreparedFrame {
  int frame_index = 0;
  PointCloud object_cloud;
  SpatialIndex index;
  PosedHand hand_pose;
  std::optional<ContactState> contacts;
  std::string contact_error;
  std::optional<std::vector<Feat2dMatch>> feat2d_matches;
  std::optional<std::vector<DetectorBox>> detector_boxes;
  std::optional<DepthImage> depth;
};

inline PreparedFrame prepare_frame(const SegmentedFrame& frame, const CameraIntrinsics& k,
                                   const RegistrationConfig& config) {
  PreparedFrame out;
  out.frame_index = frame.frame_index;
  PointCloud clipped = clip_volume(frame.object_cloud, config.volume);
  if (clipped.size() < config.normal_neighbors)
    throw Error(ErrorCode::kInsufficientPoints,
                "frame " + std::to_string(frame.frame_index) + " has too few object points in the working volume");
  out.object_cloud = estimate_normals(clipped, config.normal_neighbors, config.threads);
  out.index = SpatialIndex(out.object_cloud.points);
  out.hand_pose = frame.hand_pose;
  if (!frame.hand_pose.vertices.empty()) {
    try {
      out.contacts = detect_contacts(frame.hand_pose, out.object_cloud, out.index, config.contact);
    } catch (const Error& e) {
      out.contact_error = e.what();
    }
  }
  out.feat2d_matches = frame.feat2d_matches;
  out.detector_boxes = frame.detector_boxes;
  if (frame.detector_boxes) out.depth = render_depth(out.object_cloud, k);
  return out;
}

/// Detector baseline: pairs back-projected object points at identical
/// in-box pixel offsets of same-label boxes in both frames.
inline CorrespondenceSet detector_correspondences(const PreparedFrame& source, const PreparedFrame& target,
                                                  const CameraIntrinsics& k) {
  CorrespondenceSet set(CorrespondenceTag::kDetector);
  if (!source.detector_boxes || !target.detector_boxes || !source.depth || !target.depth) return set;
  for (const auto& sb : *source.detector_boxes) {
    for (const auto& tb : *target.detector_boxes) {
      if (sb.label != tb.label) continue;
      const int w = std::min(sb.width, tb.width);
      const int h = std::min(sb.height, tb.height);
      for (int dv = 0; dv < h; ++dv)
        for (int du = 0; du < w; ++du) {
          const Pixel sp{double(sb.u_min + du), double(sb.v_min + dv)};
          const Pixel tp{double(tb.u_min + du), double(tb.v_min + dv)};
          if (!k.contains(sp) || !k.contains(tp)) continue;
          const float sd = source.depth->at(sb.u_min + du, sb.v_min + dv);
          const float td = target.depth->at(tb.u_min + du, tb.v_min + dv);
          if (!(sd > 0) || !(td > 0)) continue;
          set.add(back_project(sp, sd, k), back_project(tp, td, k));
        }
      break;
    }
  }
  return set;
}

struct FramePose {
  int frame_index = 0;
  RigidTransform world_from_frame;
  double sparse_residual = 0.0;  // RMS over all sparse pairs, mm
  double icp_residual = 0.0;     // inlier RMS after refinement, mm
  int icp_iterations = 0;
  std::map<std::string, std::size_t> correspondence_counts;
  double contact_threshold = 0.0;  // 0 when no contact state
  bool skipped = false;
  std::string status = "ok";

  friend bool operator==(const FramePose& a, const FramePose& b) {
    return a.frame_index == b.frame_index && a.world_from_frame == b.world_from_frame &&
           a.sparse_residual == b.sparse_residual && a.icp_residual == b.icp_residual &&
           a.icp_iterations == b.icp_iterations && a.correspondence_counts == b.correspondence_counts &&
           a.skipped == b.skipped && a.status == b.status;
  }
};

/// Correspondence sets for aligning `curr` (source) onto `prev` (target).
inline std::vector<CorrespondenceSet> build_correspondences(const PreparedFrame& prev, const PreparedFrame& curr,
                                                            const CameraIntrinsics& k,
                                                            const RegistrationConfig& config) {
  std::vector<CorrespondenceSet> sets;
  if (curr.feat2d_matches) sets.push_back(load_feat2d(*curr.feat2d_matches, k));
  sets.push_back(match_feat3d(curr.object_cloud, prev.object_cloud, config.feat3d, config.threads));
  if (config.use_detector) {
    sets.push_back(detector_correspondences(curr, prev, k));
  } else if (config.use_contact) {
    if (curr.contacts && prev.contacts)
      sets.push_back(contact_correspondences(curr.hand_pose, prev.hand_pose, *curr.contacts, *prev.contacts));
    else
      sets.emplace_back(CorrespondenceTag::kContact);
  }
  return sets;
}

/// Registers `curr` against the previous registered frame (sparse terms) and
/// then against the metascan (ICP), and appends it to the metascan. On a
/// registration error the returned pose is flagged as skipped and the
/// metascan is left untouched.
inline FramePose register_pair(const PreparedFrame& prev, const FramePose& prev_pose, const PreparedFrame& curr,
                               Metascan& metascan, const CameraIntrinsics& k, const RegistrationConfig& config) {
  FramePose pose;
  pose.frame_index = curr.frame_index;
  pose.world_from_frame = prev_pose.world_from_frame;
  if (curr.contacts) pose.contact_threshold = curr.contacts->threshold_used;
  try {
    auto sets = build_correspondences(prev, curr, k, config);
    for (const auto& s : sets) pose.correspondence_counts[to_string(s.tag())] = s.size();
    const RigidTransform prev_from_curr = align_sparse(sets, config);
    std::size_t total = 0;
    double energy = 0.0;
    for (const auto& s : sets) {
      total += s.size();
      energy += s.energy(prev_from_curr);
    }
    pose.sparse_residual = total ? std::sqrt(energy / total) : 0.0;
    RigidTransform world_from_curr = compose(prev_pose.world_from_frame, prev_from_curr);
    if (config.use_icp) {
      const auto icp = refine_icp(transform_cloud(world_from_curr, curr.object_cloud), metascan, config);
      world_from_curr = compose(icp.increment, world_from_curr);
      pose.icp_residual = icp.inlier_rms;
      pose.icp_iterations = icp.iterations;
      pose.correspondence_counts["icp"] = icp.pairs;
    }
    pose.world_from_frame = world_from_curr;
    metascan.add(curr.frame_index, curr.object_cloud, world_from_curr);
  } catch (const Error& e) {
    pose.skipped = true;
    pose.status = e.what();
  }
  return pose;
}

/// Mean and population standard deviation of |X' - T(X)| over annotated pairs.
inline std::pair<double, double> pairwise_annotation_error(const std::vector<std::pair<Point3, Point3>>& pairs,
                                                           const RigidTransform& t) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyInput, "no annotated pairs");
  std::vector<double> errs;
  errs.reserve(pairs.size());
  for (const auto& [x, xp] : pairs) errs.push_back((xp - t(x)).norm());
  double mean = 0.0;
  for (double e : errs) mean += e;
  mean /= errs.size();
  double var = 0.0;
  for (double e : errs) var += (e - mean) * (e - mean);
  return {mean, std::sqrt(var / errs.size())};
}

}  // namespace inhand

#endif  // INHAND_REGISTRATION_HPP
