#ifndef INHAND_PIPELINE_HPP
#define INHAND_PIPELINE_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "inhand/registration.hpp"
#include "inhand/sequence.hpp"

namespace inhand {

struct ReconstructOptions {
  RegistrationConfig registration;
  TsdfConfig tsdf;
  double min_component_fraction = 0.01;
  bool close_holes = true;
  int smooth_iterations = 3;
  double smooth_lambda = 0.5;

  friend bool operator==(const ReconstructOptions&, const ReconstructOptions&) = default;

  void validate() const {
    registration.validate();
    tsdf.validate();
    if (smooth_iterations < 0) throw Error(ErrorCode::kInvalidArgument, "smooth iterations must be >= 0");
    if (smooth_iterations > 0 && !(smooth_lambda > 0 && smooth_lambda < 1))
      throw Error(ErrorCode::kInvalidArgument, "smooth lambda must lie in (0,1)");
  }
};

struct ReconstructionResult {
  std::vector<FramePose> trajectory;
  TriangleMesh mesh;
  std::optional<TsdfVolume> volume;
  std::size_t metascan_points = 0;
  int last_good_frame = 0;
  std::size_t skipped_frames = 0;
  std::string mesh_error;  // empty when meshing succeeded

  bool registered_any_pair() const { return trajectory.size() <= 1 || skipped_frames + 1 < trajectory.size(); }
};

/// Registers every frame in order (skipped frames are flagged and left out
/// of the metascan and the volume), fuses the registered clouds into a TSDF
/// centered on frame 0, and extracts a closed, lightly smoothed mesh.
/// Registration never throws; meshing failures are reported in mesh_error.
inline ReconstructionResult reconstruct(const Sequence& seq, const ReconstructOptions& options = {}) {
  options.validate();
  if (seq.frames.empty()) throw Error(ErrorCode::kEmptyInput, "sequence has no frames");
  const RegistrationConfig& config = options.registration;

  std::vector<PreparedFrame> prepared;
  prepared.reserve(seq.frames.size());
  for (const auto& f : seq.frames) prepared.push_back(prepare_frame(f, seq.intrinsics, config));

  ReconstructionResult out;
  Metascan metascan(config.metascan_voxel);
  FramePose first;
  first.frame_index = prepared.front().frame_index;
  if (prepared.front().contacts) first.contact_threshold = prepared.front().contacts->threshold_used;
  metascan.add(first.frame_index, prepared.front().object_cloud, first.world_from_frame);
  out.trajectory.push_back(first);

  std::size_t last_good = 0;
  for (std::size_t i = 1; i < prepared.size(); ++i) {
    FramePose pose = register_pair(prepared[last_good], out.trajectory[last_good], prepared[i], metascan,
                                   seq.intrinsics, config);
    if (pose.skipped) {
      ++out.skipped_frames;
    } else {
      last_good = i;
    }
    out.trajectory.push_back(std::move(pose));
  }
  out.last_good_frame = out.trajectory[last_good].frame_index;
  out.metascan_points = metascan.size();

  TsdfVolume volume = TsdfVolume::centered_at(centroid(prepared.front().object_cloud.points), options.tsdf);
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    if (out.trajectory[i].skipped) continue;
    integrate(volume, prepared[i].object_cloud, out.trajectory[i].world_from_frame, config.threads);
  }
  try {
    TriangleMesh mesh = extract_mesh(volume, options.min_component_fraction);
    if (options.close_holes) mesh = fill_holes(mesh);
    mesh = laplacian_smooth(mesh, options.smooth_iterations, options.smooth_lambda);
    mesh.normals = vertex_normals(mesh);
    out.mesh = std::move(mesh);
  } catch (const Error& e) {
    out.mesh_error = e.what();
  }
  out.volume = std::move(volume);
  return out;
}

/// Ground-truth world_from_frame_k: world is the camera frame of frame 0.
inline RigidTransform ground_truth_world_from_frame(const Sequence& seq, std::size_t k) {
  if (k >= seq.gt_object_poses.size()) throw Error(ErrorCode::kInvalidArgument, "no ground-truth pose for frame");
  return compose(seq.gt_object_poses.front(), seq.gt_object_poses[k].inverse());
}

struct PoseError {
  int frame_index = 0;  // the later frame of the pair
  double rotation_deg = 0.0;
  double translation_mm = 0.0;  // displacement error at the object center
};

/// Per consecutive frame pair (k-1, k): the angle of R_est * R_gt^T of the
/// relative motion, and the distance between where the estimated and the
/// true relative motion carry the object center. Skipped frames keep the
/// last good pose, so their pairs count as errors.
inline std::vector<PoseError> per_pair_pose_errors(const Sequence& seq, const std::vector<FramePose>& trajectory) {
  if (seq.gt_object_poses.size() < trajectory.size())
    throw Error(ErrorCode::kInvalidArgument, "sequence lacks ground-truth poses");
  std::vector<PoseError> out;
  for (std::size_t k = 1; k < trajectory.size(); ++k) {
    const RigidTransform est = compose(trajectory[k - 1].world_from_frame.inverse(), trajectory[k].world_from_frame);
    const RigidTransform gt = compose(seq.gt_object_poses[k - 1], seq.gt_object_poses[k].inverse());
    const Point3 center = seq.gt_object_poses[k].translation;
    PoseError e;
    e.frame_index = trajectory[k].frame_index;
    e.rotation_deg = rad_to_deg(rotation_angle(est.rotation * gt.rotation.transpose()));
    e.translation_mm = (est(center) - gt(center)).norm();
    out.push_back(e);
  }
  return out;
}

struct PoseErrorSummary {
  double mean_rotation_deg = 0.0;
  double mean_translation_mm = 0.0;
  double max_rotation_deg = 0.0;
  double max_translation_mm = 0.0;
};

inline PoseErrorSummary summarize(const std::vector<PoseError>& errors) {
  PoseErrorSummary s;
  if (errors.empty()) return s;
  for (const auto& e : errors) {
    s.mean_rotation_deg += e.rotation_deg;
    s.mean_translation_mm += e.translation_mm;
    s.max_rotation_deg = std::max(s.max_rotation_deg, e.rotation_deg);
    s.max_translation_mm = std::max(s.max_translation_mm, e.translation_mm);
  }
  s.mean_rotation_deg /= errors.size();
  s.mean_translation_mm /= errors.size();
  return s;
}

/// Recovered total rotation over ground-truth total rotation, both taken
/// from frame 0 to the last frame. 1 when the motion has no rotation.
inline double rotation_span(const Sequence& seq, const std::vector<FramePose>& trajectory) {
  if (trajectory.size() < 2) return 1.0;
  const std::size_t last = trajectory.size() - 1;
  const double gt = rotation_angle(ground_truth_world_from_frame(seq, last).rotation);
  if (gt < 1e-12) return 1.0;
  return rotation_angle(trajectory[last].world_from_frame.rotation) / gt;
}

}  // namespace inhand

#endif  // INHAND_PIPELINE_HPP
