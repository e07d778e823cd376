#ifndef INHAND_SEQUENCE_HPP
#define INHAND_SEQUENCE_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "inhand/frame.hpp"
#include "inhand/fusion.hpp"
#include "inhand/preprocess.hpp"

namespace inhand {

/// Two points observed in consecutive frames: `source` in frame+1 and its
/// counterpart `target` in frame.
struct AnnotatedPair {
  int frame = 0;
  Point3 source;
  Point3 target;
};

/// Everything known about a recorded or generated scan: frames, camera,
/// working volume and, when available, ground truth for evaluation.
struct Sequence {
  std::string name;
  CameraIntrinsics intrinsics;
  WorkingVolume volume;
  std::vector<SegmentedFrame> frames;
  std::vector<BoneId> bone_label;  // hand model topology
  std::set<BoneId> end_effectors;
  std::map<BoneId, std::string> bone_names;
  std::vector<DimensionProbe> probes;
  std::vector<AnnotatedPair> annotations;
  /// Ground-truth object-to-camera pose per frame, when known.
  std::vector<RigidTransform> gt_object_poses;
  /// Ground-truth object center in each frame's camera coordinates.
  std::vector<Point3> gt_centers;
};

}  // namespace inhand

#endif  // INHAND_SEQUENCE_HPP
