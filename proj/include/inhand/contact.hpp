#ifndef INHAND_CONTACT_HPP
#define INHAND_CONTACT_HPP

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "inhand/correspondence.hpp"
#include "inhand/spatial_index.hpp"

namespace inhand {

using BoneId = int;

/// Posed hand mesh for one frame. Vertex order (topology) is fixed across a
/// sequence; bone labels and end-effector ids come from the hand model.
struct PosedHand {
  std::vector<Point3> vertices;
  std::vector<BoneId> bone_label;
  std::set<BoneId> end_effectors;

  void validate() const {
    if (bone_label.size() != vertices.size())
      throw Error(ErrorCode::kInvalidArgument, "bone label count differs from vertex count");
    if (end_effectors.empty()) throw Error(ErrorCode::kInvalidArgument, "hand has no end-effector bones");
  }
};

struct ContactState {
  std::set<BoneId> contact_bones;
  std::vector<std::size_t> contact_vertices;
  double threshold_used = 0.0;

  bool empty() const { return contact_bones.empty(); }
};

struct ContactParams {
  double initial_threshold = 1.0;  // mm
  double threshold_step = 0.5;     // mm
  double threshold_cap = 10.0;     // mm
  std::size_t min_candidates = 40;  // a contact bone needs strictly more
  std::size_t min_bones = 2;

  friend bool operator==(const ContactParams&, const ContactParams&) = default;
};

/// Labels contact bones: an end-effector whose count of vertices closer than
/// the threshold to the object cloud exceeds min_candidates. The threshold
/// starts at 1 mm and grows in 0.5 mm steps until at least two bones qualify;
/// past the cap the frame has no usable contact (kNoContact).
inline ContactState detect_contacts(const PosedHand& hand, const PointCloud& object_cloud, const SpatialIndex& index,
                                    const ContactParams& params = {}) {
  hand.validate();
  if (object_cloud.empty() || index.empty()) throw Error(ErrorCode::kEmptyInput, "object cloud is empty");

  std::map<BoneId, std::vector<double>> distances;  // end-effector bone -> vertex distances
  for (std::size_t i = 0; i < hand.vertices.size(); ++i) {
    const BoneId b = hand.bone_label[i];
    if (!hand.end_effectors.contains(b)) continue;
    distances[b].push_back(index.nearest(hand.vertices[i]).distance);
  }

  for (int step = 0;; ++step) {
    const double d = params.initial_threshold + params.threshold_step * step;
    if (d > params.threshold_cap + 1e-12) break;
    std::set<BoneId> bones;
    for (const auto& [bone, ds] : distances) {
      const auto candidates = static_cast<std::size_t>(std::count_if(ds.begin(), ds.end(), [d](double x) { return x < d; }));
      if (candidates > params.min_candidates) bones.insert(bone);
    }
    if (bones.size() >= params.min_bones) {
      ContactState state;
      state.contact_bones = std::move(bones);
      state.threshold_used = d;
      for (std::size_t i = 0; i < hand.vertices.size(); ++i)
        if (state.contact_bones.contains(hand.bone_label[i])) state.contact_vertices.push_back(i);
      return state;
    }
  }
  throw Error(ErrorCode::kNoContact, "fewer than " + std::to_string(params.min_bones) +
                                         " contact bones within the " + std::to_string(params.threshold_cap) +
                                         " mm threshold cap");
}

inline ContactState detect_contacts(const PosedHand& hand, const PointCloud& object_cloud,
                                    const ContactParams& params = {}) {
  if (object_cloud.empty()) throw Error(ErrorCode::kEmptyInput, "object cloud is empty");
  return detect_contacts(hand, object_cloud, SpatialIndex(object_cloud.points), params);
}

/// Pairs every vertex of the bones in contact in both frames with itself
/// across frames (shared mesh index), source = current frame.
inline CorrespondenceSet contact_correspondences(const PosedHand& source_hand, const PosedHand& target_hand,
                                                 const ContactState& source_state,
                                                 const ContactState& target_state) {
  CorrespondenceSet set(CorrespondenceTag::kContact);
  if (source_state.empty() || target_state.empty()) return set;
  if (source_hand.vertices.size() != target_hand.vertices.size() ||
      source_hand.bone_label != target_hand.bone_label)
    throw Error(ErrorCode::kInvalidArgument, "hand topology differs between frames");
  std::set<BoneId> shared;
  std::set_intersection(source_state.contact_bones.begin(), source_state.contact_bones.end(),
                        target_state.contact_bones.begin(), target_state.contact_bones.end(),
                        std::inserter(shared, shared.begin()));
  for (std::size_t i = 0; i < source_hand.vertices.size(); ++i)
    if (shared.contains(source_hand.bone_label[i])) set.add(source_hand.vertices[i], target_hand.vertices[i]);
  return set;
}

}  // namespace inhand

#endif  // INHAND_CONTACT_HPP
