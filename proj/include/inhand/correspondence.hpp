#ifndef INHAND_CORRESPONDENCE_HPP
#define INHAND_CORRESPONDENCE_HPP

#include <string>
#include <vector>

#include "inhand/geometry.hpp"

namespace inhand {

enum class CorrespondenceTag { kFeat2d, kFeat3d, kContact, kDetector, kIcp };

inline const char* to_string(CorrespondenceTag tag) {
  switch (tag) {
    case CorrespondenceTag::kFeat2d: return "feat2d";
    case CorrespondenceTag::kFeat3d: return "feat3d";
    case CorrespondenceTag::kContact: return "contact";
    case CorrespondenceTag::kDetector: return "detector";
    case CorrespondenceTag::kIcp: return "icp";
  }
  return "unknown";
}

/// A source point in the current frame and its counterpart in the target.
struct Correspondence {
  Point3 source;
  Point3 target;
  CorrespondenceTag tag = CorrespondenceTag::kFeat3d;
};

/// Homogeneously tagged pairs sharing one weight.
class CorrespondenceSet {
 public:
  explicit CorrespondenceSet(CorrespondenceTag tag, double weight = 1.0) : tag_(tag) { set_weight(weight); }

  CorrespondenceTag tag() const { return tag_; }
  double weight() const { return weight_; }
  void set_weight(double w) {
    if (!(w >= 0) || !std::isfinite(w)) throw Error(ErrorCode::kInvalidArgument, "set weight must be >= 0");
    weight_ = w;
  }

  void add(const Point3& source, const Point3& target) {
    if (!source.allFinite() || !target.allFinite())
      throw Error(ErrorCode::kInvalidArgument, "correspondence endpoints must be finite");
    pairs_.push_back({source, target, tag_});
  }

  const std::vector<Correspondence>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

  /// Sum of squared residuals |target - T(source)|^2, unweighted.
  double energy(const RigidTransform& t) const {
    double e = 0.0;
    for (const auto& c : pairs_) e += (c.target - t(c.source)).squaredNorm();
    return e;
  }

  double rms(const RigidTransform& t) const { return pairs_.empty() ? 0.0 : std::sqrt(energy(t) / pairs_.size()); }

 private:
  CorrespondenceTag tag_;
  double weight_ = 1.0;
  std::vector<Correspondence> pairs_;
};

}  // namespace inhand

#endif  // INHAND_CORRESPONDENCE_HPP
