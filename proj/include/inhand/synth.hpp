#ifndef INHAND_SYNTH_HPP
#define INHAND_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "inhand/sequence.hpp"

namespace inhand {

enum class ShapeKind { kSphere, kCapsuleBottle, kBowlingPin };

inline const char* to_string(ShapeKind s) {
  switch (s) {
    case ShapeKind::kSphere: return "sphere";
    case ShapeKind::kCapsuleBottle: return "capsule_bottle";
    case ShapeKind::kBowlingPin: return "bowling_pin";
  }
  return "unknown";
}

/// A surface of revolution about the object y axis, centered at the origin.
/// Sphere uses `diameter`; capsule bottle uses `diameter` and `height`;
/// bowling pin uses `head_diameter`, `body_diameter` and `height`.
struct SyntheticObjectSpec {
  ShapeKind shape = ShapeKind::kSphere;
  std::string name = "sphere";
  double diameter = 70.0;
  double height = 0.0;
  double head_diameter = 0.0;
  double body_diameter = 0.0;
  double density = 0.5;  // points per mm^2
  int dimples = 0;
  std::uint64_t dimple_seed = 7;

  void validate() const {
    auto positive = [](double v, const char* field) {
      if (!(v > 0) || !std::isfinite(v))
        throw Error(ErrorCode::kInvalidArgument, std::string(field) + " must be positive");
    };
    positive(density, "density");
    if (dimples < 0) throw Error(ErrorCode::kInvalidArgument, "dimples must be >= 0");
    switch (shape) {
      case ShapeKind::kSphere: positive(diameter, "diameter"); break;
      case ShapeKind::kCapsuleBottle:
        positive(diameter, "diameter");
        positive(height, "height");
        if (height < diameter) throw Error(ErrorCode::kInvalidArgument, "height must be >= diameter for a capsule");
        break;
      case ShapeKind::kBowlingPin:
        positive(head_diameter, "head_diameter");
        positive(body_diameter, "body_diameter");
        positive(height, "height");
        break;
    }
  }

  double total_height() const { return shape == ShapeKind::kSphere ? diameter : height; }

  static SyntheticObjectSpec sphere(double d) { return {ShapeKind::kSphere, "sphere", d}; }
  static SyntheticObjectSpec capsule_bottle(std::string name, double d, double h) {
    return {ShapeKind::kCapsuleBottle, std::move(name), d, h};
  }
  static SyntheticObjectSpec bowling_pin(double head, double body, double h) {
    return {ShapeKind::kBowlingPin, "bowling-pin", 0.0, h, head, body};
  }
};

/// The four reference objects with their measured dimensions (mm).
inline std::vector<SyntheticObjectSpec> reference_objects() {
  return {SyntheticObjectSpec::capsule_bottle("water-bottle", 73.0, 218.0),
          SyntheticObjectSpec::bowling_pin(50.0, 82.0, 268.0),
          SyntheticObjectSpec::capsule_bottle("small-bottle", 52.0, 80.0), SyntheticObjectSpec::sphere(70.0)};
}

inline constexpr double kSphereVolumeGroundTruth = 179503.0;  // mm^3, measured reference sphere

/// Dense (radius, height) profile from the bottom pole or disc to the top.
class Profile {
 public:
  explicit Profile(const SyntheticObjectSpec& spec) {
    spec.validate();
    const double pi = std::numbers::pi;
    switch (spec.shape) {
      case ShapeKind::kSphere: {
        const double r = spec.diameter / 2;
        for (int i = 0; i <= 2000; ++i) {
          const double t = pi * i / 2000;
          add(r * std::sin(t), -r * std::cos(t));
        }
        break;
      }
      case ShapeKind::kCapsuleBottle: {
        const double a = spec.diameter / 2, half = spec.height / 2;
        for (int i = 0; i <= 1000; ++i) {
          const double t = 0.5 * pi * i / 1000;
          add(a * std::sin(t), -half + a - a * std::cos(t));
        }
        const int n = std::max(2, static_cast<int>((spec.height - spec.diameter) / 0.2));
        for (int i = 1; i < n; ++i) add(a, -half + a + (spec.height - spec.diameter) * i / n);
        for (int i = 0; i <= 1000; ++i) {
          const double t = 0.5 * pi + 0.5 * pi * i / 1000;
          add(a * std::sin(t), half - a - a * std::cos(t));
        }
        break;
      }
      case ShapeKind::kBowlingPin: {
        const double h = spec.height, half = h / 2;
        const double base = 0.45 * spec.body_diameter / 2;
        const double body = spec.body_diameter / 2, neck = 0.3 * spec.head_diameter, head = spec.head_diameter / 2;
        const double nodes_u[] = {0.0, 0.17 * h, 0.56 * h, 0.83 * h};
        const double nodes_r[] = {base, body, neck, head};
        for (int i = 0; i <= 200; ++i) add(base * i / 200.0, -half);
        for (int seg = 0; seg < 3; ++seg) {
          const int n = static_cast<int>((nodes_u[seg + 1] - nodes_u[seg]) / 0.2);
          for (int i = 1; i <= n; ++i) {
            const double f = 0.5 - 0.5 * std::cos(pi * i / n);
            add(nodes_r[seg] + (nodes_r[seg + 1] - nodes_r[seg]) * f,
                -half + nodes_u[seg] + (nodes_u[seg + 1] - nodes_u[seg]) * i / n);
          }
        }
        const double crown = 0.17 * h;
        for (int i = 1; i <= 1000; ++i) {
          const double t = 0.5 * pi * i / 1000;
          add(head * std::cos(t), -half + 0.83 * h + crown * std::sin(t));
        }
        break;
      }
    }
    arc_.assign(r_.size(), 0.0);
    for (std::size_t i = 1; i < r_.size(); ++i) arc_[i] = arc_[i - 1] + std::hypot(r_[i] - r_[i - 1], h_[i] - h_[i - 1]);
  }

  double length() const { return arc_.back(); }

  struct Sample {
    double r, h;     // position in the profile plane
    double nr, nh;   // outward unit normal in the profile plane
    double tr, th;   // unit tangent along increasing arc length
  };

  Sample at(double s) const {
    s = std::clamp(s, 0.0, length());
    std::size_t i = std::upper_bound(arc_.begin(), arc_.end(), s) - arc_.begin();
    i = std::clamp<std::size_t>(i, 1, arc_.size() - 1);
    const double seg = arc_[i] - arc_[i - 1];
    const double f = seg > 0 ? (s - arc_[i - 1]) / seg : 0.0;
    Sample out{};
    out.r = std::max(0.0, r_[i - 1] + f * (r_[i] - r_[i - 1]));
    out.h = h_[i - 1] + f * (h_[i] - h_[i - 1]);
    const double dr = r_[i] - r_[i - 1], dh = h_[i] - h_[i - 1];
    const double len = std::hypot(dr, dh);
    out.tr = dr / len;
    out.th = dh / len;
    out.nr = out.th;
    out.nh = -out.tr;
    return out;
  }

  /// Surface point, normal and tangents at arc length s and azimuth phi.
  struct SurfacePoint {
    Point3 position;
    Vector3 normal;
    Vector3 along;    // d/ds
    Vector3 around;   // azimuthal
  };

  SurfacePoint surface(double s, double phi) const {
    const Sample p = at(s);
    const double c = std::cos(phi), sn = std::sin(phi);
    return {{p.r * c, p.h, p.r * sn}, Vector3(p.nr * c, p.nh, p.nr * sn).normalized(),
            Vector3(p.tr * c, p.th, p.tr * sn).normalized(), {-sn, 0.0, c}};
  }

 private:
  void add(double r, double h) {
    if (!r_.empty() && std::hypot(r - r_.back(), h - h_.back()) < 1e-9) return;
    r_.push_back(r);
    h_.push_back(h);
  }

  std::vector<double> r_, h_, arc_;
};

/// Deterministic, near-uniform sample of the object surface with exact
/// normals, in the object frame.
inline PointCloud sample_surface(const SyntheticObjectSpec& spec) {
  const Profile profile(spec);
  const double step = 1.0 / std::sqrt(spec.density);
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  PointCloud cloud;
  int ring = 0;
  for (double s = 0.5 * step; s < profile.length(); s += step, ++ring) {
    const auto p = profile.at(s);
    const int n = std::max(1, static_cast<int>(std::lround(2 * std::numbers::pi * p.r / step)));
    const double phase = std::fmod(ring * golden, 1.0);
    for (int j = 0; j < n; ++j) {
      const auto sp = profile.surface(s, 2 * std::numbers::pi * (j + phase) / n);
      cloud.points.push_back(sp.position);
      cloud.normals.push_back(sp.normal);
    }
  }
  return cloud;
}

/// Presses `count` smooth 2 mm deep dimples of varying radius into the
/// surface at seeded locations; normals follow the dimple walls.
inline PointCloud add_texture_features(const PointCloud& cloud, int count, std::uint64_t seed,
                                       double depth = 2.0) {
  if (count < 0) throw Error(ErrorCode::kInvalidArgument, "dimple count must be >= 0");
  if (count == 0 || cloud.empty()) return cloud;
  if (!cloud.has_normals()) throw Error(ErrorCode::kInvalidArgument, "dimples need surface normals");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, cloud.size() - 1);
  std::uniform_real_distribution<double> radius(5.0, 8.0);
  struct Dimple {
    Point3 center;
    Vector3 normal;
    double radius;
  };
  std::vector<Dimple> dimples;
  for (int attempts = 0; static_cast<int>(dimples.size()) < count && attempts < 100 * count; ++attempts) {
    const std::size_t i = pick(rng);
    const double r = radius(rng);
    bool clear = true;
    for (const auto& d : dimples)
      if ((d.center - cloud.points[i]).norm() < d.radius + r + 4.0) clear = false;
    if (clear) dimples.push_back({cloud.points[i], cloud.normals[i], r});
  }
  PointCloud out = cloud;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (const auto& d : dimples) {
      const Vector3 rel = cloud.points[i] - d.center;
      const Vector3 planar = rel - rel.dot(d.normal) * d.normal;
      const double dist = planar.norm();
      if (dist >= d.radius || rel.dot(d.normal) < -d.radius) continue;
      const double q = 1.0 - (dist / d.radius) * (dist / d.radius);
      out.points[i] -= depth * q * q * d.normal;
      const double slope = depth * 2.0 * q * (-2.0 * dist / (d.radius * d.radius));
      if (dist > 0) out.normals[i] = (cloud.normals[i] + slope * planar / dist).normalized();
      break;
    }
  }
  return out;
}

/// Per-frame ground-truth object poses (object -> camera) plus sensor noise.
struct MotionScript {
  std::vector<RigidTransform> poses;
  double noise_sigma = 0.5;  // mm
  /// Direction toward the camera in object coordinates, per frame.
  std::vector<Vector3> view_directions;

  std::size_t frame_count() const { return poses.size(); }

  void validate() const {
    if (poses.empty()) throw Error(ErrorCode::kInvalidArgument, "motion has no frames");
    if (!(noise_sigma >= 0)) throw Error(ErrorCode::kInvalidArgument, "noise sigma must be >= 0");
    for (const auto& p : poses)
      if (!p.is_valid(1e-9)) throw Error(ErrorCode::kInvalidArgument, "motion pose is not rigid");
  }
};

/// The hand turns the object about its own symmetry axis, which is tilted
/// toward the camera by `tilt_deg`; the object center stays at `center`.
inline MotionScript turning_motion(int frames, double deg_per_frame, double noise_sigma = 0.5,
                                   const Point3& center = {0.0, 40.0, 650.0}, double tilt_deg = 0.0) {
  if (frames < 1) throw Error(ErrorCode::kInvalidArgument, "frames must be >= 1");
  MotionScript m;
  m.noise_sigma = noise_sigma;
  const Matrix3 tilt = Eigen::AngleAxisd(std::numbers::pi + deg_to_rad(tilt_deg), Vector3::UnitX()).toRotationMatrix();
  for (int k = 0; k < frames; ++k) {
    RigidTransform pose;
    pose.rotation = tilt * Eigen::AngleAxisd(deg_to_rad(deg_per_frame * k), Vector3::UnitY()).toRotationMatrix();
    pose.translation = center;
    m.view_directions.push_back((pose.rotation.transpose() * (-center)).normalized());
    m.poses.push_back(pose);
  }
  return m;
}

struct HandSpec {
  int pad_rows = 15;          // pad vertices per side
  double pad_spacing = 1.0;   // mm
  double pad_offset = 0.5;    // mm above the surface
  double occluder_radius = 3.0;
  double thumb_arc = 0.3;     // pad centers as fractions of the profile length
  double index_arc = 0.7;
  double tracking_noise = 0.0;  // per-frame rigid jitter of each fingertip, mm
  int palm_vertices = 30;
  double palm_distance = 40.0;  // palm blob above the top pole
  int box_size = 16;            // detector box, pixels
};

inline constexpr BoneId kPalmBone = 0;
inline constexpr BoneId kThumbTipBone = 1;
inline constexpr BoneId kIndexTipBone = 2;

namespace detail {

inline bool segment_hits_sphere(const Point3& to, const Point3& center, double radius) {
  // Segment from the camera origin to `to`, excluding the endpoint region.
  const double len = to.norm();
  const Vector3 dir = to / len;
  const double t = dir.dot(center);
  if (t < 0 || t > len) return false;
  return (center - t * dir).norm() < radius;
}

inline std::vector<Point3> fibonacci_sphere(int n, const Point3& center, double radius,
                                            std::vector<Vector3>* normals = nullptr) {
  std::vector<Point3> pts;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(1.0 - y * y);
    const Vector3 d(r * std::cos(golden * i), y, r * std::sin(golden * i));
    pts.push_back(center + radius * d);
    if (normals) normals->push_back(d);
  }
  return pts;
}

/// Azimuth at arc length s whose surface normal stays most squarely in
/// view over the whole motion (largest worst-case facing angle).
inline double best_grip_azimuth(const class Profile& profile, double s, const struct MotionScript& motion) {
  double best = 0.0, best_score = -2.0;
  for (int step = 0; step < 360; ++step) {
    const double phi = 2 * std::numbers::pi * step / 360;
    const auto sp = profile.surface(s, phi);
    double worst = 1.0;
    for (const auto& pose : motion.poses) {
      const Point3 p = pose(sp.position);
      worst = std::min(worst, -(pose.rotation * sp.normal).dot(p.normalized()));
    }
    if (worst > best_score + 1e-12) {
      best_score = worst;
      best = phi;
    }
  }
  return best;
}

}  // namespace detail

/// Generates a scan of a hand turning a synthetic object in front of a
/// static camera. Object points are a fixed surface sample (so clean frames
/// relate exactly through the scripted poses), culled by back-face
/// visibility and fingertip occlusion, then perturbed by Gaussian noise.
/// Two fingertip pads ride rigidly on the surface, pad_offset above it.
inline Sequence generate_sequence(const SyntheticObjectSpec& obj, const MotionScript& motion,
                                  const HandSpec& hand = {}, std::uint64_t seed = 1,
                                  const CameraIntrinsics& intrinsics = {}) {
  obj.validate();
  motion.validate();
  const Profile profile(obj);
  PointCloud surface = add_texture_features(sample_surface(obj), obj.dimples, obj.dimple_seed);

  // Hand model in object coordinates.
  struct Tip {
    BoneId bone;
    std::string name;
    double s;
    double phi;
  };
  std::vector<Tip> tips{{kThumbTipBone, "thumb", hand.thumb_arc * profile.length(), 0.0},
                        {kIndexTipBone, "index", hand.index_arc * profile.length(), 0.0}};
  for (auto& tip : tips) tip.phi = detail::best_grip_azimuth(profile, tip.s, motion);
  std::vector<Point3> hand_vertices;
  std::vector<BoneId> labels;
  std::vector<Point3> occluder_centers, pad_centers;
  for (const auto& tip : tips) {
    const double r = std::max(profile.at(tip.s).r, 1.0);
    const int half = hand.pad_rows / 2;
    for (int a = -half; a <= half; ++a)
      for (int b = -half; b <= half; ++b) {
        const auto sp = profile.surface(tip.s + a * hand.pad_spacing, tip.phi + b * hand.pad_spacing / r);
        hand_vertices.push_back(sp.position + hand.pad_offset * sp.normal);
        labels.push_back(tip.bone);
      }
    const auto c = profile.surface(tip.s, tip.phi);
    pad_centers.push_back(c.position + hand.pad_offset * c.normal);
    occluder_centers.push_back(c.position + (hand.pad_offset + hand.occluder_radius) * c.normal);
  }
  const Point3 top = profile.surface(profile.length(), 0.0).position;
  for (const auto& p : detail::fibonacci_sphere(hand.palm_vertices, top + Point3(0, hand.palm_distance, 0), 10.0)) {
    hand_vertices.push_back(p);
    labels.push_back(kPalmBone);
  }

  Sequence seq;
  seq.name = obj.name;
  seq.intrinsics = intrinsics;
  seq.bone_label = labels;
  seq.end_effectors = {kThumbTipBone, kIndexTipBone};
  seq.bone_names = {{kPalmBone, "palm"}, {kThumbTipBone, "thumb_tip"}, {kIndexTipBone, "index_tip"}};
  seq.gt_object_poses = motion.poses;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t k = 0; k < motion.frame_count(); ++k) {
    const RigidTransform& pose = motion.poses[k];
    SegmentedFrame frame;
    frame.frame_index = static_cast<int>(k);

    std::vector<Point3> occluders;
    for (const auto& c : occluder_centers) occluders.push_back(pose(c));
    for (std::size_t i = 0; i < surface.size(); ++i) {
      const Point3 p = pose(surface.points[i]);
      const Vector3 n = pose.rotation * surface.normals[i];
      if (n.dot(p) >= 0) continue;
      bool hidden = false;
      for (const auto& c : occluders) hidden = hidden || detail::segment_hits_sphere(p, c, hand.occluder_radius);
      if (hidden) continue;
      Point3 noisy = p;
      if (motion.noise_sigma > 0)
        noisy += motion.noise_sigma * Vector3(gauss(rng), gauss(rng), gauss(rng));
      frame.object_cloud.points.push_back(noisy);
      frame.object_cloud.normals.push_back(n);
    }
    if (frame.object_cloud.empty())
      throw Error(ErrorCode::kDegenerateMotion, "frame " + std::to_string(k) + " has no visible object points");

    for (const auto& c : occluders) {
      std::vector<Vector3> normals;
      const auto pts = detail::fibonacci_sphere(120, c, hand.occluder_radius, &normals);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (normals[i].dot(pts[i]) >= 0) continue;
        Point3 noisy = pts[i];
        if (motion.noise_sigma > 0) noisy += motion.noise_sigma * Vector3(gauss(rng), gauss(rng), gauss(rng));
        frame.hand_cloud.points.push_back(noisy);
        frame.hand_cloud.normals.push_back(normals[i]);
      }
    }

    std::map<BoneId, Vector3> jitter;
    for (const auto& tip : tips)
      jitter[tip.bone] = hand.tracking_noise > 0
                             ? Vector3(hand.tracking_noise * Vector3(gauss(rng), gauss(rng), gauss(rng)))
                             : Vector3::Zero();
    frame.hand_pose.bone_label = labels;
    frame.hand_pose.end_effectors = seq.end_effectors;
    for (std::size_t v = 0; v < hand_vertices.size(); ++v) {
      Point3 p = pose(hand_vertices[v]);
      if (auto it = jitter.find(labels[v]); it != jitter.end()) p += it->second;
      frame.hand_pose.vertices.push_back(p);
    }

    std::vector<DetectorBox> boxes;
    for (std::size_t t = 0; t < tips.size(); ++t) {
      // Boxes follow the tracked fingertip, so they share its jitter.
      const Pixel px = project(Point3(pose(pad_centers[t]) + jitter[tips[t].bone]), intrinsics);
      boxes.push_back({tips[t].name, static_cast<int>(std::lround(px.u)) - hand.box_size / 2,
                       static_cast<int>(std::lround(px.v)) - hand.box_size / 2, hand.box_size, hand.box_size});
    }
    frame.detector_boxes = boxes;
    seq.frames.push_back(std::move(frame));
    seq.gt_centers.push_back(pose.translation);
  }

  // Dimension probes in world coordinates (= camera coordinates of frame 0).
  const RigidTransform& p0 = motion.poses.front();
  const Vector3 axis = p0.rotation * Vector3::UnitY();
  const Point3 origin = p0.translation;
  auto probe = [&](std::string name, ProbeKind kind, double offset, double gt) {
    seq.probes.push_back({obj.name + " " + name, kind, axis, origin, offset, gt});
  };
  switch (obj.shape) {
    case ShapeKind::kSphere:
      probe("diameter", ProbeKind::kDiameter, 0.0, obj.diameter);
      probe("volume", ProbeKind::kVolume, 0.0, obj.diameter == 70.0 ? kSphereVolumeGroundTruth
                                                                    : std::pow(obj.diameter / 2, 3) * 4.0 / 3.0 * std::numbers::pi);
      break;
    case ShapeKind::kCapsuleBottle:
      probe("diameter", ProbeKind::kDiameter, 0.0, obj.diameter);
      probe("height", ProbeKind::kHeight, 0.0, obj.height);
      break;
    case ShapeKind::kBowlingPin:
      probe("head diameter", ProbeKind::kDiameter, -obj.height / 2 + 0.83 * obj.height, obj.head_diameter);
      probe("body diameter", ProbeKind::kDiameter, -obj.height / 2 + 0.17 * obj.height, obj.body_diameter);
      probe("height", ProbeKind::kHeight, 0.0, obj.height);
      break;
  }

  // Annotated pairs next to each fingertip, every 10th frame.
  for (std::size_t k = 0; k + 1 < motion.frame_count(); k += 10) {
    for (const auto& tip : tips) {
      const double r = std::max(profile.at(tip.s).r, 1.0);
      for (const auto& q : {profile.surface(tip.s - 9.0, tip.phi).position,
                            profile.surface(tip.s, tip.phi + 9.0 / r).position}) {
        seq.annotations.push_back({static_cast<int>(k), motion.poses[k + 1](q), motion.poses[k](q)});
      }
    }
  }
  return seq;
}

}  // namespace inhand

#endif  // INHAND_SYNTH_HPP
