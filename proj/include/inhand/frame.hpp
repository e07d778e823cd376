#ifndef INHAND_FRAME_HPP
#define INHAND_FRAME_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "inhand/contact.hpp"
#include "inhand/features.hpp"
#include "inhand/geometry.hpp"

namespace inhand {

/// Fixed-size detection box in pixel coordinates with a finger label.
struct DetectorBox {
  std::string label;
  int u_min = 0;
  int v_min = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const DetectorBox&, const DetectorBox&) = default;
};

/// One pre-segmented observation: object cloud D_o, hand cloud D_h and the
/// posed hand mesh, with optional 2D matches to the previous frame and
/// optional contact-detector boxes.
struct SegmentedFrame {
  int frame_index = 0;
  PointCloud object_cloud;
  PointCloud hand_cloud;
  PosedHand hand_pose;
  std::optional<std::vector<Feat2dMatch>> feat2d_matches;
  std::optional<std::vector<DetectorBox>> detector_boxes;
};

/// Depth map in mm, 0 where nothing was observed.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> depth;

  float at(int u, int v) const {
    if (u < 0 || v < 0 || u >= width || v >= height) return 0.0f;
    return depth[static_cast<std::size_t>(v) * width + u];
  }
};

/// Z-buffered splat of a cloud into the image; each point covers the
/// (2*splat+1)^2 pixels around its projection.
inline DepthImage render_depth(const PointCloud& cloud, const CameraIntrinsics& k, int splat = 1) {
  DepthImage img{k.width, k.height, std::vector<float>(static_cast<std::size_t>(k.width) * k.height, 0.0f)};
  for (const auto& p : cloud.points) {
    if (!(p.z() > 0)) continue;
    const Pixel px = project(p, k);
    const int u0 = static_cast<int>(std::lround(px.u));
    const int v0 = static_cast<int>(std::lround(px.v));
    for (int dv = -splat; dv <= splat; ++dv)
      for (int du = -splat; du <= splat; ++du) {
        const int u = u0 + du, v = v0 + dv;
        if (u < 0 || v < 0 || u >= k.width || v >= k.height) continue;
        float& d = img.depth[static_cast<std::size_t>(v) * k.width + u];
        const auto z = static_cast<float>(p.z());
        if (d == 0.0f || z < d) d = z;
      }
  }
  return img;
}

}  // namespace inhand

#endif  // INHAND_FRAME_HPP
