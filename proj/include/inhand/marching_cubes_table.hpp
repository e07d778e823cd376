#ifndef INHAND_MARCHING_CUBES_TABLE_HPP
#define INHAND_MARCHING_CUBES_TABLE_HPP

#include <array>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace inhand::mc {

// Corner c of a unit cell sits at (c & 1, (c >> 1) & 1, (c >> 2) & 1).
// A corner is "inside" when its bit is set in the case index.

inline Eigen::Vector3d corner_position(int c) { return {double(c & 1), double((c >> 1) & 1), double((c >> 2) & 1)}; }

struct Edge {
  int a;
  int b;
  int axis;  // bit that differs between a and b
};

/// The twelve cell edges, ordered by (axis, lower corner).
inline const std::array<Edge, 12>& edges() {
  static const std::array<Edge, 12> table = [] {
    std::array<Edge, 12> e{};
    int n = 0;
    for (int axis = 0; axis < 3; ++axis)
      for (int c = 0; c < 8; ++c)
        if (!(c & (1 << axis))) e[n++] = {c, c | (1 << axis), axis};
    return e;
  }();
  return table;
}

inline int edge_between(int a, int b) {
  for (int i = 0; i < 12; ++i) {
    const auto& e = edges()[i];
    if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) return i;
  }
  return -1;
}

/// Per case, triangles as triples of edge ids. Generated by tracing the
/// iso-contour on each face, pairing crossings so that inside corners on an
/// ambiguous face stay separated. The rule depends only on the face's own
/// corners, so neighboring cells agree and the surface has no cracks.
/// Triangles are wound so their normal points from inside to outside.
class CaseTable {
 public:
  static const CaseTable& get() {
    static const CaseTable table;
    return table;
  }

  const std::vector<std::array<int, 3>>& triangles(int case_index) const { return cases_[case_index]; }

 private:
  CaseTable() {
    const auto faces = oriented_faces();
    for (int cs = 0; cs < 256; ++cs) {
      const auto inside = [cs](int c) { return (cs >> c) & 1; };
      // next_[e] = successor crossing edge on the loop.
      std::array<int, 12> next;
      next.fill(-1);
      for (const auto& f : faces) {
        std::vector<int> enters, exits;  // positions along the cycle
        for (int i = 0; i < 4; ++i) {
          const int from = f[i], to = f[(i + 1) % 4];
          if (!inside(from) && inside(to)) enters.push_back(i);
          if (inside(from) && !inside(to)) exits.push_back(i);
        }
        for (int x : exits) {
          // The enter crossing that opened this run of inside corners.
          int best = -1;
          for (int back = 0; back < 4 && best < 0; ++back) {
            const int pos = ((x - back) % 4 + 4) % 4;
            for (int en : enters)
              if (en == pos) best = en;
          }
          const int from_edge = edge_between(f[x], f[(x + 1) % 4]);
          const int to_edge = edge_between(f[best], f[(best + 1) % 4]);
          next[from_edge] = to_edge;
        }
      }
      std::array<bool, 12> used{};
      std::vector<std::array<int, 3>> tris;
      for (int start = 0; start < 12; ++start) {
        if (next[start] < 0 || used[start]) continue;
        std::vector<int> loop;
        for (int e = start; !used[e]; e = next[e]) {
          used[e] = true;
          loop.push_back(e);
        }
        // Fan from a start whose diagonals never lie in a cube face; a
        // neighbor cell could emit the same diagonal and pinch the surface.
        std::size_t s0 = 0;
        for (std::size_t s = 0; s < loop.size(); ++s) {
          bool clean = true;
          for (std::size_t k = 2; k + 1 < loop.size(); ++k)
            if (share_face(loop[s], loop[(s + k) % loop.size()])) clean = false;
          if (clean) {
            s0 = s;
            break;
          }
        }
        for (std::size_t k = 1; k + 1 < loop.size(); ++k)
          tris.push_back({loop[s0], loop[(s0 + k) % loop.size()], loop[(s0 + k + 1) % loop.size()]});
      }
      cases_[cs] = std::move(tris);
    }
    // Fix the global winding so that case 1 (only corner 0 inside) faces +xyz.
    const auto& t = cases_[1].front();
    const Eigen::Vector3d p0 = midpoint(t[0]), p1 = midpoint(t[1]), p2 = midpoint(t[2]);
    if ((p1 - p0).cross(p2 - p0).dot(Eigen::Vector3d(1, 1, 1)) < 0)
      for (auto& c : cases_)
        for (auto& tri : c) std::swap(tri[1], tri[2]);
  }

  static bool share_face(int e1, int e2) {
    const auto& a = edges()[e1];
    const auto& b = edges()[e2];
    for (int axis = 0; axis < 3; ++axis)
      for (int side = 0; side < 2; ++side) {
        auto on = [&](const Edge& e) { return ((e.a >> axis) & 1) == side && ((e.b >> axis) & 1) == side; };
        if (on(a) && on(b)) return true;
      }
    return false;
  }

  static Eigen::Vector3d midpoint(int edge) {
    const auto& e = edges()[edge];
    return 0.5 * (corner_position(e.a) + corner_position(e.b));
  }

  /// The six faces with corners listed counter-clockwise seen from outside.
  static std::array<std::array<int, 4>, 6> oriented_faces() {
    std::array<std::array<int, 4>, 6> faces{};
    int n = 0;
    for (int axis = 0; axis < 3; ++axis) {
      for (int side = 0; side < 2; ++side) {
        const int u = (axis + 1) % 3, v = (axis + 2) % 3;
        const int base = side << axis;
        std::array<int, 4> f{base, base | (1 << u), base | (1 << u) | (1 << v), base | (1 << v)};
        Eigen::Vector3d outward = Eigen::Vector3d::Zero();
        outward[axis] = side ? 1.0 : -1.0;
        const Eigen::Vector3d a = corner_position(f[0]), b = corner_position(f[1]), c = corner_position(f[2]);
        if ((b - a).cross(c - b).dot(outward) < 0) std::swap(f[1], f[3]);
        faces[n++] = f;
      }
    }
    return faces;
  }

  std::array<std::vector<std::array<int, 3>>, 256> cases_;
};

}  // namespace inhand::mc

#endif  // INHAND_MARCHING_CUBES_TABLE_HPP
