#ifndef INHAND_FUSION_HPP
#define INHAND_FUSION_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "inhand/geometry.hpp"
#include "inhand/marching_cubes_table.hpp"
#include "inhand/parallel.hpp"
#include "inhand/spatial_index.hpp"

namespace inhand {

struct TsdfConfig {
  double side_length = 350.0;  // mm
  int resolution = 256;        // voxels per axis
  double truncation_voxels = 3.0;
  double max_voxel_size = 6.0;  // mm

  friend bool operator==(const TsdfConfig&, const TsdfConfig&) = default;

  double voxel_size() const { return side_length / resolution; }
  double truncation() const { return truncation_voxels * voxel_size(); }

  void validate() const {
    if (!(side_length > 0) || resolution < 2) throw Error(ErrorCode::kInvalidArgument, "bad TSDF dimensions");
    if (voxel_size() > max_voxel_size)
      throw Error(ErrorCode::kInvalidArgument, "TSDF voxel size exceeds the 6 mm maximum");
    if (!(truncation_voxels > 0)) throw Error(ErrorCode::kInvalidArgument, "truncation must be positive");
  }
};

/// Sparse-block TSDF grid. Voxel (i,j,k) has its center at
/// origin + (i+0.5, j+0.5, k+0.5) * voxel_size. Unobserved voxels read as
/// tsdf 1, weight 0; storage is allocated in 8^3 blocks on first touch.
class TsdfVolume {
 public:
  static constexpr int kBlock = 8;

  TsdfVolume(const Point3& origin, const TsdfConfig& config = {}) : origin_(origin), config_(config) {
    config_.validate();
    blocks_per_axis_ = (config_.resolution + kBlock - 1) / kBlock;
    block_of_.assign(static_cast<std::size_t>(blocks_per_axis_) * blocks_per_axis_ * blocks_per_axis_, -1);
  }

  /// Volume whose center is `center`.
  static TsdfVolume centered_at(const Point3& center, const TsdfConfig& config = {}) {
    return TsdfVolume(center - Point3::Constant(config.side_length * 0.5), config);
  }

  const Point3& origin() const { return origin_; }
  const TsdfConfig& config() const { return config_; }
  int resolution() const { return config_.resolution; }
  double voxel_size() const { return config_.voxel_size(); }
  double truncation() const { return config_.truncation(); }

  Point3 voxel_center(int i, int j, int k) const {
    return origin_ + Point3(i + 0.5, j + 0.5, k + 0.5) * voxel_size();
  }

  bool in_bounds(int i, int j, int k) const {
    const int r = config_.resolution;
    return i >= 0 && j >= 0 && k >= 0 && i < r && j < r && k < r;
  }

  double tsdf(int i, int j, int k) const {
    const Block* b = block(i, j, k);
    return b ? b->tsdf[local(i, j, k)] : 1.0;
  }

  double weight(int i, int j, int k) const {
    const Block* b = block(i, j, k);
    return b ? b->weight[local(i, j, k)] : 0.0;
  }

  /// Overwrites one voxel (used to write analytic fields and by tests).
  void set(int i, int j, int k, double tsdf_value, double weight_value) {
    Block& b = ensure_block(i, j, k);
    b.tsdf[local(i, j, k)] = std::clamp(tsdf_value, -1.0, 1.0);
    b.weight[local(i, j, k)] = static_cast<float>(weight_value);
  }

  /// Running weighted average with unit increment weight.
  void fuse(int i, int j, int k, double value) {
    Block& b = ensure_block(i, j, k);
    const std::size_t l = local(i, j, k);
    const double w = b.weight[l];
    b.tsdf[l] = (b.tsdf[l] * w + value) / (w + 1.0);
    b.weight[l] = static_cast<float>(w + 1.0);
  }

  /// Visits allocated blocks in ascending block index.
  template <typename Fn>
  void for_each_block(Fn&& fn) const {
    for (std::size_t id = 0; id < block_of_.size(); ++id)
      if (block_of_[id] >= 0) {
        const int bx = static_cast<int>(id % blocks_per_axis_);
        const int by = static_cast<int>((id / blocks_per_axis_) % blocks_per_axis_);
        const int bz = static_cast<int>(id / (static_cast<std::size_t>(blocks_per_axis_) * blocks_per_axis_));
        fn(bx * kBlock, by * kBlock, bz * kBlock);
      }
  }

  std::size_t allocated_blocks() const { return blocks_.size(); }

  /// Dense float32 copy, x fastest; unobserved voxels are 1.
  std::vector<float> dense_tsdf() const {
    const int r = config_.resolution;
    std::vector<float> out(static_cast<std::size_t>(r) * r * r, 1.0f);
    for_each_block([&](int x0, int y0, int z0) {
      for (int k = z0; k < std::min(z0 + kBlock, r); ++k)
        for (int j = y0; j < std::min(y0 + kBlock, r); ++j)
          for (int i = x0; i < std::min(x0 + kBlock, r); ++i)
            out[(static_cast<std::size_t>(k) * r + j) * r + i] = static_cast<float>(tsdf(i, j, k));
    });
    return out;
  }

 private:
  struct Block {
    std::array<double, kBlock * kBlock * kBlock> tsdf;
    std::array<float, kBlock * kBlock * kBlock> weight;
    Block() {
      tsdf.fill(1.0);
      weight.fill(0.0f);
    }
  };

  std::size_t block_id(int i, int j, int k) const {
    return (static_cast<std::size_t>(k / kBlock) * blocks_per_axis_ + j / kBlock) * blocks_per_axis_ + i / kBlock;
  }
  static std::size_t local(int i, int j, int k) {
    return (static_cast<std::size_t>(k % kBlock) * kBlock + j % kBlock) * kBlock + i % kBlock;
  }
  const Block* block(int i, int j, int k) const {
    if (!in_bounds(i, j, k)) return nullptr;
    const int id = block_of_[block_id(i, j, k)];
    return id < 0 ? nullptr : blocks_[id].get();
  }
  Block& ensure_block(int i, int j, int k) {
    if (!in_bounds(i, j, k)) throw Error(ErrorCode::kInvalidArgument, "voxel outside the TSDF volume");
    int& id = block_of_[block_id(i, j, k)];
    if (id < 0) {
      id = static_cast<int>(blocks_.size());
      blocks_.push_back(std::make_unique<Block>());
    }
    return *blocks_[id];
  }

  Point3 origin_;
  TsdfConfig config_;
  int blocks_per_axis_ = 0;
  std::vector<int> block_of_;
  std::vector<std::unique_ptr<Block>> blocks_;
};

/// Fuses a world-posed cloud: every voxel within the truncation distance of
/// a transformed point receives dot(voxel - p, n_p) / tau for its nearest
/// point p, clamped to [-1, 1]. Points outside the volume are ignored.
inline void integrate(TsdfVolume& vol, const PointCloud& cloud, const RigidTransform& pose, int threads = 1) {
  if (cloud.empty()) return;
  if (!cloud.has_normals()) throw Error(ErrorCode::kInvalidArgument, "TSDF integration requires normals");
  if (!pose.is_valid(1e-6)) throw Error(ErrorCode::kInvalidArgument, "integration pose is not a rigid transform");
  const PointCloud world = transform_cloud(pose, cloud);
  const SpatialIndex index(world.points);
  const double tau = vol.truncation();
  const double h = vol.voxel_size();
  const int reach = static_cast<int>(std::ceil(tau / h)) + 1;

  // Candidate voxels, in ascending linear order for a schedule-free result.
  std::vector<std::int64_t> candidates;
  const std::int64_t r = vol.resolution();
  for (const auto& p : world.points) {
    const Vector3 g = (p - vol.origin()) / h - Vector3::Constant(0.5);
    const int ci = static_cast<int>(std::lround(g.x())), cj = static_cast<int>(std::lround(g.y())),
              ck = static_cast<int>(std::lround(g.z()));
    for (int k = ck - reach; k <= ck + reach; ++k)
      for (int j = cj - reach; j <= cj + reach; ++j)
        for (int i = ci - reach; i <= ci + reach; ++i) {
          if (!vol.in_bounds(i, j, k)) continue;
          if ((vol.voxel_center(i, j, k) - p).squaredNorm() > tau * tau) continue;
          candidates.push_back((k * r + j) * r + i);
        }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<double> values(candidates.size());
  parallel_for(candidates.size(), threads, [&](std::size_t c) {
    const std::int64_t lin = candidates[c];
    const int i = static_cast<int>(lin % r), j = static_cast<int>((lin / r) % r), k = static_cast<int>(lin / (r * r));
    const Point3 v = vol.voxel_center(i, j, k);
    const auto nn = index.nearest(v);
    const double sd = (v - world.points[nn.index]).dot(world.normals[nn.index]);
    values[c] = std::clamp(sd, -tau, tau) / tau;
  });
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const std::int64_t lin = candidates[c];
    vol.fuse(static_cast<int>(lin % r), static_cast<int>((lin / r) % r), static_cast<int>(lin / (r * r)), values[c]);
  }
}

struct TriangleMesh {
  std::vector<Point3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<Vector3> normals;  // optional, per vertex

  bool empty() const { return triangles.empty(); }

  void validate() const {
    for (const auto& t : triangles) {
      for (auto v : t)
        if (v >= vertices.size()) throw Error(ErrorCode::kInvalidArgument, "triangle index out of range");
      if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
        throw Error(ErrorCode::kInvalidArgument, "degenerate triangle");
    }
  }
};

namespace detail {

inline std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace detail

/// Undirected edge -> number of incident triangles.
inline std::unordered_map<std::uint64_t, int> edge_use_counts(const TriangleMesh& mesh) {
  std::unordered_map<std::uint64_t, int> uses;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) ++uses[detail::edge_key(t[e], t[(e + 1) % 3])];
  return uses;
}

/// Every edge is shared by exactly two triangles.
inline bool is_closed(const TriangleMesh& mesh) {
  if (mesh.empty()) return false;
  const auto uses = edge_use_counts(mesh);
  return std::all_of(uses.begin(), uses.end(), [](const auto& kv) { return kv.second == 2; });
}

/// V - E + F over the vertices referenced by triangles.
inline long euler_characteristic(const TriangleMesh& mesh) {
  std::vector<char> used(mesh.vertices.size(), 0);
  for (const auto& t : mesh.triangles)
    for (auto v : t) used[v] = 1;
  const long v = std::count(used.begin(), used.end(), 1);
  return v - static_cast<long>(edge_use_counts(mesh).size()) + static_cast<long>(mesh.triangles.size());
}

/// Triangle-connected components (sharing a vertex), as a label per triangle.
inline std::vector<int> triangle_components(const TriangleMesh& mesh, int* count = nullptr) {
  std::vector<std::uint32_t> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& t : mesh.triangles) {
    const auto a = find(t[0]);
    parent[find(t[1])] = a;
    parent[find(t[2])] = a;
  }
  std::unordered_map<std::uint32_t, int> label_of_root;
  std::vector<int> labels(mesh.triangles.size());
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto root = find(mesh.triangles[i][0]);
    auto [it, inserted] = label_of_root.try_emplace(root, static_cast<int>(label_of_root.size()));
    labels[i] = it->second;
  }
  if (count) *count = static_cast<int>(label_of_root.size());
  return labels;
}

/// Drops unreferenced vertices and renumbers triangles.
inline TriangleMesh compact(const TriangleMesh& mesh) {
  std::vector<std::int64_t> remap(mesh.vertices.size(), -1);
  TriangleMesh out;
  for (const auto& t : mesh.triangles) {
    std::array<std::uint32_t, 3> nt{};
    for (int e = 0; e < 3; ++e) {
      auto& m = remap[t[e]];
      if (m < 0) {
        m = static_cast<std::int64_t>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[t[e]]);
        if (mesh.normals.size() == mesh.vertices.size()) out.normals.push_back(mesh.normals[t[e]]);
      }
      nt[e] = static_cast<std::uint32_t>(m);
    }
    out.triangles.push_back(nt);
  }
  return out;
}

/// Removes connected components holding fewer than `fraction` of all triangles.
inline TriangleMesh remove_small_components(const TriangleMesh& mesh, double fraction = 0.01) {
  int count = 0;
  const auto labels = triangle_components(mesh, &count);
  std::vector<std::size_t> sizes(count, 0);
  for (int l : labels) ++sizes[l];
  const double min_size = fraction * static_cast<double>(mesh.triangles.size());
  TriangleMesh kept;
  kept.vertices = mesh.vertices;
  kept.normals = mesh.normals;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i)
    if (static_cast<double>(sizes[labels[i]]) >= min_size) kept.triangles.push_back(mesh.triangles[i]);
  return compact(kept);
}

/// Marching cubes over cells whose eight corners all carry weight, without
/// component pruning.
inline TriangleMesh marching_cubes(const TsdfVolume& vol) {
  const auto& table = mc::CaseTable::get();
  const auto& edges = mc::edges();
  const std::int64_t r = vol.resolution();
  TriangleMesh mesh;
  std::unordered_map<std::uint64_t, std::uint32_t> vertex_of_edge;

  // Cells are visited block by block in ascending block order, and in linear
  // order inside a block, so the output never depends on thread count.
  vol.for_each_block([&](int x0, int y0, int z0) {
    for (int k = z0; k < z0 + TsdfVolume::kBlock; ++k)
      for (int j = y0; j < y0 + TsdfVolume::kBlock; ++j)
        for (int i = x0; i < x0 + TsdfVolume::kBlock; ++i) {
          if (i + 1 >= r || j + 1 >= r || k + 1 >= r) continue;
          std::array<double, 8> val{};
          int cs = 0;
          bool valid = true;
          for (int c = 0; c < 8 && valid; ++c) {
            const int ci = i + (c & 1), cj = j + ((c >> 1) & 1), ck = k + ((c >> 2) & 1);
            if (!(vol.weight(ci, cj, ck) > 0)) valid = false;
            val[c] = vol.tsdf(ci, cj, ck);
            if (val[c] < 0) cs |= 1 << c;
          }
          if (!valid || cs == 0 || cs == 255) continue;
          for (const auto& tri : table.triangles(cs)) {
            std::array<std::uint32_t, 3> idx{};
            for (int m = 0; m < 3; ++m) {
              const auto& e = edges[tri[m]];
              const int ai = i + (e.a & 1), aj = j + ((e.a >> 1) & 1), ak = k + ((e.a >> 2) & 1);
              const std::uint64_t key = static_cast<std::uint64_t>((ak * r + aj) * r + ai) * 3 + e.axis;
              auto [it, inserted] = vertex_of_edge.try_emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
              if (inserted) {
                const double t = val[e.a] / (val[e.a] - val[e.b]);
                const int bi = i + (e.b & 1), bj = j + ((e.b >> 1) & 1), bk = k + ((e.b >> 2) & 1);
                const Point3 pa = vol.voxel_center(ai, aj, ak), pb = vol.voxel_center(bi, bj, bk);
                mesh.vertices.push_back(pa + t * (pb - pa));
              }
              idx[m] = it->second;
            }
            if (idx[0] != idx[1] && idx[1] != idx[2] && idx[0] != idx[2]) mesh.triangles.push_back(idx);
          }
        }
  });
  return mesh;
}

/// Marching cubes followed by removal of components under 1% of triangles.
inline TriangleMesh extract_mesh(const TsdfVolume& vol, double min_component_fraction = 0.01) {
  TriangleMesh mesh = marching_cubes(vol);
  if (mesh.empty()) throw Error(ErrorCode::kEmptyMesh, "no zero crossing among observed voxels");
  return remove_small_components(mesh, min_component_fraction);
}

/// Closes every boundary loop with a fan around the loop centroid. Loops are
/// traced along boundary half-edges, so caps keep the surrounding winding.
inline TriangleMesh fill_holes(const TriangleMesh& mesh) {
  std::unordered_map<std::uint64_t, int> uses = edge_use_counts(mesh);
  // Directed boundary half-edges a->b (as they appear in their triangle).
  std::multimap<std::uint32_t, std::uint32_t> outgoing;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      const auto a = t[e], b = t[(e + 1) % 3];
      if (uses[detail::edge_key(a, b)] == 1) outgoing.emplace(a, b);
    }
  // Every vertex has as many incoming as outgoing boundary half-edges, so a
  // walk always returns to its start. Revisiting a vertex splits off a
  // simple loop, keeping pinch vertices out of a shared fan.
  std::vector<std::vector<std::uint32_t>> loops;
  while (!outgoing.empty()) {
    const std::uint32_t start = outgoing.begin()->first;
    std::vector<std::uint32_t> walk{start};
    std::unordered_map<std::uint32_t, std::size_t> pos{{start, 0}};
    std::uint32_t cur = start;
    while (true) {
      auto found = outgoing.find(cur);
      if (found == outgoing.end()) break;
      const std::uint32_t nxt = found->second;
      outgoing.erase(found);
      if (auto seen = pos.find(nxt); seen != pos.end()) {
        const std::size_t p = seen->second;
        loops.emplace_back(walk.begin() + static_cast<std::ptrdiff_t>(p), walk.end());
        for (std::size_t m = p + 1; m < walk.size(); ++m) pos.erase(walk[m]);
        walk.resize(p + 1);
      } else {
        pos[nxt] = walk.size();
        walk.push_back(nxt);
      }
      cur = nxt;
    }
  }

  TriangleMesh out = mesh;
  out.normals.clear();
  for (const auto& loop : loops) {
    if (loop.size() < 3) continue;
    if (loop.size() == 3) {
      out.triangles.push_back({loop[0], loop[2], loop[1]});
      continue;
    }
    Point3 c = Point3::Zero();
    for (auto v : loop) c += mesh.vertices[v];
    c /= static_cast<double>(loop.size());
    const auto center = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.push_back(c);
    for (std::size_t m = 0; m < loop.size(); ++m) {
      const auto a = loop[m], b = loop[(m + 1) % loop.size()];
      out.triangles.push_back({center, b, a});
    }
  }
  return out;
}

/// v <- v + lambda * (mean of edge neighbors - v), repeated; topology fixed.
inline TriangleMesh laplacian_smooth(const TriangleMesh& mesh, int iterations, double lambda) {
  if (iterations <= 0) return mesh;
  if (!(lambda > 0 && lambda < 1)) throw Error(ErrorCode::kInvalidArgument, "lambda must lie in (0,1)");
  std::vector<std::vector<std::uint32_t>> nbrs(mesh.vertices.size());
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      nbrs[t[e]].push_back(t[(e + 1) % 3]);
      nbrs[t[e]].push_back(t[(e + 2) % 3]);
    }
  for (auto& n : nbrs) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  TriangleMesh out = mesh;
  out.normals.clear();
  std::vector<Point3> next(out.vertices.size());
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t v = 0; v < out.vertices.size(); ++v) {
      if (nbrs[v].empty()) {
        next[v] = out.vertices[v];
        continue;
      }
      Point3 avg = Point3::Zero();
      for (auto n : nbrs[v]) avg += out.vertices[n];
      avg /= static_cast<double>(nbrs[v].size());
      next[v] = out.vertices[v] + lambda * (avg - out.vertices[v]);
    }
    out.vertices.swap(next);
  }
  return out;
}

/// Area-weighted vertex normals.
inline std::vector<Vector3> vertex_normals(const TriangleMesh& mesh) {
  std::vector<Vector3> n(mesh.vertices.size(), Vector3::Zero());
  for (const auto& t : mesh.triangles) {
    const Vector3 f = (mesh.vertices[t[1]] - mesh.vertices[t[0]]).cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
    for (auto v : t) n[v] += f;
  }
  for (auto& v : n)
    if (v.norm() > 0) v.normalize();
  return n;
}

/// Absolute enclosed volume by the signed tetrahedron sum. Requires a
/// closed mesh.
inline double enclosed_volume(const TriangleMesh& mesh) {
  if (!is_closed(mesh)) throw Error(ErrorCode::kOpenMesh, "volume needs a closed mesh");
  double v = 0.0;
  for (const auto& t : mesh.triangles)
    v += mesh.vertices[t[0]].dot(mesh.vertices[t[1]].cross(mesh.vertices[t[2]]));
  return std::abs(v) / 6.0;
}

enum class ProbeKind { kHeight, kDiameter, kVolume };

inline const char* to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::kHeight: return "height";
    case ProbeKind::kDiameter: return "diameter";
    case ProbeKind::kVolume: return "volume";
  }
  return "unknown";
}

/// A named measurement. Height is the extent along `axis`; diameter is the
/// largest distance between points where mesh edges cross the plane through
/// origin + offset * axis with normal `axis`; volume is the enclosed volume.
struct DimensionProbe {
  std::string name;
  ProbeKind kind = ProbeKind::kHeight;
  Vector3 axis = Vector3::UnitY();
  Point3 origin = Point3::Zero();
  double offset = 0.0;
  double ground_truth = 0.0;  // 0 when unknown

  friend bool operator==(const DimensionProbe& a, const DimensionProbe& b) {
    return a.name == b.name && a.kind == b.kind && a.axis == b.axis && a.origin == b.origin &&
           a.offset == b.offset && a.ground_truth == b.ground_truth;
  }
};

inline double measure_probe(const TriangleMesh& mesh, const DimensionProbe& probe) {
  if (mesh.empty()) throw Error(ErrorCode::kEmptyInput, "cannot measure an empty mesh");
  const Vector3 axis = probe.axis.normalized();
  switch (probe.kind) {
    case ProbeKind::kVolume: return enclosed_volume(mesh);
    case ProbeKind::kHeight: {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& t : mesh.triangles)
        for (auto v : t) {
          const double s = axis.dot(mesh.vertices[v]);
          lo = std::min(lo, s);
          hi = std::max(hi, s);
        }
      return hi - lo;
    }
    case ProbeKind::kDiameter: {
      const double plane = axis.dot(probe.origin) + probe.offset;
      std::vector<Point3> crossings;
      for (const auto& [key, uses] : edge_use_counts(mesh)) {
        const Point3& a = mesh.vertices[key >> 32];
        const Point3& b = mesh.vertices[key & 0xffffffffu];
        const double da = axis.dot(a) - plane, db = axis.dot(b) - plane;
        if ((da < 0) == (db < 0) || da == db) continue;
        crossings.push_back(a + (da / (da - db)) * (b - a));
      }
      double best = 0.0;
      for (std::size_t i = 0; i < crossings.size(); ++i)
        for (std::size_t j = i + 1; j < crossings.size(); ++j)
          best = std::max(best, (crossings[i] - crossings[j]).squaredNorm());
      return std::sqrt(best);
    }
  }
  return 0.0;
}

struct Measurement {
  std::string name;
  ProbeKind kind;
  double value = 0.0;
  double ground_truth = 0.0;
};

inline std::vector<Measurement> measure_dimensions(const TriangleMesh& mesh, const std::vector<DimensionProbe>& probes) {
  std::vector<Measurement> out;
  for (const auto& p : probes) out.push_back({p.name, p.kind, measure_probe(mesh, p), p.ground_truth});
  return out;
}

}  // namespace inhand

#endif  // INHAND_FUSION_HPP
