#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "inhand/fusion.hpp"
#include "inhand/synth.hpp"

using namespace inhand;

namespace {

TsdfConfig small_grid(int resolution = 64, double side = 128.0) {
  TsdfConfig c;
  c.side_length = side;
  c.resolution = resolution;
  return c;
}

// Writes a truncated signed field for every voxel of the grid.
template <typename Sdf>
TsdfVolume analytic_volume(const Point3& origin, const TsdfConfig& config, Sdf sdf) {
  TsdfVolume vol(origin, config);
  const double tau = vol.truncation();
  for (int k = 0; k < vol.resolution(); ++k)
    for (int j = 0; j < vol.resolution(); ++j)
      for (int i = 0; i < vol.resolution(); ++i)
        vol.set(i, j, k, std::clamp(sdf(vol.voxel_center(i, j, k)), -tau, tau) / tau, 1.0);
  return vol;
}

TsdfVolume sphere_volume(const Point3& c, double r, const TsdfConfig& config = small_grid()) {
  return analytic_volume(c - Point3::Constant(config.side_length / 2), config,
                         [&](const Point3& p) { return (p - c).norm() - r; });
}

double sphere_volume_mm3(double r) { return 4.0 / 3.0 * std::numbers::pi * r * r * r; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(TsdfConfig, VoxelSizeLimit) {
  EXPECT_NO_THROW(TsdfConfig{}.validate());
  EXPECT_NEAR(TsdfConfig{}.voxel_size(), 350.0 / 256, 1e-12);
  TsdfConfig coarse;
  coarse.resolution = 32;
  EXPECT_THROW(coarse.validate(), Error);
  EXPECT_THROW(TsdfVolume(Point3::Zero(), coarse), Error);
}

TEST(TsdfVolume, UnobservedReadsAsEmptySpace) {
  TsdfVolume vol(Point3::Zero(), small_grid());
  EXPECT_EQ(vol.tsdf(3, 4, 5), 1.0);
  EXPECT_EQ(vol.weight(3, 4, 5), 0.0);
  EXPECT_EQ(vol.tsdf(-1, 0, 0), 1.0);
  EXPECT_EQ(vol.allocated_blocks(), 0u);
  vol.fuse(3, 4, 5, -0.5);
  vol.fuse(3, 4, 5, 0.5);
  vol.fuse(3, 4, 5, 0.3);
  EXPECT_NEAR(vol.tsdf(3, 4, 5), 0.1, 1e-12);
  EXPECT_EQ(vol.weight(3, 4, 5), 3.0);
  EXPECT_EQ(vol.allocated_blocks(), 1u);
  EXPECT_THROW(vol.fuse(64, 0, 0, 0.0), Error);
}

TEST(Integrate, PlaneGivesSignedDistances) {
  const TsdfConfig cfg = small_grid();
  TsdfVolume vol(Point3(-64, -64, 536), cfg);  // voxel centers at z = 537, 539, ...
  PointCloud plane;
  for (int i = -60; i <= 60; ++i)
    for (int j = -60; j <= 60; ++j) {
      plane.points.emplace_back(0.5 * i, 0.5 * j, 600.0);
      plane.normals.emplace_back(0, 0, -1);
    }
  integrate(vol, plane, RigidTransform::identity());
  const double tau = vol.truncation();
  // Voxel (32, 32, k) sits at z = 537 + 2k; the plane is at z = 600 -> k = 31.5.
  for (int k = 28; k <= 35; ++k) {
    const double z = vol.voxel_center(32, 32, k).z();
    const double expected = std::clamp(600.0 - z, -tau, tau) / tau;
    if (std::abs(600.0 - z) <= tau) {
      EXPECT_NEAR(vol.tsdf(32, 32, k), expected, 1e-9) << "k " << k;
      EXPECT_EQ(vol.weight(32, 32, k), 1.0);
    } else {
      EXPECT_EQ(vol.weight(32, 32, k), 0.0);
    }
  }
  integrate(vol, plane, RigidTransform::identity());
  EXPECT_EQ(vol.weight(32, 32, 31), 2.0);
  EXPECT_NEAR(vol.tsdf(32, 32, 31), (600.0 - 599.0) / tau, 1e-9);
}

TEST(Integrate, PoseIsApplied) {
  const TsdfConfig cfg = small_grid();
  PointCloud plane;
  for (int i = -40; i <= 40; ++i)
    for (int j = -40; j <= 40; ++j) {
      plane.points.emplace_back(0.5 * i, 0.5 * j, 0.0);
      plane.normals.emplace_back(0, 0, -1);
    }
  TsdfVolume a(Point3(-64, -64, 536), cfg), b(Point3(-64, -64, 536), cfg);
  integrate(a, plane, RigidTransform::from_axis_angle(Vector3::UnitZ(), 0.0, Vector3(0, 0, 600)));
  PointCloud moved = plane;
  for (auto& p : moved.points) p.z() += 600;
  integrate(b, moved, RigidTransform::identity());
  EXPECT_EQ(a.dense_tsdf(), b.dense_tsdf());
  RigidTransform bad;
  bad.rotation(0, 0) = 2.0;
  EXPECT_THROW(integrate(a, plane, bad), Error);
}

TEST(Integrate, ThreadCountDoesNotChangeResult) {
  const auto cloud = transform_cloud(RigidTransform::from_axis_angle(Vector3::UnitY(), 0, Vector3(0, 0, 600)),
                                     sample_surface(SyntheticObjectSpec::sphere(70)));
  TsdfVolume a = TsdfVolume::centered_at(Point3(0, 0, 600), small_grid(128));
  TsdfVolume b = TsdfVolume::centered_at(Point3(0, 0, 600), small_grid(128));
  integrate(a, cloud, RigidTransform::identity(), 1);
  integrate(b, cloud, RigidTransform::identity(), 4);
  EXPECT_EQ(a.dense_tsdf(), b.dense_tsdf());
}

TEST(MarchingCubes, AnalyticSphere) {
  const Point3 c(1.3, -0.7, 600.4);
  const double r = 35.0;
  const auto vol = sphere_volume(c, r);
  const auto mesh = extract_mesh(vol);
  ASSERT_FALSE(mesh.empty());
  for (const auto& v : mesh.vertices) EXPECT_LT(std::abs((v - c).norm() - r), vol.voxel_size());
  EXPECT_TRUE(is_closed(mesh));
  EXPECT_EQ(euler_characteristic(mesh), 2);
  EXPECT_NEAR(enclosed_volume(mesh), sphere_volume_mm3(r), 0.02 * sphere_volume_mm3(r));
  // Outward winding: the signed tetrahedron sum is positive.
  double signed_volume = 0.0;
  for (const auto& t : mesh.triangles)
    signed_volume += (mesh.vertices[t[0]] - c).dot((mesh.vertices[t[1]] - c).cross(mesh.vertices[t[2]] - c));
  EXPECT_GT(signed_volume, 0.0);
}

TEST(MarchingCubes, EmptyVolumeIsAnError) {
  TsdfVolume vol(Point3::Zero(), small_grid());
  EXPECT_EQ(code_of([&] { extract_mesh(vol); }), ErrorCode::kEmptyMesh);
  const auto all_outside = analytic_volume(Point3::Zero(), small_grid(16, 32), [](const Point3&) { return 5.0; });
  EXPECT_EQ(code_of([&] { extract_mesh(all_outside); }), ErrorCode::kEmptyMesh);
}

TEST(MarchingCubes, RandomFieldsGiveTwoManifoldEdges) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    TsdfVolume vol(Point3::Zero(), small_grid(16, 32));
    for (int k = 0; k < 16; ++k)
      for (int j = 0; j < 16; ++j)
        for (int i = 0; i < 16; ++i) {
          const bool border = i == 0 || j == 0 || k == 0 || i == 15 || j == 15 || k == 15;
          vol.set(i, j, k, border ? 1.0 : u(rng), 1.0);
        }
    const auto mesh = marching_cubes(vol);
    ASSERT_FALSE(mesh.empty());
    EXPECT_NO_THROW(mesh.validate());
    for (const auto& [edge, uses] : edge_use_counts(mesh)) ASSERT_EQ(uses, 2) << "trial " << trial;
  }
}

TEST(MarchingCubes, UnobservedCellsProduceNothing) {
  auto vol = sphere_volume(Point3(0, 0, 600), 35.0);
  TsdfVolume partial(vol.origin(), vol.config());
  // Copy only the half-space x < 0 of the field: the result is an open cup.
  for (int k = 0; k < 64; ++k)
    for (int j = 0; j < 64; ++j)
      for (int i = 0; i < 32; ++i) partial.set(i, j, k, vol.tsdf(i, j, k), 1.0);
  const auto mesh = extract_mesh(partial);
  EXPECT_FALSE(is_closed(mesh));
  for (const auto& v : mesh.vertices) EXPECT_LT(v.x(), vol.voxel_center(31, 0, 0).x() + 1e-9);
}

TEST(Components, SmallBlobRemoved) {
  const Point3 c(0, 0, 600);
  const auto vol = analytic_volume(c - Point3::Constant(64), small_grid(), [&](const Point3& p) {
    return std::min((p - c).norm() - 35.0, (p - (c + Point3(50, 50, 50))).norm() - 3.0);
  });
  const auto raw = marching_cubes(vol);
  int count = 0;
  triangle_components(raw, &count);
  EXPECT_EQ(count, 2);
  const auto mesh = extract_mesh(vol);
  triangle_components(mesh, &count);
  EXPECT_EQ(count, 1);
  EXPECT_LT(mesh.triangles.size(), raw.triangles.size());
  for (const auto& v : mesh.vertices) EXPECT_LT((v - c).norm(), 40.0);
  EXPECT_TRUE(is_closed(mesh));
}

TEST(FillHoles, ClosesCutSphere) {
  const Point3 c(0, 0, 600);
  const auto sphere = extract_mesh(sphere_volume(c, 35.0));
  TriangleMesh cut;
  cut.vertices = sphere.vertices;
  for (const auto& t : sphere.triangles) {
    bool above = false;
    for (auto v : t) above = above || sphere.vertices[v].z() > c.z() + 20;
    if (!above) cut.triangles.push_back(t);
  }
  cut = compact(cut);
  ASSERT_FALSE(is_closed(cut));
  EXPECT_EQ(code_of([&] { enclosed_volume(cut); }), ErrorCode::kOpenMesh);
  const auto closed = fill_holes(cut);
  EXPECT_TRUE(is_closed(closed));
  EXPECT_EQ(euler_characteristic(closed), 2);
  // Cap height h = r - z_cut removes pi h^2 (3r - h) / 3.
  const double h = 35.0 - 20.0;
  const double expected = sphere_volume_mm3(35.0) - std::numbers::pi * h * h * (3 * 35.0 - h) / 3.0;
  EXPECT_NEAR(enclosed_volume(closed), expected, 0.03 * expected);
  EXPECT_EQ(fill_holes(closed).triangles.size(), closed.triangles.size());
}

TEST(FillHoles, TriangleHoleGetsOneFace) {
  TriangleMesh tet;
  tet.vertices = {Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0), Point3(0, 0, 1)};
  tet.triangles = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}};
  const auto closed = fill_holes(tet);
  ASSERT_EQ(closed.triangles.size(), 4u);
  EXPECT_TRUE(is_closed(closed));
  EXPECT_NEAR(enclosed_volume(closed), 1.0 / 6.0, 1e-12);
}

TEST(LaplacianSmooth, ShrinksNoiseKeepsTopology) {
  const Point3 c(0, 0, 600);
  auto mesh = extract_mesh(sphere_volume(c, 35.0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 0.5);
  for (auto& v : mesh.vertices) v += (v - c).normalized() * g(rng);
  auto radial_spread = [&](const TriangleMesh& m) {
    double mean = 0, sq = 0;
    for (const auto& v : m.vertices) mean += (v - c).norm();
    mean /= m.vertices.size();
    for (const auto& v : m.vertices) sq += ((v - c).norm() - mean) * ((v - c).norm() - mean);
    return std::sqrt(sq / m.vertices.size());
  };
  const auto smooth = laplacian_smooth(mesh, 3, 0.5);
  EXPECT_LT(radial_spread(smooth), 0.5 * radial_spread(mesh));
  EXPECT_EQ(smooth.triangles, mesh.triangles);
  EXPECT_EQ(laplacian_smooth(mesh, 0, 0.5).vertices, mesh.vertices);
  EXPECT_THROW(laplacian_smooth(mesh, 1, 1.5), Error);
}

TEST(LaplacianSmooth, SingleStepExample) {
  TriangleMesh m;
  m.vertices = {Point3(0, 0, 0), Point3(2, 0, 0), Point3(0, 2, 0)};
  m.triangles = {{0, 1, 2}};
  const auto s = laplacian_smooth(m, 1, 0.5);
  EXPECT_LT((s.vertices[0] - Point3(0.5, 0.5, 0)).norm(), 1e-12);
  EXPECT_LT((s.vertices[1] - Point3(1.0, 0.5, 0)).norm(), 1e-12);
}

TriangleMesh icosahedron() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  for (double a : {-1.0, 1.0})
    for (double b : {-phi, phi}) {
      m.vertices.emplace_back(0, a, b);
      m.vertices.emplace_back(a, b, 0);
      m.vertices.emplace_back(b, 0, a);
    }
  const auto n = static_cast<std::uint32_t>(m.vertices.size());
  auto edge = [&](std::uint32_t a, std::uint32_t b) { return std::abs((m.vertices[a] - m.vertices[b]).norm() - 2.0) < 1e-9; };
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = a + 1; b < n; ++b)
      for (std::uint32_t c = b + 1; c < n; ++c) {
        if (!edge(a, b) || !edge(b, c) || !edge(a, c)) continue;
        const Vector3 normal = (m.vertices[b] - m.vertices[a]).cross(m.vertices[c] - m.vertices[a]);
        if (normal.dot(m.vertices[a]) > 0) m.triangles.push_back({a, b, c});
        else m.triangles.push_back({a, c, b});
      }
  return m;
}

TEST(Probes, IcosahedronExact) {
  const auto ico = icosahedron();
  ASSERT_EQ(ico.triangles.size(), 20u);
  ASSERT_TRUE(is_closed(ico));
  EXPECT_EQ(euler_characteristic(ico), 2);
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  DimensionProbe height{"h", ProbeKind::kHeight, Vector3::UnitY()};
  EXPECT_NEAR(measure_probe(ico, height), 2 * phi, 1e-12);
  DimensionProbe volume{"v", ProbeKind::kVolume};
  EXPECT_NEAR(measure_probe(ico, volume), 5.0 / 12.0 * (3 + std::sqrt(5.0)) * 8.0, 1e-9);
}

TEST(Probes, CubeSectionDiameter) {
  TriangleMesh cube;
  for (int z = 0; z < 2; ++z)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) cube.vertices.emplace_back(x, y, z);
  cube.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                    {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  ASSERT_TRUE(is_closed(cube));
  EXPECT_NEAR(enclosed_volume(cube), 1.0, 1e-12);
  DimensionProbe section{"d", ProbeKind::kDiameter, Vector3::UnitZ(), Point3::Zero(), 0.5};
  EXPECT_NEAR(measure_probe(cube, section), std::sqrt(2.0), 1e-12);
  section.offset = 2.0;
  EXPECT_EQ(measure_probe(cube, section), 0.0);
  EXPECT_THROW(measure_probe(TriangleMesh{}, section), Error);
}

TEST(Probes, ReconstructedSphereDimensions) {
  const Point3 c(0, 0, 600);
  const auto vol = sphere_volume(c, 35.0);
  const auto mesh = extract_mesh(vol);
  const double h = vol.voxel_size();
  EXPECT_NEAR(measure_probe(mesh, {"h", ProbeKind::kHeight, Vector3::UnitY(), c}), 70.0, h);
  EXPECT_NEAR(measure_probe(mesh, {"d", ProbeKind::kDiameter, Vector3::UnitY(), c, 0.0}), 70.0, h);
}

TEST(Probes, OpenMeshVolumeIsAnError) {
  auto ico = icosahedron();
  ico.triangles.pop_back();
  EXPECT_EQ(code_of([&] { measure_probe(ico, {"v", ProbeKind::kVolume}); }), ErrorCode::kOpenMesh);
}

TEST(VertexNormals, PointOutwardOnSphere) {
  const Point3 c(0, 0, 600);
  const auto mesh = extract_mesh(sphere_volume(c, 35.0));
  const auto n = vertex_normals(mesh);
  for (std::size_t i = 0; i < n.size(); ++i) EXPECT_GT(n[i].dot((mesh.vertices[i] - c).normalized()), 0.95);
}

TEST(Fusion, SampledSphereRoundTrip) {
  const Point3 c(0, 0, 600);
  const auto cloud = transform_cloud(RigidTransform::from_axis_angle(Vector3::UnitY(), 0, c),
                                     sample_surface(SyntheticObjectSpec::sphere(70)));
  TsdfVolume vol = TsdfVolume::centered_at(c, small_grid(128));
  integrate(vol, cloud, RigidTransform::identity());
  const auto mesh = extract_mesh(vol);
  EXPECT_TRUE(is_closed(mesh));
  for (const auto& v : mesh.vertices) EXPECT_LT(std::abs((v - c).norm() - 35.0), vol.voxel_size());
}
