#include <gtest/gtest.h>

#include <random>

#include "inhand/preprocess.hpp"

using namespace inhand;

namespace {

PointCloud cloud_of(std::vector<Point3> pts) {
  PointCloud c;
  c.points = std::move(pts);
  return c;
}

PointCloud sphere_sample(const Point3& center, double r, int n) {
  PointCloud c;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / n;
    const double rr = std::sqrt(1.0 - y * y);
    c.points.push_back(center + r * Vector3(std::cos(golden * i) * rr, y, std::sin(golden * i) * rr));
  }
  return c;
}

}  // namespace

TEST(ClipVolume, DefaultBounds) {
  const WorkingVolume vol;
  EXPECT_EQ(clip_volume(cloud_of({Point3(0, 0, 700)}), vol).size(), 1u);
  EXPECT_EQ(clip_volume(cloud_of({Point3(0, 0, 1200)}), vol).size(), 0u);
  EXPECT_TRUE(clip_volume(PointCloud{}, vol).empty());
}

TEST(ClipVolume, IdempotentAndInBounds) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-400, 1400);
  PointCloud c;
  for (int i = 0; i < 5000; ++i) {
    c.points.emplace_back(u(rng), u(rng), u(rng));
    c.normals.push_back(Vector3::UnitZ());
  }
  const WorkingVolume vol;
  const auto once = clip_volume(c, vol);
  const auto twice = clip_volume(once, vol);
  EXPECT_LE(once.size(), c.size());
  EXPECT_EQ(once.points, twice.points);
  EXPECT_EQ(once.normals.size(), once.points.size());
  for (const auto& p : once.points) EXPECT_TRUE(vol.contains(p));
}

TEST(ClipVolume, InvalidVolumeRejected) {
  WorkingVolume bad;
  bad.min.z() = 2000;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(EstimateNormals, PlaneFacesSensor) {
  PointCloud c;
  for (int i = -20; i <= 20; ++i)
    for (int j = -20; j <= 20; ++j) c.points.emplace_back(i * 0.5, j * 0.5, 500.0);
  const auto out = estimate_normals(c);
  for (const auto& n : out.normals) EXPECT_LT((n - Vector3(0, 0, -1)).norm(), 1e-3);
}

TEST(EstimateNormals, SphereNormalsWithinTwoDegrees) {
  const Point3 center(0, 0, 600);
  const auto c = sphere_sample(center, 35.0, 20000);
  const auto out = estimate_normals(c, kDefaultNormalNeighbors);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vector3 radial = (out.points[i] - center).normalized();
    const double cosang = std::abs(out.normals[i].dot(radial));
    EXPECT_GT(cosang, std::cos(deg_to_rad(2.0))) << "point " << i;
  }
}

TEST(EstimateNormals, OrientedTowardSensor) {
  const auto c = sphere_sample(Point3(10, -20, 650), 35.0, 5000);
  const auto out = estimate_normals(c);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_GE(out.normals[i].dot(-out.points[i]), 0.0);
}

TEST(EstimateNormals, DegenerateInputs) {
  const auto line = cloud_of({Point3(0, 0, 500), Point3(1, 0, 500), Point3(2, 0, 500)});
  EXPECT_THROW(estimate_normals(line, 3), Error);
  EXPECT_THROW(estimate_normals(cloud_of({Point3(0, 0, 500)}), 16), Error);
}

TEST(EstimateNormals, ThreadCountDoesNotChangeResult) {
  const auto c = sphere_sample(Point3(0, 0, 600), 35.0, 3000);
  EXPECT_EQ(estimate_normals(c, 16, 1).normals, estimate_normals(c, 16, 4).normals);
}

TEST(VoxelDownsample, OnePointPerVoxel) {
  PointCloud c;
  for (int i = 0; i < 100; ++i) c.points.emplace_back(0.01 * i, 0.0, 500.0);
  const auto out = voxel_downsample(c, 2.0);
  EXPECT_EQ(out.size(), 1u);
}
