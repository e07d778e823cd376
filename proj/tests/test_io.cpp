#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <unistd.h>

#include "inhand/io.hpp"
#include "inhand/synth.hpp"

using namespace inhand;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("inhand_io_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

PointCloud random_cloud(std::size_t n, bool colors, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-100, 100), c(0, 1);
  PointCloud pc;
  for (std::size_t i = 0; i < n; ++i) {
    pc.points.emplace_back(u(rng), u(rng), 600 + u(rng));
    pc.normals.push_back(Vector3(u(rng), u(rng), u(rng)).normalized());
    if (colors) pc.colors.emplace_back(std::round(255 * c(rng)) / 255, std::round(255 * c(rng)) / 255, 0.0);
  }
  return pc;
}

// Stores through volatile so the narrowing survives vectorization.
double to_float(double v) {
  volatile float f = static_cast<float>(v);
  return f;
}

Point3 as_float(const Point3& p) { return {to_float(p.x()), to_float(p.y()), to_float(p.z())}; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

std::string what_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Ply, BinaryRoundTripIsFloat32Exact) {
  const auto pc = random_cloud(500, true);
  std::vector<std::array<std::uint32_t, 3>> tris{{0, 1, 2}, {2, 3, 4}};
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  write_ply(buf, pc, tris, PlyFormat::kBinaryLittleEndian);
  const auto back = read_ply(buf);
  ASSERT_EQ(back.cloud.size(), pc.size());
  ASSERT_TRUE(back.cloud.has_normals());
  ASSERT_TRUE(back.cloud.has_colors());
  for (std::size_t i = 0; i < pc.size(); ++i) {
    EXPECT_EQ(back.cloud.points[i], as_float(pc.points[i]));
    EXPECT_EQ(back.cloud.normals[i], as_float(pc.normals[i]));
    EXPECT_LT((back.cloud.colors[i] - pc.colors[i]).norm(), 1e-12);
  }
  EXPECT_EQ(back.triangles, tris);
}

TEST(Ply, AsciiRoundTripWithinTolerance) {
  const auto pc = random_cloud(200, false);
  std::stringstream buf;
  write_ply(buf, pc, {}, PlyFormat::kAscii);
  EXPECT_EQ(buf.str().rfind("ply\nformat ascii 1.0\n", 0), 0u);
  const auto back = read_ply(buf);
  ASSERT_EQ(back.cloud.size(), pc.size());
  EXPECT_FALSE(back.cloud.has_colors());
  for (std::size_t i = 0; i < pc.size(); ++i) {
    EXPECT_LT((back.cloud.points[i] - pc.points[i]).norm(), 1e-4);
    EXPECT_EQ(back.cloud.points[i], as_float(pc.points[i]));
  }
}

TEST(Ply, ReadsForeignLayouts) {
  const std::string text =
      "ply\nformat ascii 1.0\ncomment made elsewhere\nelement vertex 4\n"
      "property double x\nproperty double y\nproperty double z\nproperty float confidence\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      "element face 1\nproperty list uchar uint vertex_index\nend_header\n"
      "0 0 0 0.5 255 0 0\n1 0 0 0.5 0 255 0\n1 1 0 0.5 0 0 255\n0 1 0 0.5 255 255 255\n4 0 1 2 3\n";
  std::istringstream in(text);
  const auto d = read_ply(in);
  ASSERT_EQ(d.cloud.size(), 4u);
  EXPECT_FALSE(d.cloud.has_normals());
  EXPECT_EQ(d.cloud.colors[0], Vector3(1, 0, 0));
  ASSERT_EQ(d.triangles.size(), 2u);
  EXPECT_EQ(d.triangles[0], (std::array<std::uint32_t, 3>{0, 1, 2}));
  EXPECT_EQ(d.triangles[1], (std::array<std::uint32_t, 3>{0, 2, 3}));
}

TEST(Ply, MalformedInputs) {
  std::istringstream not_ply("hello\n");
  EXPECT_EQ(code_of([&] { read_ply(not_ply); }), ErrorCode::kParse);
  std::istringstream big_endian("ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n");
  EXPECT_EQ(code_of([&] { read_ply(big_endian); }), ErrorCode::kParse);
  std::istringstream no_xyz("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n1\n");
  EXPECT_EQ(code_of([&] { read_ply(no_xyz); }), ErrorCode::kParse);
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  write_ply(buf, random_cloud(50, false), {}, PlyFormat::kBinaryLittleEndian);
  std::string cut = buf.str();
  cut.resize(cut.size() - 10);
  std::istringstream truncated(cut);
  EXPECT_EQ(code_of([&] { read_ply(truncated); }), ErrorCode::kParse);
  std::istringstream bad_face(
      "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n3 0 0 7\n");
  EXPECT_EQ(code_of([&] { read_ply(bad_face); }), ErrorCode::kParse);
}

TEST(Ply, MeshWithZeroNormalsWrites) {
  TriangleMesh m;
  m.vertices = {Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0)};
  m.triangles = {{0, 1, 2}};
  m.normals = {Vector3::Zero(), Vector3::UnitZ(), Vector3::UnitZ()};
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  EXPECT_NO_THROW(write_ply(buf, m, PlyFormat::kBinaryLittleEndian));
  EXPECT_EQ(read_ply(buf).mesh().triangles, m.triangles);
}

TEST(Obj, RoundTripAndNegativeIndices) {
  TriangleMesh m;
  m.vertices = {Point3(0.1, 0.2, 0.3), Point3(1, 0, 0), Point3(0, 1, 0), Point3(0, 0, 1)};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  std::stringstream buf;
  write_obj(buf, m);
  const auto back = read_obj(buf);
  EXPECT_EQ(back.vertices, m.vertices);
  EXPECT_EQ(back.triangles, m.triangles);
  std::istringstream neg("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4 -3 -2 -1\n");
  const auto quad = read_obj(neg);
  ASSERT_EQ(quad.triangles.size(), 2u);
  EXPECT_EQ(quad.triangles[1], (std::array<std::uint32_t, 3>{0, 2, 3}));
  std::istringstream bad("v 0 0 0\nf 1 2 3\n");
  EXPECT_EQ(code_of([&] { read_obj(bad); }), ErrorCode::kParse);
}

TEST(Trajectory, JsonlRoundTrip) {
  FramePose a;
  a.frame_index = 3;
  a.world_from_frame = RigidTransform::from_axis_angle(Vector3(1, 2, 3), 0.3, Vector3(0.1, -2, 5));
  a.sparse_residual = 0.25;
  a.icp_residual = 0.5;
  a.icp_iterations = 7;
  a.correspondence_counts = {{"contact", 450}, {"feat3d", 12}};
  a.contact_threshold = 1.5;
  FramePose b;
  b.frame_index = 4;
  b.skipped = true;
  b.status = "under-constrained: x";
  const std::string text = trajectory_jsonl({a, b});
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  std::istringstream in(text);
  const auto back = parse_trajectory_jsonl(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(back[0] == a);
  EXPECT_TRUE(back[1] == b);
  std::istringstream bad("{\"frame\": 1}\n");
  const auto msg = what_of([&] { parse_trajectory_jsonl(bad, "traj"); });
  EXPECT_NE(msg.find("traj:1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("rotation"), std::string::npos) << msg;
}

TEST_F(TempDir, AtomicWriteCreatesParentsAndLeavesNoTemp) {
  const auto p = dir_ / "a" / "b" / "out.json";
  write_json_atomic(p, Json{{"x", 1}});
  write_json_atomic(p, Json{{"x", 2}});
  EXPECT_EQ(read_json_file(p)["x"], 2);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(p.parent_path())) {
    ++files;
    EXPECT_EQ(e.path().extension(), ".json");
  }
  EXPECT_EQ(files, 1u);
  EXPECT_EQ(code_of([&] { read_file(dir_ / "missing.txt"); }), ErrorCode::kIo);
  write_file_atomic(dir_ / "broken.json", "{ not json");
  EXPECT_EQ(code_of([&] { read_json_file(dir_ / "broken.json"); }), ErrorCode::kParse);
}

TEST_F(TempDir, TsdfDump) {
  TsdfConfig cfg;
  cfg.side_length = 32;
  cfg.resolution = 16;
  TsdfVolume vol(Point3(1, 2, 3), cfg);
  vol.set(1, 2, 3, -0.25, 1);
  write_tsdf_dump(dir_ / "grid", vol);
  const auto raw = read_file(dir_ / "grid.raw");
  ASSERT_EQ(raw.size(), 16u * 16 * 16 * 4);
  float v = 0;
  std::memcpy(&v, raw.data() + 4 * ((3 * 16 + 2) * 16 + 1), 4);
  EXPECT_EQ(v, -0.25f);
  std::memcpy(&v, raw.data(), 4);
  EXPECT_EQ(v, 1.0f);
  const auto h = read_json_file(dir_ / "grid.json");
  EXPECT_EQ(h["data"], "grid.raw");
  EXPECT_EQ(h["resolution"], 16);
  EXPECT_EQ(h["voxel_size"], 2.0);
  EXPECT_EQ(h["order"], "x-fastest");
  EXPECT_EQ(h["origin"], Json::array({1.0, 2.0, 3.0}));
}

TEST_F(TempDir, HandModelRoundTrip) {
  HandModel h;
  h.mesh.vertices = {Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0)};
  h.mesh.triangles = {{0, 1, 2}};
  h.bone_label = {0, 1, 2};
  h.end_effectors = {1, 2};
  h.bone_names = {{0, "palm"}, {1, "thumb_tip"}, {2, "index_tip"}};
  write_hand_model(dir_ / "h.obj", dir_ / "h.json", h);
  const auto back = read_hand_model(dir_ / "h.obj", dir_ / "h.json");
  EXPECT_EQ(back.mesh.vertices, h.mesh.vertices);
  EXPECT_EQ(back.bone_label, h.bone_label);
  EXPECT_EQ(back.end_effectors, h.end_effectors);
  EXPECT_EQ(back.bone_names, h.bone_names);
  write_json_atomic(dir_ / "short.json", Json{{"bone_label", {0, 1}}, {"end_effectors", {1}}});
  EXPECT_NE(what_of([&] { read_hand_model(dir_ / "h.obj", dir_ / "short.json"); }).find("2 bone labels"),
            std::string::npos);
}

TEST_F(TempDir, SequenceAndManifestRoundTrip) {
  auto seq = generate_sequence(SyntheticObjectSpec::capsule_bottle("small-bottle", 52, 80),
                               turning_motion(3, 5.0, 0.5), {}, 4);
  seq.frames[1].feat2d_matches = std::vector<Feat2dMatch>{{{100.5, 200.25}, 612.0, {101.0, 199.0}, 611.5}};
  ReconstructOptions options;
  options.registration.gamma_t = 7.5;
  options.tsdf.resolution = 200;
  const auto written = write_sequence(dir_ / "seq", seq, options);
  const auto m = read_manifest(dir_ / "seq" / "manifest.json");
  EXPECT_TRUE(m == written);
  EXPECT_EQ(m.options.registration.gamma_t, 7.5);
  EXPECT_EQ(m.options.tsdf.resolution, 200);
  EXPECT_EQ(m.version, kManifestVersion);
  EXPECT_EQ(manifest_from_json(to_json(m)), m);

  const auto loaded = load_sequence(m);
  ASSERT_EQ(loaded.frames.size(), seq.frames.size());
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const auto& a = seq.frames[k];
    const auto& b = loaded.frames[k];
    ASSERT_EQ(a.object_cloud.size(), b.object_cloud.size());
    for (std::size_t i = 0; i < a.object_cloud.size(); ++i)
      EXPECT_EQ(b.object_cloud.points[i], as_float(a.object_cloud.points[i]));
    ASSERT_EQ(a.hand_pose.vertices.size(), b.hand_pose.vertices.size());
    EXPECT_EQ(b.hand_pose.bone_label, a.hand_pose.bone_label);
    EXPECT_EQ(b.detector_boxes, a.detector_boxes);
    EXPECT_EQ(b.hand_cloud.size(), a.hand_cloud.size());
  }
  ASSERT_TRUE(loaded.frames[1].feat2d_matches.has_value());
  EXPECT_EQ(loaded.frames[1].feat2d_matches->at(0).source.v, 200.25);
  EXPECT_FALSE(loaded.frames[0].feat2d_matches.has_value());
  EXPECT_EQ(loaded.probes, seq.probes);
  EXPECT_EQ(loaded.annotations.size(), seq.annotations.size());
  ASSERT_EQ(loaded.gt_object_poses.size(), seq.gt_object_poses.size());
  EXPECT_LT((loaded.gt_object_poses[2].rotation - seq.gt_object_poses[2].rotation).norm(), 1e-12);
  EXPECT_EQ(loaded.end_effectors, seq.end_effectors);
}

TEST_F(TempDir, ManifestErrorsNameTheProblem) {
  auto seq = generate_sequence(SyntheticObjectSpec::sphere(70), turning_motion(2, 5.0, 0.5), {}, 4);
  write_sequence(dir_ / "seq", seq);
  const auto path = dir_ / "seq" / "manifest.json";
  fs::remove(dir_ / "seq" / "frames" / "0001_hand.ply");
  const auto msg = what_of([&] { read_manifest(path); });
  EXPECT_NE(msg.find("frame 1 hand pose"), std::string::npos) << msg;
  EXPECT_EQ(code_of([&] { read_manifest(path); }), ErrorCode::kIo);

  Json j = read_json_file(path);
  j.erase("intrinsics");
  EXPECT_NE(what_of([&] { manifest_from_json(j); }).find("'intrinsics'"), std::string::npos);
  j = read_json_file(path);
  j["version"] = 99;
  EXPECT_EQ(code_of([&] { manifest_from_json(j); }), ErrorCode::kParse);
  j = read_json_file(path);
  j["frames"] = Json::array();
  EXPECT_EQ(code_of([&] { manifest_from_json(j); }), ErrorCode::kParse);
  j = read_json_file(path);
  j["tsdf"]["resolution"] = 8;
  EXPECT_EQ(code_of([&] { manifest_from_json(j); }), ErrorCode::kInvalidArgument);
}

TEST_F(TempDir, HandVertexCountMismatchRejected) {
  auto seq = generate_sequence(SyntheticObjectSpec::sphere(70), turning_motion(2, 5.0, 0.5), {}, 4);
  const auto m = write_sequence(dir_ / "seq", seq);
  PointCloud few;
  few.points = {Point3(0, 0, 500), Point3(1, 0, 500)};
  write_ply_atomic(dir_ / "seq" / m.frames[0].hand, few, PlyFormat::kAscii);
  EXPECT_EQ(code_of([&] { load_sequence(m); }), ErrorCode::kParse);
}
