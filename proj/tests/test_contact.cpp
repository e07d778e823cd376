#include <gtest/gtest.h>

#include <functional>
#include <optional>
#include <random>

#include "inhand/contact.hpp"

using namespace inhand;

namespace {

// A flat object patch at z = 500 and fingertip bones whose vertices hover a
// fixed height above it.
PointCloud patch() {
  PointCloud c;
  for (int i = -40; i <= 40; ++i)
    for (int j = -40; j <= 40; ++j) c.points.emplace_back(i * 0.5, j * 0.5, 500.0);
  return c;
}

void add_bone(PosedHand& h, BoneId bone, int count, double height, double x0) {
  for (int i = 0; i < count; ++i) {
    h.vertices.emplace_back(x0 + 0.5 * (i % 7), -3.0 + 0.5 * (i / 7), 500.0 - height);
    h.bone_label.push_back(bone);
  }
}

std::optional<ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST(DetectContacts, SmallestThresholdWins) {
  PosedHand h;
  h.end_effectors = {1, 2};
  add_bone(h, 1, 41, 0.5, -15);
  add_bone(h, 2, 41, 0.5, 5);
  const auto s = detect_contacts(h, patch());
  EXPECT_EQ(s.threshold_used, 1.0);
  EXPECT_EQ(s.contact_bones, (std::set<BoneId>{1, 2}));
  EXPECT_EQ(s.contact_vertices.size(), 82u);
}

TEST(DetectContacts, ThresholdGrowsInHalfMillimeterSteps) {
  const std::vector<std::pair<double, double>> cases{{0.7, 1.0}, {1.2, 1.5}, {1.7, 2.0}, {2.2, 2.5}, {4.4, 4.5}};
  for (const auto& [height, expected] : cases) {
    PosedHand h;
    h.end_effectors = {1, 2};
    add_bone(h, 1, 41, 0.5, -15);
    add_bone(h, 2, 41, height, 5);
    const auto s = detect_contacts(h, patch());
    EXPECT_EQ(s.threshold_used, expected) << "height " << height;
  }
}

TEST(DetectContacts, MixedFixtureSettlesAtTwoAndAHalf) {
  PosedHand h;
  h.end_effectors = {1, 2};
  add_bone(h, 1, 41, 0.5, -15);
  add_bone(h, 2, 41, 2.2, 5);
  EXPECT_EQ(detect_contacts(h, patch()).threshold_used, 2.5);
}

TEST(DetectContacts, BoneNeedsMoreThanFortyCandidates) {
  PosedHand h;
  h.end_effectors = {1, 2};
  add_bone(h, 1, 41, 0.5, -15);
  add_bone(h, 2, 40, 0.5, 5);
  EXPECT_EQ(code_of([&] { detect_contacts(h, patch()); }), ErrorCode::kNoContact);
  h.vertices.emplace_back(6.0, 0.0, 499.5);
  h.bone_label.push_back(2);
  EXPECT_EQ(detect_contacts(h, patch()).contact_bones.size(), 2u);
}

TEST(DetectContacts, OneBoneIsNotEnough) {
  PosedHand h;
  h.end_effectors = {1, 2};
  add_bone(h, 1, 200, 0.5, -15);
  add_bone(h, 2, 41, 30.0, 5);
  EXPECT_EQ(code_of([&] { detect_contacts(h, patch()); }), ErrorCode::kNoContact);
}

TEST(DetectContacts, NonEndEffectorsIgnored) {
  PosedHand h;
  h.end_effectors = {1, 2};
  add_bone(h, 0, 500, 0.2, -15);
  add_bone(h, 1, 41, 0.5, -5);
  add_bone(h, 2, 41, 0.5, 5);
  const auto s = detect_contacts(h, patch());
  EXPECT_EQ(s.contact_bones, (std::set<BoneId>{1, 2}));
  for (auto v : s.contact_vertices) EXPECT_NE(h.bone_label[v], 0);
}

TEST(DetectContacts, CapIsInclusive) {
  PosedHand h;
  h.end_effectors = {1, 2};
  add_bone(h, 1, 41, 9.7, -15);
  add_bone(h, 2, 41, 9.7, 5);
  EXPECT_EQ(detect_contacts(h, patch()).threshold_used, 10.0);
  PosedHand far;
  far.end_effectors = {1, 2};
  add_bone(far, 1, 41, 10.2, -15);
  add_bone(far, 2, 41, 10.2, 5);
  EXPECT_EQ(code_of([&] { detect_contacts(far, patch()); }), ErrorCode::kNoContact);
}

TEST(DetectContacts, InvalidInputs) {
  PosedHand h;
  h.end_effectors = {1};
  add_bone(h, 1, 41, 0.5, 0);
  EXPECT_EQ(code_of([&] { detect_contacts(h, PointCloud{}); }), ErrorCode::kEmptyInput);
  h.bone_label.pop_back();
  EXPECT_EQ(code_of([&] { detect_contacts(h, patch()); }), ErrorCode::kInvalidArgument);
}

TEST(ContactCorrespondences, SharedBonesOnly) {
  PosedHand a;
  a.end_effectors = {1, 2, 3};
  add_bone(a, 1, 10, 0.5, -15);
  add_bone(a, 2, 20, 0.5, -5);
  add_bone(a, 3, 30, 0.5, 5);
  PosedHand b = a;
  for (auto& v : b.vertices) v += Vector3(1, 2, 3);
  ContactState sa, sb;
  sa.contact_bones = {1, 2};
  sb.contact_bones = {2, 3};
  const auto set = contact_correspondences(a, b, sa, sb);
  EXPECT_EQ(set.tag(), CorrespondenceTag::kContact);
  ASSERT_EQ(set.size(), 20u);
  for (const auto& c : set.pairs()) EXPECT_EQ(c.target - c.source, Vector3(1, 2, 3));
  EXPECT_TRUE(contact_correspondences(a, b, sa, ContactState{}).empty());
}

TEST(ContactCorrespondences, CountIsSumOfSharedBoneSizes) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> bone(0, 5);
  for (int trial = 0; trial < 200; ++trial) {
    PosedHand h;
    h.end_effectors = {0, 1, 2, 3, 4, 5};
    std::map<BoneId, std::size_t> sizes;
    for (int i = 0; i < 120; ++i) {
      const BoneId b = bone(rng);
      h.vertices.emplace_back(i, 0, 500);
      h.bone_label.push_back(b);
      ++sizes[b];
    }
    ContactState sa, sb;
    for (BoneId b = 0; b < 6; ++b) {
      if (bone(rng) < 3) sa.contact_bones.insert(b);
      if (bone(rng) < 3) sb.contact_bones.insert(b);
    }
    std::size_t expected = 0;
    for (BoneId b : sa.contact_bones)
      if (sb.contact_bones.contains(b)) expected += sizes[b];
    ASSERT_EQ(contact_correspondences(h, h, sa, sb).size(), expected);
  }
}

TEST(ContactCorrespondences, RigidlyMovedHandRecoversMotion) {
  PosedHand a;
  a.end_effectors = {1, 2};
  add_bone(a, 1, 60, 0.5, -15);
  add_bone(a, 2, 60, 0.5, 5);
  for (std::size_t i = 0; i < a.vertices.size(); ++i) a.vertices[i].z() += 0.3 * std::sin(0.7 * i);
  const auto t = RigidTransform::from_axis_angle(Vector3(0.3, 1, 0.2), deg_to_rad(7), Vector3(2, -1, 4));
  PosedHand b = a;
  for (auto& v : b.vertices) v = t(v);
  ContactState s;
  s.contact_bones = {1, 2};
  const auto set = contact_correspondences(a, b, s, s);
  std::vector<WeightedPair> pairs;
  for (const auto& c : set.pairs()) pairs.push_back({c.source, c.target, 1.0});
  const auto est = solve_weighted_rigid(pairs);
  EXPECT_LT((est.rotation - t.rotation).norm(), 1e-9);
  EXPECT_LT((est.translation - t.translation).norm(), 1e-6);
}

TEST(ContactCorrespondences, TopologyMismatchThrows) {
  PosedHand a;
  a.end_effectors = {1};
  add_bone(a, 1, 10, 0.5, 0);
  PosedHand b = a;
  b.vertices.pop_back();
  b.bone_label.pop_back();
  ContactState s;
  s.contact_bones = {1};
  EXPECT_THROW(contact_correspondences(a, b, s, s), Error);
}
