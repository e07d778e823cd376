#ifndef INHAND_IO_HPP
#define INHAND_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "inhand/pipeline.hpp"
#include "inhand/ply.hpp"
#include "inhand/sequence.hpp"

namespace inhand {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

inline constexpr const char* kManifestSchema = "inhand-sequence-manifest";
inline constexpr int kManifestVersion = 1;

// ---------------------------------------------------------------------------
// Files

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never see a partial file.
inline void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename onto '" + path.string() + "': " + ec.message());
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json read_json_file(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

inline void write_json_atomic(const fs::path& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

inline void write_ply_atomic(const fs::path& path, const PointCloud& cloud, PlyFormat format,
                             const std::vector<std::array<std::uint32_t, 3>>& triangles = {}) {
  std::ostringstream out(std::ios::binary);
  write_ply(out, cloud, triangles, format);
  write_file_atomic(path, out.str());
}

inline void write_ply_atomic(const fs::path& path, const TriangleMesh& mesh, PlyFormat format) {
  std::ostringstream out(std::ios::binary);
  write_ply(out, mesh, format);
  write_file_atomic(path, out.str());
}

inline void write_obj_atomic(const fs::path& path, const TriangleMesh& mesh) {
  std::ostringstream out;
  write_obj(out, mesh);
  write_file_atomic(path, out.str());
}

// ---------------------------------------------------------------------------
// JSON conversions. Field access goes through `field` so a missing key names
// itself in the error.

namespace detail {

inline const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::kParse, where + ": missing field '" + key + "'");
  return j.at(key);
}

template <typename T>
T get(const Json& j, const char* key, const std::string& where) {
  try {
    return field(j, key, where).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, where + ": field '" + key + "': " + e.what());
  }
}

template <typename T>
void get_opt(const Json& j, const char* key, T& out, const std::string& where) {
  if (j.is_object() && j.contains(key)) out = get<T>(j, key, where);
}

inline Json vec3(const Vector3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Vector3 vec3(const Json& j, const char* key, const std::string& where) {
  const auto a = get<std::vector<double>>(j, key, where);
  if (a.size() != 3) throw Error(ErrorCode::kParse, where + ": field '" + key + "' needs 3 numbers");
  return {a[0], a[1], a[2]};
}

}  // namespace detail

inline Json to_json(const RigidTransform& t) {
  Json r = Json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r.push_back(t.rotation(i, k));
  return Json{{"rotation", r}, {"translation", detail::vec3(t.translation)}};
}

inline RigidTransform transform_from_json(const Json& j, const std::string& where) {
  const auto r = detail::get<std::vector<double>>(j, "rotation", where);
  if (r.size() != 9) throw Error(ErrorCode::kParse, where + ": rotation needs 9 numbers (row-major 3x3)");
  RigidTransform t;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) t.rotation(i, k) = r[3 * i + k];
  t.translation = detail::vec3(j, "translation", where);
  return t;
}

inline Json to_json(const CameraIntrinsics& k) {
  return Json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

inline CameraIntrinsics intrinsics_from_json(const Json& j, const std::string& where) {
  CameraIntrinsics k;
  k.fx = detail::get<double>(j, "fx", where);
  k.fy = detail::get<double>(j, "fy", where);
  k.cx = detail::get<double>(j, "cx", where);
  k.cy = detail::get<double>(j, "cy", where);
  k.width = detail::get<int>(j, "width", where);
  k.height = detail::get<int>(j, "height", where);
  k.validate();
  return k;
}

inline Json to_json(const WorkingVolume& v) { return Json{{"min", detail::vec3(v.min)}, {"max", detail::vec3(v.max)}}; }

inline WorkingVolume volume_from_json(const Json& j, const std::string& where) {
  WorkingVolume v{detail::vec3(j, "min", where), detail::vec3(j, "max", where)};
  v.validate();
  return v;
}

inline Json to_json(const RegistrationConfig& c) {
  const auto& iss = c.feat3d.iss;
  return Json{
      {"gamma_t", c.gamma_t},
      {"use_contact", c.use_contact},
      {"use_detector", c.use_detector},
      {"use_icp", c.use_icp},
      {"icp_max_dist", c.icp_max_dist},
      {"icp_max_iters", c.icp_max_iters},
      {"icp_convergence_eps", c.icp_convergence_eps},
      {"icp_reciprocal", c.icp_reciprocal},
      {"metascan_voxel", c.metascan_voxel},
      {"normal_neighbors", c.normal_neighbors},
      {"feat3d",
       {{"salient_radius", iss.salient_radius},
        {"nonmax_radius", iss.nonmax_radius},
        {"gamma21", iss.gamma21},
        {"gamma32", iss.gamma32},
        {"min_neighbors", iss.min_neighbors},
        {"min_saliency", iss.min_saliency},
        {"descriptor_radius", c.feat3d.descriptor_radius},
        {"ratio", c.feat3d.ratio}}},
      {"contact",
       {{"initial_threshold", c.contact.initial_threshold},
        {"threshold_step", c.contact.threshold_step},
        {"threshold_cap", c.contact.threshold_cap},
        {"min_candidates", c.contact.min_candidates},
        {"min_bones", c.contact.min_bones}}},
  };
}

/// Missing keys keep their defaults; present keys must have the right type.
inline void update_from_json(RegistrationConfig& c, const Json& j, const std::string& where) {
  using detail::get_opt;
  get_opt(j, "gamma_t", c.gamma_t, where);
  get_opt(j, "use_contact", c.use_contact, where);
  get_opt(j, "use_detector", c.use_detector, where);
  get_opt(j, "use_icp", c.use_icp, where);
  get_opt(j, "icp_max_dist", c.icp_max_dist, where);
  get_opt(j, "icp_max_iters", c.icp_max_iters, where);
  get_opt(j, "icp_convergence_eps", c.icp_convergence_eps, where);
  get_opt(j, "icp_reciprocal", c.icp_reciprocal, where);
  get_opt(j, "metascan_voxel", c.metascan_voxel, where);
  get_opt(j, "normal_neighbors", c.normal_neighbors, where);
  if (j.contains("feat3d")) {
    const Json& f = j.at("feat3d");
    const std::string w = where + ".feat3d";
    get_opt(f, "salient_radius", c.feat3d.iss.salient_radius, w);
    get_opt(f, "nonmax_radius", c.feat3d.iss.nonmax_radius, w);
    get_opt(f, "gamma21", c.feat3d.iss.gamma21, w);
    get_opt(f, "gamma32", c.feat3d.iss.gamma32, w);
    get_opt(f, "min_neighbors", c.feat3d.iss.min_neighbors, w);
    get_opt(f, "min_saliency", c.feat3d.iss.min_saliency, w);
    get_opt(f, "descriptor_radius", c.feat3d.descriptor_radius, w);
    get_opt(f, "ratio", c.feat3d.ratio, w);
  }
  if (j.contains("contact")) {
    const Json& f = j.at("contact");
    const std::string w = where + ".contact";
    get_opt(f, "initial_threshold", c.contact.initial_threshold, w);
    get_opt(f, "threshold_step", c.contact.threshold_step, w);
    get_opt(f, "threshold_cap", c.contact.threshold_cap, w);
    get_opt(f, "min_candidates", c.contact.min_candidates, w);
    get_opt(f, "min_bones", c.contact.min_bones, w);
  }
}

inline Json to_json(const TsdfConfig& c) {
  return Json{{"side_length", c.side_length},
              {"resolution", c.resolution},
              {"truncation_voxels", c.truncation_voxels},
              {"max_voxel_size", c.max_voxel_size}};
}

inline void update_from_json(TsdfConfig& c, const Json& j, const std::string& where) {
  detail::get_opt(j, "side_length", c.side_length, where);
  detail::get_opt(j, "resolution", c.resolution, where);
  detail::get_opt(j, "truncation_voxels", c.truncation_voxels, where);
  detail::get_opt(j, "max_voxel_size", c.max_voxel_size, where);
}

inline Json to_json(const DimensionProbe& p) {
  return Json{{"name", p.name},         {"kind", to_string(p.kind)},  {"axis", detail::vec3(p.axis)},
              {"origin", detail::vec3(p.origin)}, {"offset", p.offset}, {"ground_truth", p.ground_truth}};
}

inline ProbeKind probe_kind_from_string(const std::string& s, const std::string& where) {
  if (s == "height") return ProbeKind::kHeight;
  if (s == "diameter") return ProbeKind::kDiameter;
  if (s == "volume") return ProbeKind::kVolume;
  throw Error(ErrorCode::kParse, where + ": unknown probe kind '" + s + "'");
}

inline DimensionProbe probe_from_json(const Json& j, const std::string& where) {
  DimensionProbe p;
  p.name = detail::get<std::string>(j, "name", where);
  p.kind = probe_kind_from_string(detail::get<std::string>(j, "kind", where), where);
  p.axis = detail::vec3(j, "axis", where);
  p.origin = detail::vec3(j, "origin", where);
  p.offset = detail::get<double>(j, "offset", where);
  p.ground_truth = detail::get<double>(j, "ground_truth", where);
  return p;
}

inline Json to_json(const std::vector<DetectorBox>& boxes) {
  Json a = Json::array();
  for (const auto& b : boxes)
    a.push_back({{"label", b.label}, {"u_min", b.u_min}, {"v_min", b.v_min}, {"width", b.width}, {"height", b.height}});
  return a;
}

inline std::vector<DetectorBox> boxes_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorCode::kParse, where + ": detector boxes must be an array");
  std::vector<DetectorBox> out;
  for (const auto& b : j) {
    DetectorBox box{detail::get<std::string>(b, "label", where), detail::get<int>(b, "u_min", where),
                    detail::get<int>(b, "v_min", where), detail::get<int>(b, "width", where),
                    detail::get<int>(b, "height", where)};
    if (box.width <= 0 || box.height <= 0) throw Error(ErrorCode::kParse, where + ": box with non-positive size");
    out.push_back(std::move(box));
  }
  return out;
}

/// One JSON object per line: frame index, row-major rotation, translation,
/// residuals and correspondence counts.
inline Json to_json(const FramePose& p) {
  Json j = to_json(p.world_from_frame);
  Json out{{"frame", p.frame_index}};
  out["rotation"] = j["rotation"];
  out["translation"] = j["translation"];
  out["sparse_residual"] = p.sparse_residual;
  out["icp_residual"] = p.icp_residual;
  out["icp_iterations"] = p.icp_iterations;
  Json counts = Json::object();
  for (const auto& [k, v] : p.correspondence_counts) counts[k] = v;
  out["correspondences"] = counts;
  out["contact_threshold"] = p.contact_threshold;
  out["skipped"] = p.skipped;
  out["status"] = p.status;
  return out;
}

inline FramePose frame_pose_from_json(const Json& j, const std::string& where) {
  FramePose p;
  p.frame_index = detail::get<int>(j, "frame", where);
  p.world_from_frame = transform_from_json(j, where);
  p.sparse_residual = detail::get<double>(j, "sparse_residual", where);
  p.icp_residual = detail::get<double>(j, "icp_residual", where);
  p.icp_iterations = detail::get<int>(j, "icp_iterations", where);
  p.correspondence_counts = detail::get<std::map<std::string, std::size_t>>(j, "correspondences", where);
  p.contact_threshold = detail::get<double>(j, "contact_threshold", where);
  p.skipped = detail::get<bool>(j, "skipped", where);
  p.status = detail::get<std::string>(j, "status", where);
  return p;
}

inline std::string trajectory_jsonl(const std::vector<FramePose>& trajectory) {
  std::string out;
  for (const auto& p : trajectory) out += to_json(p).dump() + "\n";
  return out;
}

inline std::vector<FramePose> parse_trajectory_jsonl(std::istream& in, const std::string& origin = "<stream>") {
  std::vector<FramePose> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(n);
    try {
      out.push_back(frame_pose_from_json(Json::parse(line), where));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParse, where + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hand model: OBJ vertices in topology order plus a JSON sidecar with the
// bone label of every vertex and the end-effector bones.

struct HandModel {
  TriangleMesh mesh;
  std::vector<BoneId> bone_label;
  std::set<BoneId> end_effectors;
  std::map<BoneId, std::string> bone_names;

  void validate() const {
    if (bone_label.size() != mesh.vertices.size())
      throw Error(ErrorCode::kInvalidArgument, "hand model has " + std::to_string(mesh.vertices.size()) +
                                                   " vertices but " + std::to_string(bone_label.size()) +
                                                   " bone labels");
    if (end_effectors.empty()) throw Error(ErrorCode::kInvalidArgument, "hand model has no end-effector bones");
  }
};

inline Json hand_labels_json(const HandModel& h) {
  Json names = Json::object();
  for (const auto& [id, name] : h.bone_names) names[std::to_string(id)] = name;
  return Json{{"bone_label", h.bone_label},
              {"end_effectors", std::vector<BoneId>(h.end_effectors.begin(), h.end_effectors.end())},
              {"bone_names", names}};
}

inline void write_hand_model(const fs::path& obj_path, const fs::path& json_path, const HandModel& h) {
  h.validate();
  write_obj_atomic(obj_path, h.mesh);
  write_json_atomic(json_path, hand_labels_json(h));
}

inline HandModel read_hand_model(const fs::path& obj_path, const fs::path& json_path) {
  HandModel h;
  {
    std::ifstream in(obj_path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open hand model '" + obj_path.string() + "'");
    h.mesh = read_obj(in, obj_path.string());
  }
  const Json j = read_json_file(json_path);
  const std::string where = json_path.string();
  h.bone_label = detail::get<std::vector<BoneId>>(j, "bone_label", where);
  const auto ee = detail::get<std::vector<BoneId>>(j, "end_effectors", where);
  h.end_effectors = {ee.begin(), ee.end()};
  if (j.contains("bone_names"))
    for (const auto& [k, v] : j.at("bone_names").items()) h.bone_names[std::stoi(k)] = v.get<std::string>();
  h.validate();
  return h;
}

// ---------------------------------------------------------------------------
// Manifest

/// Per-frame inputs; paths are relative to the manifest directory and empty
/// when absent.
struct FrameEntry {
  int index = 0;
  std::string object;
  std::string hand;        // posed hand vertices, hand-model vertex order
  std::string hand_cloud;  // segmented hand depth points
  std::string feat2d;
  std::string boxes;

  friend bool operator==(const FrameEntry&, const FrameEntry&) = default;
};

struct OutputPaths {
  std::string mesh = "out/mesh.ply";
  std::string mesh_obj = "out/mesh.obj";
  std::string trajectory = "out/trajectory.jsonl";
  std::string report = "out/report.json";
  std::string tsdf = "out/tsdf";

  friend bool operator==(const OutputPaths&, const OutputPaths&) = default;
};

struct SequenceManifest {
  int version = kManifestVersion;
  std::string name;
  CameraIntrinsics intrinsics;
  std::string hand_model_mesh;    // OBJ
  std::string hand_model_labels;  // JSON sidecar
  std::vector<FrameEntry> frames;
  ReconstructOptions options;  // includes the working volume
  std::string ground_truth;    // optional JSON
  OutputPaths outputs;
  fs::path base_dir;  // not serialized

  fs::path resolve(const std::string& rel) const { return rel.empty() ? fs::path() : base_dir / rel; }

  friend bool operator==(const SequenceManifest& a, const SequenceManifest& b) {
    return a.version == b.version && a.name == b.name && a.intrinsics == b.intrinsics &&
           a.hand_model_mesh == b.hand_model_mesh && a.hand_model_labels == b.hand_model_labels &&
           a.frames == b.frames && a.options == b.options && a.ground_truth == b.ground_truth &&
           a.outputs == b.outputs;
  }
};

inline Json to_json(const SequenceManifest& m) {
  Json frames = Json::array();
  for (const auto& f : m.frames) {
    Json e{{"index", f.index}, {"object", f.object}};
    if (!f.hand.empty()) e["hand"] = f.hand;
    if (!f.hand_cloud.empty()) e["hand_cloud"] = f.hand_cloud;
    if (!f.feat2d.empty()) e["feat2d"] = f.feat2d;
    if (!f.boxes.empty()) e["boxes"] = f.boxes;
    frames.push_back(std::move(e));
  }
  Json j{{"schema", kManifestSchema}, {"version", m.version}, {"name", m.name}};
  j["intrinsics"] = to_json(m.intrinsics);
  j["working_volume"] = to_json(m.options.registration.volume);
  if (!m.hand_model_mesh.empty())
    j["hand_model"] = Json{{"mesh", m.hand_model_mesh}, {"labels", m.hand_model_labels}};
  j["frames"] = frames;
  Json reg = to_json(m.options.registration);
  j["registration"] = reg;
  j["tsdf"] = to_json(m.options.tsdf);
  j["mesh"] = Json{{"min_component_fraction", m.options.min_component_fraction},
                   {"close_holes", m.options.close_holes},
                   {"smooth_iterations", m.options.smooth_iterations},
                   {"smooth_lambda", m.options.smooth_lambda}};
  if (!m.ground_truth.empty()) j["ground_truth"] = m.ground_truth;
  j["outputs"] = Json{{"mesh", m.outputs.mesh},
                      {"mesh_obj", m.outputs.mesh_obj},
                      {"trajectory", m.outputs.trajectory},
                      {"report", m.outputs.report},
                      {"tsdf", m.outputs.tsdf}};
  return j;
}

/// Parses without touching the file system.
inline SequenceManifest manifest_from_json(const Json& j, const std::string& where = "manifest") {
  using detail::get;
  using detail::get_opt;
  if (get<std::string>(j, "schema", where) != kManifestSchema)
    throw Error(ErrorCode::kParse, where + ": not an inhand sequence manifest");
  SequenceManifest m;
  m.version = get<int>(j, "version", where);
  if (m.version != kManifestVersion)
    throw Error(ErrorCode::kParse, where + ": unsupported manifest version " + std::to_string(m.version));
  m.name = get<std::string>(j, "name", where);
  m.intrinsics = intrinsics_from_json(detail::field(j, "intrinsics", where), where + ".intrinsics");
  if (j.contains("registration")) update_from_json(m.options.registration, j.at("registration"), where + ".registration");
  m.options.registration.volume = volume_from_json(detail::field(j, "working_volume", where), where + ".working_volume");
  if (j.contains("tsdf")) update_from_json(m.options.tsdf, j.at("tsdf"), where + ".tsdf");
  if (j.contains("mesh")) {
    const Json& k = j.at("mesh");
    get_opt(k, "min_component_fraction", m.options.min_component_fraction, where + ".mesh");
    get_opt(k, "close_holes", m.options.close_holes, where + ".mesh");
    get_opt(k, "smooth_iterations", m.options.smooth_iterations, where + ".mesh");
    get_opt(k, "smooth_lambda", m.options.smooth_lambda, where + ".mesh");
  }
  if (j.contains("hand_model")) {
    m.hand_model_mesh = get<std::string>(j.at("hand_model"), "mesh", where + ".hand_model");
    m.hand_model_labels = get<std::string>(j.at("hand_model"), "labels", where + ".hand_model");
  }
  const Json& frames = detail::field(j, "frames", where);
  if (!frames.is_array() || frames.empty()) throw Error(ErrorCode::kParse, where + ": frame list is empty");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string w = where + ".frames[" + std::to_string(i) + "]";
    FrameEntry f;
    f.index = get<int>(frames[i], "index", w);
    f.object = get<std::string>(frames[i], "object", w);
    get_opt(frames[i], "hand", f.hand, w);
    get_opt(frames[i], "hand_cloud", f.hand_cloud, w);
    get_opt(frames[i], "feat2d", f.feat2d, w);
    get_opt(frames[i], "boxes", f.boxes, w);
    m.frames.push_back(std::move(f));
  }
  get_opt(j, "ground_truth", m.ground_truth, where);
  if (j.contains("outputs")) {
    const Json& o = j.at("outputs");
    get_opt(o, "mesh", m.outputs.mesh, where + ".outputs");
    get_opt(o, "mesh_obj", m.outputs.mesh_obj, where + ".outputs");
    get_opt(o, "trajectory", m.outputs.trajectory, where + ".outputs");
    get_opt(o, "report", m.outputs.report, where + ".outputs");
    get_opt(o, "tsdf", m.outputs.tsdf, where + ".outputs");
  }
  m.options.validate();
  return m;
}

/// Every referenced input must exist.
inline void check_manifest_inputs(const SequenceManifest& m) {
  auto need = [&](const std::string& rel, const std::string& what) {
    if (rel.empty()) return;
    const fs::path p = m.resolve(rel);
    if (!fs::exists(p)) throw Error(ErrorCode::kIo, "missing " + what + " '" + p.string() + "'");
  };
  need(m.hand_model_mesh, "hand model mesh");
  need(m.hand_model_labels, "hand model labels");
  need(m.ground_truth, "ground truth");
  for (const auto& f : m.frames) {
    const std::string tag = "frame " + std::to_string(f.index) + " ";
    if (f.object.empty()) throw Error(ErrorCode::kParse, tag + "has no object cloud");
    need(f.object, tag + "object cloud");
    need(f.hand, tag + "hand pose");
    need(f.hand_cloud, tag + "hand cloud");
    need(f.feat2d, tag + "feature matches");
    need(f.boxes, tag + "detector boxes");
  }
  if (!m.hand_model_mesh.empty() != !m.hand_model_labels.empty())
    throw Error(ErrorCode::kParse, "hand model needs both a mesh and a labels file");
}

inline SequenceManifest read_manifest(const fs::path& path) {
  SequenceManifest m = manifest_from_json(read_json_file(path), path.string());
  m.base_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  check_manifest_inputs(m);
  return m;
}

inline void write_manifest(const fs::path& path, const SequenceManifest& m) { write_json_atomic(path, to_json(m)); }

// ---------------------------------------------------------------------------
// Ground truth

inline Json ground_truth_json(const Sequence& seq) {
  Json poses = Json::array(), centers = Json::array(), probes = Json::array(), pairs = Json::array();
  for (const auto& p : seq.gt_object_poses) poses.push_back(to_json(p));
  for (const auto& c : seq.gt_centers) centers.push_back(detail::vec3(c));
  for (const auto& p : seq.probes) probes.push_back(to_json(p));
  for (const auto& a : seq.annotations)
    pairs.push_back({{"frame", a.frame}, {"source", detail::vec3(a.source)}, {"target", detail::vec3(a.target)}});
  return Json{{"object_poses", poses}, {"centers", centers}, {"probes", probes}, {"annotations", pairs}};
}

inline void apply_ground_truth(Sequence& seq, const Json& j, const std::string& where) {
  if (j.contains("object_poses"))
    for (const auto& p : j.at("object_poses")) seq.gt_object_poses.push_back(transform_from_json(p, where));
  if (j.contains("centers"))
    for (const auto& c : j.at("centers")) {
      const auto v = c.get<std::vector<double>>();
      if (v.size() != 3) throw Error(ErrorCode::kParse, where + ": center needs 3 numbers");
      seq.gt_centers.emplace_back(v[0], v[1], v[2]);
    }
  if (j.contains("probes"))
    for (const auto& p : j.at("probes")) seq.probes.push_back(probe_from_json(p, where));
  if (j.contains("annotations"))
    for (const auto& a : j.at("annotations"))
      seq.annotations.push_back(
          {detail::get<int>(a, "frame", where), detail::vec3(a, "source", where), detail::vec3(a, "target", where)});
}

// ---------------------------------------------------------------------------
// Sequence directories

/// Loads every frame referenced by the manifest. A frame without a hand file
/// gets an empty hand pose (no contact evidence).
inline Sequence load_sequence(const SequenceManifest& m) {
  Sequence seq;
  seq.name = m.name;
  seq.intrinsics = m.intrinsics;
  seq.volume = m.options.registration.volume;
  std::optional<HandModel> model;
  if (!m.hand_model_mesh.empty()) {
    model = read_hand_model(m.resolve(m.hand_model_mesh), m.resolve(m.hand_model_labels));
    seq.bone_label = model->bone_label;
    seq.end_effectors = model->end_effectors;
    seq.bone_names = model->bone_names;
  }
  for (const auto& f : m.frames) {
    SegmentedFrame frame;
    frame.frame_index = f.index;
    frame.object_cloud = read_ply_file(m.resolve(f.object).string()).cloud;
    if (!f.hand_cloud.empty()) frame.hand_cloud = read_ply_file(m.resolve(f.hand_cloud).string()).cloud;
    if (!f.hand.empty()) {
      if (!model) throw Error(ErrorCode::kParse, "frame " + std::to_string(f.index) + " has a hand pose but no hand model");
      frame.hand_pose.vertices = read_ply_file(m.resolve(f.hand).string()).cloud.points;
      if (frame.hand_pose.vertices.size() != model->bone_label.size())
        throw Error(ErrorCode::kParse, "frame " + std::to_string(f.index) + " hand pose has " +
                                           std::to_string(frame.hand_pose.vertices.size()) +
                                           " vertices; the hand model has " +
                                           std::to_string(model->bone_label.size()));
      frame.hand_pose.bone_label = model->bone_label;
      frame.hand_pose.end_effectors = model->end_effectors;
    }
    if (!f.feat2d.empty()) frame.feat2d_matches = read_feat2d_file(m.resolve(f.feat2d).string());
    if (!f.boxes.empty())
      frame.detector_boxes = boxes_from_json(read_json_file(m.resolve(f.boxes)), m.resolve(f.boxes).string());
    seq.frames.push_back(std::move(frame));
  }
  if (!m.ground_truth.empty()) apply_ground_truth(seq, read_json_file(m.resolve(m.ground_truth)), m.ground_truth);
  return seq;
}

/// Writes frames, hand model, ground truth and manifest.json under `dir`.
inline SequenceManifest write_sequence(const fs::path& dir, const Sequence& seq, const ReconstructOptions& options = {},
                                       PlyFormat format = PlyFormat::kBinaryLittleEndian) {
  fs::create_directories(dir / "frames");
  SequenceManifest m;
  m.name = seq.name;
  m.intrinsics = seq.intrinsics;
  m.options = options;
  m.options.registration.volume = seq.volume;
  m.base_dir = dir;

  const bool has_hand = !seq.bone_label.empty();
  if (has_hand) {
    HandModel model;
    model.bone_label = seq.bone_label;
    model.end_effectors = seq.end_effectors;
    model.bone_names = seq.bone_names;
    if (!seq.frames.empty()) model.mesh.vertices = seq.frames.front().hand_pose.vertices;
    m.hand_model_mesh = "hand/model.obj";
    m.hand_model_labels = "hand/model.json";
    write_hand_model(dir / m.hand_model_mesh, dir / m.hand_model_labels, model);
  }

  for (const auto& f : seq.frames) {
    std::ostringstream stem;
    stem << "frames/" << std::setw(4) << std::setfill('0') << f.frame_index;
    FrameEntry e;
    e.index = f.frame_index;
    e.object = stem.str() + "_object.ply";
    write_ply_atomic(dir / e.object, f.object_cloud, format);
    if (has_hand && !f.hand_pose.vertices.empty()) {
      e.hand = stem.str() + "_hand.ply";
      PointCloud verts;
      verts.points = f.hand_pose.vertices;
      write_ply_atomic(dir / e.hand, verts, format);
    }
    if (!f.hand_cloud.empty()) {
      e.hand_cloud = stem.str() + "_hand_cloud.ply";
      write_ply_atomic(dir / e.hand_cloud, f.hand_cloud, format);
    }
    if (f.feat2d_matches) {
      e.feat2d = stem.str() + "_feat2d.txt";
      std::ostringstream out;
      write_feat2d(out, *f.feat2d_matches);
      write_file_atomic(dir / e.feat2d, out.str());
    }
    if (f.detector_boxes) {
      e.boxes = stem.str() + "_boxes.json";
      write_json_atomic(dir / e.boxes, to_json(*f.detector_boxes));
    }
    m.frames.push_back(std::move(e));
  }
  if (!seq.gt_object_poses.empty() || !seq.probes.empty() || !seq.annotations.empty()) {
    m.ground_truth = "ground_truth.json";
    write_json_atomic(dir / m.ground_truth, ground_truth_json(seq));
  }
  write_manifest(dir / "manifest.json", m);
  return m;
}

// ---------------------------------------------------------------------------
// TSDF dump: `<stem>.raw` holds resolution^3 little-endian float32 values,
// x fastest, unobserved voxels 1; `<stem>.json` describes the grid.

inline void write_tsdf_dump(const fs::path& stem, const TsdfVolume& vol) {
  const auto values = vol.dense_tsdf();
  std::ostringstream raw(std::ios::binary);
  for (float v : values) detail::write_le(raw, v);
  fs::path raw_path = stem;
  raw_path += ".raw";
  fs::path header_path = stem;
  header_path += ".json";
  write_file_atomic(raw_path, raw.str());
  write_json_atomic(header_path, Json{{"data", raw_path.filename().string()},
                                      {"dtype", "float32"},
                                      {"byte_order", "little"},
                                      {"order", "x-fastest"},
                                      {"resolution", vol.resolution()},
                                      {"voxel_size", vol.voxel_size()},
                                      {"truncation", vol.truncation()},
                                      {"origin", detail::vec3(vol.origin())},
                                      {"unobserved_value", 1.0}});
}

}  // namespace inhand

#endif  // INHAND_IO_HPP
