#ifndef INHAND_PLY_HPP
#define INHAND_PLY_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "inhand/fusion.hpp"
#include "inhand/geometry.hpp"

namespace inhand {

enum class PlyFormat { kAscii, kBinaryLittleEndian };

/// Vertices (with whatever channels the file carried) and triangles.
/// Polygons with more than three corners are fan-triangulated on read.
struct PlyData {
  PointCloud cloud;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  TriangleMesh mesh() const {
    TriangleMesh m;
    m.vertices = cloud.points;
    m.triangles = triangles;
    if (cloud.has_normals()) m.normals = cloud.normals;
    return m;
  }
};

namespace detail {

enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

inline PlyType ply_type(const std::string& name) {
  if (name == "char" || name == "int8") return PlyType::kInt8;
  if (name == "uchar" || name == "uint8") return PlyType::kUint8;
  if (name == "short" || name == "int16") return PlyType::kInt16;
  if (name == "ushort" || name == "uint16") return PlyType::kUint16;
  if (name == "int" || name == "int32") return PlyType::kInt32;
  if (name == "uint" || name == "uint32") return PlyType::kUint32;
  if (name == "float" || name == "float32") return PlyType::kFloat32;
  if (name == "double" || name == "float64") return PlyType::kFloat64;
  throw Error(ErrorCode::kParse, "unknown PLY property type '" + name + "'");
}

inline std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUint8: return 1;
    case PlyType::kInt16:
    case PlyType::kUint16: return 2;
    case PlyType::kInt32:
    case PlyType::kUint32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  bool is_list = false;
  PlyType count_type = PlyType::kUint8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

template <typename T>
T read_le(std::istream& in) {
  std::array<char, sizeof(T)> buf;
  if (!in.read(buf.data(), sizeof(T))) throw Error(ErrorCode::kParse, "PLY binary body is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  T v;
  std::memcpy(&v, buf.data(), sizeof(T));
  return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  out.write(buf.data(), sizeof(T));
}

inline double read_binary_value(std::istream& in, PlyType t) {
  switch (t) {
    case PlyType::kInt8: return read_le<std::int8_t>(in);
    case PlyType::kUint8: return read_le<std::uint8_t>(in);
    case PlyType::kInt16: return read_le<std::int16_t>(in);
    case PlyType::kUint16: return read_le<std::uint16_t>(in);
    case PlyType::kInt32: return read_le<std::int32_t>(in);
    case PlyType::kUint32: return read_le<std::uint32_t>(in);
    case PlyType::kFloat32: return read_le<float>(in);
    case PlyType::kFloat64: return read_le<double>(in);
  }
  return 0.0;
}

inline std::uint8_t color_byte(double c) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

/// Value sink for one vertex, keyed by property name.
struct VertexSlots {
  std::array<double, 3> xyz{};
  std::array<double, 3> n{};
  std::array<double, 3> rgb{};
  int seen_xyz = 0, seen_n = 0, seen_rgb = 0;

  void put(const std::string& name, double v) {
    if (name == "x") xyz[0] = v, ++seen_xyz;
    else if (name == "y") xyz[1] = v, ++seen_xyz;
    else if (name == "z") xyz[2] = v, ++seen_xyz;
    else if (name == "nx") n[0] = v, ++seen_n;
    else if (name == "ny") n[1] = v, ++seen_n;
    else if (name == "nz") n[2] = v, ++seen_n;
    else if (name == "red") rgb[0] = v, ++seen_rgb;
    else if (name == "green") rgb[1] = v, ++seen_rgb;
    else if (name == "blue") rgb[2] = v, ++seen_rgb;
  }
};

inline void add_polygon(PlyData& data, const std::vector<double>& idx, std::size_t vertex_count) {
  if (idx.size() < 3) throw Error(ErrorCode::kParse, "PLY face with fewer than 3 corners");
  for (double v : idx)
    if (v < 0 || v >= static_cast<double>(vertex_count)) throw Error(ErrorCode::kParse, "PLY face index out of range");
  for (std::size_t i = 1; i + 1 < idx.size(); ++i)
    data.triangles.push_back({static_cast<std::uint32_t>(idx[0]), static_cast<std::uint32_t>(idx[i]),
                              static_cast<std::uint32_t>(idx[i + 1])});
}

}  // namespace detail

inline PlyData read_ply(std::istream& in, const std::string& origin = "<stream>") {
  using namespace detail;
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply")
    throw Error(ErrorCode::kParse, origin + ": not a PLY file");
  bool binary = false;
  bool have_format = false;
  std::vector<PlyElement> elements;
  while (true) {
    if (!std::getline(in, line)) throw Error(ErrorCode::kParse, origin + ": PLY header not terminated");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") break;
    if (word.empty() || word == "comment" || word == "obj_info") continue;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") binary = false;
      else if (fmt == "binary_little_endian") binary = true;
      else throw Error(ErrorCode::kParse, origin + ": unsupported PLY format '" + fmt + "'");
      have_format = true;
    } else if (word == "element") {
      PlyElement e;
      if (!(ls >> e.name >> e.count)) throw Error(ErrorCode::kParse, origin + ": bad element line");
      elements.push_back(std::move(e));
    } else if (word == "property") {
      if (elements.empty()) throw Error(ErrorCode::kParse, origin + ": property before element");
      PlyProperty p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> p.name;
        p.is_list = true;
        p.count_type = ply_type(count_type);
        p.type = ply_type(item_type);
      } else {
        p.type = ply_type(type);
        ls >> p.name;
      }
      if (p.name.empty()) throw Error(ErrorCode::kParse, origin + ": property without a name");
      elements.back().properties.push_back(std::move(p));
    } else {
      throw Error(ErrorCode::kParse, origin + ": unexpected PLY header line '" + line + "'");
    }
  }
  if (!have_format) throw Error(ErrorCode::kParse, origin + ": PLY header has no format line");

  PlyData data;
  std::size_t vertex_count = 0;
  for (const auto& e : elements)
    if (e.name == "vertex") vertex_count = e.count;

  for (const auto& e : elements) {
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    bool has_n = false, has_rgb = false;
    if (is_vertex) {
      int xyz = 0;
      for (const auto& p : e.properties) {
        xyz += p.name == "x" || p.name == "y" || p.name == "z";
        has_n |= p.name == "nx";
        has_rgb |= p.name == "red";
      }
      if (xyz != 3) throw Error(ErrorCode::kParse, origin + ": vertex element lacks x/y/z");
      data.cloud.points.reserve(e.count);
    }
    for (std::size_t r = 0; r < e.count; ++r) {
      VertexSlots slots;
      std::vector<double> list;
      std::istringstream row;
      if (!binary) {
        if (!std::getline(in, line)) throw Error(ErrorCode::kParse, origin + ": PLY body is truncated");
        row.str(line);
      }
      auto scalar = [&](PlyType t) -> double {
        if (binary) return read_binary_value(in, t);
        double v;
        if (!(row >> v)) throw Error(ErrorCode::kParse, origin + ": malformed PLY row '" + line + "'");
        if (t == PlyType::kFloat32) return static_cast<float>(v);
        return v;
      };
      for (const auto& p : e.properties) {
        if (p.is_list) {
          const double n = scalar(p.count_type);
          if (n < 0) throw Error(ErrorCode::kParse, origin + ": negative list length");
          list.clear();
          for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) list.push_back(scalar(p.type));
          if (is_face && (p.name == "vertex_indices" || p.name == "vertex_index")) add_polygon(data, list, vertex_count);
        } else {
          const double v = scalar(p.type);
          if (is_vertex) slots.put(p.name, v);
        }
      }
      if (is_vertex) {
        data.cloud.points.emplace_back(slots.xyz[0], slots.xyz[1], slots.xyz[2]);
        if (has_n) data.cloud.normals.emplace_back(slots.n[0], slots.n[1], slots.n[2]);
        if (has_rgb) data.cloud.colors.emplace_back(slots.rgb[0] / 255.0, slots.rgb[1] / 255.0, slots.rgb[2] / 255.0);
      }
    }
  }
  return data;
}

inline PlyData read_ply_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return read_ply(in, path);
}

namespace detail {

inline void write_ply_body(std::ostream& out, const PointCloud& cloud,
                           const std::vector<std::array<std::uint32_t, 3>>& triangles, PlyFormat format) {
  const bool normals = cloud.has_normals();
  const bool colors = cloud.has_colors();
  out << "ply\nformat " << (format == PlyFormat::kAscii ? "ascii" : "binary_little_endian") << " 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
  if (colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (!triangles.empty()) out << "element face " << triangles.size() << "\nproperty list uchar int vertex_indices\n";
  out << "end_header\n";

  if (format == PlyFormat::kAscii) {
    out.precision(std::numeric_limits<float>::max_digits10);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto& p = cloud.points[i];
      out << static_cast<float>(p.x()) << ' ' << static_cast<float>(p.y()) << ' ' << static_cast<float>(p.z());
      if (normals) {
        const auto& n = cloud.normals[i];
        out << ' ' << static_cast<float>(n.x()) << ' ' << static_cast<float>(n.y()) << ' ' << static_cast<float>(n.z());
      }
      if (colors) {
        const auto& c = cloud.colors[i];
        out << ' ' << int(color_byte(c.x())) << ' ' << int(color_byte(c.y())) << ' ' << int(color_byte(c.z()));
      }
      out << '\n';
    }
    for (const auto& t : triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  } else {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      for (int a = 0; a < 3; ++a) write_le(out, static_cast<float>(cloud.points[i][a]));
      if (normals)
        for (int a = 0; a < 3; ++a) write_le(out, static_cast<float>(cloud.normals[i][a]));
      if (colors)
        for (int a = 0; a < 3; ++a) write_le(out, color_byte(cloud.colors[i][a]));
    }
    for (const auto& t : triangles) {
      write_le(out, std::uint8_t{3});
      for (auto v : t) write_le(out, static_cast<std::int32_t>(v));
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "PLY write failed");
}

}  // namespace detail

/// Writes vertices as float32 x/y/z, float32 normals and uchar colors when
/// present, and an optional triangle list.
inline void write_ply(std::ostream& out, const PointCloud& cloud,
                      const std::vector<std::array<std::uint32_t, 3>>& triangles = {},
                      PlyFormat format = PlyFormat::kBinaryLittleEndian) {
  cloud.validate();
  for (const auto& t : triangles)
    for (auto v : t)
      if (v >= cloud.size()) throw Error(ErrorCode::kInvalidArgument, "triangle index out of range");
  detail::write_ply_body(out, cloud, triangles, format);
}

/// Mesh normals may be zero where incident faces cancel; they are written
/// as they are.
inline void write_ply(std::ostream& out, const TriangleMesh& mesh, PlyFormat format = PlyFormat::kBinaryLittleEndian) {
  mesh.validate();
  PointCloud cloud;
  cloud.points = mesh.vertices;
  if (mesh.normals.size() == mesh.vertices.size()) cloud.normals = mesh.normals;
  detail::write_ply_body(out, cloud, mesh.triangles, format);
}

/// Wavefront OBJ with vertices, optional per-vertex normals and faces.
inline void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  mesh.validate();
  const bool normals = mesh.normals.size() == mesh.vertices.size() && !mesh.vertices.empty();
  out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  if (normals)
    for (const auto& n : mesh.normals) out << "vn " << n.x() << ' ' << n.y() << ' ' << n.z() << '\n';
  for (const auto& t : mesh.triangles) {
    out << 'f';
    for (auto v : t) {
      out << ' ' << v + 1;
      if (normals) out << "//" << v + 1;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "OBJ write failed");
}

/// Reads `v` and `f` records (1-based, negative indices relative); other
/// records are ignored. Faces are fan-triangulated.
inline TriangleMesh read_obj(std::istream& in, const std::string& origin = "<stream>") {
  TriangleMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z))
        throw Error(ErrorCode::kParse, origin + ":" + std::to_string(line_no) + ": bad vertex");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<std::uint32_t> idx;
      std::string tok;
      while (ls >> tok) {
        long v = 0;
        try {
          v = std::stol(tok.substr(0, tok.find('/')));
        } catch (const std::exception&) {
          throw Error(ErrorCode::kParse, origin + ":" + std::to_string(line_no) + ": bad face index '" + tok + "'");
        }
        if (v < 0) v += static_cast<long>(mesh.vertices.size()) + 1;
        if (v < 1 || v > static_cast<long>(mesh.vertices.size()))
          throw Error(ErrorCode::kParse, origin + ":" + std::to_string(line_no) + ": face index out of range");
        idx.push_back(static_cast<std::uint32_t>(v - 1));
      }
      if (idx.size() < 3) throw Error(ErrorCode::kParse, origin + ":" + std::to_string(line_no) + ": short face");
      for (std::size_t i = 1; i + 1 < idx.size(); ++i) mesh.triangles.push_back({idx[0], idx[i], idx[i + 1]});
    }
  }
  return mesh;
}

}  // namespace inhand

#endif  // INHAND_PLY_HPP
