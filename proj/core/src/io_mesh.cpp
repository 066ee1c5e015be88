#include "patchwork/io.hpp"

#include "patchwork/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace patchwork {
namespace fs = std::filesystem;
namespace {

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

[[noreturn]] void parse_fail(const fs::path& path, const std::string& where,
                             const std::string& what) {
  raise(ErrorCode::ParseError, path.string() + ":" + where + ": " + what);
}

struct RawMesh {
  PointList vertices;
  PointList normals;  // per vertex, PLY only
  std::vector<std::vector<long long>> faces;
};

void add_faces(const RawMesh& raw, TriangleMesh& out, MeshLoadStats& stats) {
  out.vertices = raw.vertices;
  for (const auto& f : raw.faces) {
    ++stats.faces_read;
    if (f.size() > 3) ++stats.polygons_split;
    for (std::size_t k = 1; k + 1 < f.size(); ++k) {
      const long long a = f[0], b = f[k], c = f[k + 1];
      if (a == b || b == c || a == c) {
        ++stats.degenerate_dropped;
        continue;
      }
      Triangle t{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                 static_cast<std::uint32_t>(c)};
      out.triangles.push_back(t);
      if (!(out.triangle_area(out.triangles.size() - 1) > 0.0)) {
        out.triangles.pop_back();
        ++stats.degenerate_dropped;
      }
    }
  }
}

RawMesh parse_obj(const fs::path& path, const std::string& text) {
  RawMesh raw;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) parse_fail(path, where, "malformed vertex");
      if (!p.allFinite()) parse_fail(path, where, "non-finite vertex");
      raw.vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<long long> face;
      std::string item;
      while (ls >> item) {
        const std::string head = item.substr(0, item.find('/'));
        long long idx = 0;
        try {
          std::size_t used = 0;
          idx = std::stoll(head, &used);
          if (used != head.size()) throw 0;
        } catch (...) {
          parse_fail(path, where, "bad face index '" + item + "'");
        }
        const auto nv = static_cast<long long>(raw.vertices.size());
        if (idx < 0) idx += nv + 1;
        if (idx < 1 || idx > nv) parse_fail(path, where, "face index out of range");
        face.push_back(idx - 1);
      }
      if (face.size() < 3) parse_fail(path, where, "face with fewer than 3 corners");
      raw.faces.push_back(std::move(face));
    }
  }
  return raw;
}

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType ply_type(const std::string& s, const fs::path& path, const std::string& where) {
  if (s == "char" || s == "int8") return PlyType::Int8;
  if (s == "uchar" || s == "uint8") return PlyType::UInt8;
  if (s == "short" || s == "int16") return PlyType::Int16;
  if (s == "ushort" || s == "uint16") return PlyType::UInt16;
  if (s == "int" || s == "int32") return PlyType::Int32;
  if (s == "uint" || s == "uint32") return PlyType::UInt32;
  if (s == "float" || s == "float32") return PlyType::Float32;
  if (s == "double" || s == "float64") return PlyType::Float64;
  parse_fail(path, where, "unknown property type '" + s + "'");
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

class PlyReader {
 public:
  PlyReader(const fs::path& path, const std::string& data) : path_(path), data_(data) {}

  RawMesh read() {
    parse_header();
    RawMesh raw;
    for (const auto& el : elements_) {
      for (std::size_t r = 0; r < el.count; ++r) read_record(el, raw);
    }
    return raw;
  }

 private:
  void parse_header() {
    std::size_t lineno = 0;
    bool first = true;
    while (true) {
      const auto nl = data_.find('\n', pos_);
      if (nl == std::string::npos) parse_fail(path_, "header", "missing end_header");
      std::string line = data_.substr(pos_, nl - pos_);
      pos_ = nl + 1;
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string where = "line " + std::to_string(lineno);
      std::istringstream ls(line);
      std::string tag;
      ls >> tag;
      if (first) {
        if (tag != "ply") parse_fail(path_, where, "missing 'ply' magic");
        first = false;
        continue;
      }
      if (tag == "format") {
        std::string fmt;
        ls >> fmt;
        if (fmt == "ascii") {
          binary_ = false;
        } else if (fmt == "binary_little_endian") {
          binary_ = true;
        } else {
          raise(ErrorCode::UnsupportedFormat, path_.string() + ": PLY format '" + fmt + "'");
        }
      } else if (tag == "element") {
        PlyElement el;
        if (!(ls >> el.name >> el.count)) parse_fail(path_, where, "malformed element");
        elements_.push_back(el);
      } else if (tag == "property") {
        if (elements_.empty()) parse_fail(path_, where, "property before element");
        PlyProperty p;
        std::string t;
        ls >> t;
        if (t == "list") {
          std::string ct, it;
          ls >> ct >> it >> p.name;
          p.is_list = true;
          p.count_type = ply_type(ct, path_, where);
          p.type = ply_type(it, path_, where);
        } else {
          p.type = ply_type(t, path_, where);
          ls >> p.name;
        }
        if (p.name.empty()) parse_fail(path_, where, "property without a name");
        elements_.back().props.push_back(p);
      } else if (tag == "end_header") {
        line_ = lineno;
        return;
      }
    }
  }

  double next_ascii(PlyType) {
    while (true) {
      while (pos_ < data_.size() && (data_[pos_] == ' ' || data_[pos_] == '\t' ||
                                     data_[pos_] == '\r')) {
        ++pos_;
      }
      if (pos_ >= data_.size()) {
        parse_fail(path_, "line " + std::to_string(line_ + 1), "unexpected end of file");
      }
      if (data_[pos_] == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      break;
    }
    const char* begin = data_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) {
      parse_fail(path_, "line " + std::to_string(line_ + 1), "expected a number");
    }
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  double next_binary(PlyType t) {
    const std::size_t n = ply_size(t);
    if (pos_ + n > data_.size()) {
      parse_fail(path_, "byte " + std::to_string(pos_), "unexpected end of file");
    }
    const char* p = data_.data() + pos_;
    pos_ += n;
    switch (t) {
      case PlyType::Int8: { std::int8_t v; std::memcpy(&v, p, 1); return v; }
      case PlyType::UInt8: { std::uint8_t v; std::memcpy(&v, p, 1); return v; }
      case PlyType::Int16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
      case PlyType::UInt16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
      case PlyType::Int32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
      case PlyType::UInt32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
      case PlyType::Float32: { float v; std::memcpy(&v, p, 4); return v; }
      case PlyType::Float64: { double v; std::memcpy(&v, p, 8); return v; }
    }
    return 0.0;
  }

  double next(PlyType t) { return binary_ ? next_binary(t) : next_ascii(t); }

  std::string here() const {
    return binary_ ? "byte " + std::to_string(pos_) : "line " + std::to_string(line_ + 1);
  }

  void read_record(const PlyElement& el, RawMesh& raw) {
    if (el.name == "vertex") {
      Vec3 p = Vec3::Zero(), n = Vec3::Zero();
      bool has_normal = false;
      for (const auto& prop : el.props) {
        if (prop.is_list) {
          skip_list(prop);
          continue;
        }
        const double v = next(prop.type);
        if (prop.name == "x") p.x() = v;
        else if (prop.name == "y") p.y() = v;
        else if (prop.name == "z") p.z() = v;
        else if (prop.name == "nx") { n.x() = v; has_normal = true; }
        else if (prop.name == "ny") { n.y() = v; has_normal = true; }
        else if (prop.name == "nz") { n.z() = v; has_normal = true; }
      }
      if (!p.allFinite()) parse_fail(path_, here(), "non-finite vertex");
      raw.vertices.push_back(p);
      if (has_normal) raw.normals.push_back(n);
    } else if (el.name == "face") {
      for (const auto& prop : el.props) {
        if (!prop.is_list) {
          next(prop.type);
          continue;
        }
        const std::string where = here();
        const double count = next(prop.count_type);
        if (!(count >= 0.0) || count > 1e6) parse_fail(path_, where, "bad list length");
        std::vector<long long> face;
        for (std::size_t k = 0; k < static_cast<std::size_t>(count); ++k) {
          face.push_back(static_cast<long long>(next(prop.type)));
        }
        if (prop.name != "vertex_indices" && prop.name != "vertex_index") continue;
        if (face.size() < 3) parse_fail(path_, where, "face with fewer than 3 corners");
        for (long long idx : face) {
          if (idx < 0 || idx >= static_cast<long long>(raw.vertices.size())) {
            parse_fail(path_, where, "face index out of range");
          }
        }
        raw.faces.push_back(std::move(face));
      }
    } else {
      for (const auto& prop : el.props) {
        if (prop.is_list) skip_list(prop);
        else next(prop.type);
      }
    }
  }

  void skip_list(const PlyProperty& prop) {
    const double count = next(prop.count_type);
    if (!(count >= 0.0) || count > 1e6) parse_fail(path_, here(), "bad list length");
    for (std::size_t k = 0; k < static_cast<std::size_t>(count); ++k) next(prop.type);
  }

  const fs::path& path_;
  const std::string& data_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
  bool binary_ = false;
  std::vector<PlyElement> elements_;
};

RawMesh read_raw(const fs::path& path) {
  const std::string ext = lower_ext(path);
  if (ext != ".obj" && ext != ".ply") {
    raise(ErrorCode::UnsupportedFormat, "unsupported mesh extension '" + ext + "'");
  }
  const std::string data = read_file(path);
  if (ext == ".obj") return parse_obj(path, data);
  return PlyReader(path, data).read();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) raise(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

TriangleMesh load_mesh(const fs::path& path, MeshLoadStats* stats) {
  const RawMesh raw = read_raw(path);
  TriangleMesh mesh;
  MeshLoadStats local;
  add_faces(raw, mesh, local);
  if (local.degenerate_dropped > 0) {
    spdlog::warn("{}: dropped {} degenerate faces", path.string(), local.degenerate_dropped);
  }
  if (stats) *stats = local;
  return mesh;
}

OrientedSampleSet load_point_cloud(const fs::path& path, int dim) {
  if (dim != 2 && dim != 3) raise(ErrorCode::InvalidArgument, "dimension must be 2 or 3");
  if (lower_ext(path) != ".ply") {
    raise(ErrorCode::UnsupportedFormat, "point clouds must be PLY with normals");
  }
  const std::string data = read_file(path);
  RawMesh raw = PlyReader(path, data).read();
  if (raw.normals.size() != raw.vertices.size() || raw.vertices.empty()) {
    raise(ErrorCode::ParseError, path.string() + ": vertices need nx, ny, nz");
  }
  OrientedSampleSet out;
  out.dim = dim;
  out.source = path.string();
  out.points = std::move(raw.vertices);
  out.normals = std::move(raw.normals);
  if (dim == 2) {
    for (std::size_t j = 0; j < out.points.size(); ++j) {
      if (out.points[j].z() != 0.0 || out.normals[j].z() != 0.0) {
        raise(ErrorCode::DimensionMismatch, "2D point cloud has a z component");
      }
    }
  }
  out.normalize_normals();
  return out;
}

NormalizedMesh normalize_to_box(const TriangleMesh& mesh) {
  if (mesh.vertices.empty()) raise(ErrorCode::EmptyInput, "mesh has no vertices");
  const BBox b = mesh.bbox();
  const double longest = b.extent().maxCoeff();
  if (!(longest > 0.0) || !std::isfinite(longest)) {
    raise(ErrorCode::DegenerateBBox, "mesh bounding box is degenerate");
  }
  NormalizedMesh out;
  out.transform.scale = 2.0 / longest;
  out.transform.offset = -out.transform.scale * b.center();
  out.mesh = mesh;
  for (auto& v : out.mesh.vertices) v = out.transform.apply(v);
  return out;
}

void save_obj(const fs::path& path, const TriangleMesh& mesh) {
  auto out = open_out(path);
  for (const auto& v : mesh.vertices) {
    out << "v " << num(v.x()) << ' ' << num(v.y()) << ' ' << num(v.z()) << '\n';
  }
  for (const auto& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

void save_obj(const fs::path& path, const PolygonMesh& mesh) {
  auto out = open_out(path);
  for (const auto& v : mesh.vertices) {
    out << "v " << num(v.x()) << ' ' << num(v.y()) << ' ' << num(v.z()) << '\n';
  }
  for (const auto& f : mesh.faces) {
    out << 'f';
    for (auto i : f) out << ' ' << i + 1;
    out << '\n';
  }
}

void save_ply(const fs::path& path, const TriangleMesh& mesh, bool binary) {
  auto out = open_out(path, binary);
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
      << "element vertex " << mesh.vertices.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  if (binary) {
    for (const auto& v : mesh.vertices) {
      const double xyz[3] = {v.x(), v.y(), v.z()};
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    }
    for (const auto& t : mesh.triangles) {
      const std::uint8_t n = 3;
      const std::int32_t idx[3] = {static_cast<std::int32_t>(t[0]),
                                   static_cast<std::int32_t>(t[1]),
                                   static_cast<std::int32_t>(t[2])};
      out.write(reinterpret_cast<const char*>(&n), 1);
      out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
    }
  } else {
    for (const auto& v : mesh.vertices) {
      out << num(v.x()) << ' ' << num(v.y()) << ' ' << num(v.z()) << '\n';
    }
    for (const auto& t : mesh.triangles) {
      out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
  }
}

void save_point_cloud(const fs::path& path, const OrientedSampleSet& samples) {
  auto out = open_out(path);
  out << "ply\nformat ascii 1.0\nelement vertex " << samples.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "property double nx\nproperty double ny\nproperty double nz\nend_header\n";
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const Vec3& p = samples.points[j];
    const Vec3& n = samples.normals[j];
    out << num(p.x()) << ' ' << num(p.y()) << ' ' << num(p.z()) << ' ' << num(n.x())
        << ' ' << num(n.y()) << ' ' << num(n.z()) << '\n';
  }
}

}  // namespace patchwork
