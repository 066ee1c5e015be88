#include "patchwork/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <unordered_map>
#include <unordered_set>
#include <utility>

namespace patchwork {
namespace {

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

long euler_from_faces(const std::vector<std::vector<std::uint32_t>>& faces) {
  std::unordered_set<std::uint32_t> verts;
  std::unordered_set<std::uint64_t> edges;
  for (const auto& f : faces) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      verts.insert(f[i]);
      edges.insert(edge_key(f[i], f[(i + 1) % f.size()]));
    }
  }
  return static_cast<long>(verts.size()) - static_cast<long>(edges.size()) +
         static_cast<long>(faces.size());
}

}  // namespace

double TriangleMesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3& a = vertices[tri[0]];
  return 0.5 * (vertices[tri[1]] - a).cross(vertices[tri[2]] - a).norm();
}

Vec3 TriangleMesh::triangle_normal(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3& a = vertices[tri[0]];
  const Vec3 n = (vertices[tri[1]] - a).cross(vertices[tri[2]] - a);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3(Vec3::Zero());
}

double TriangleMesh::area() const {
  double sum = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) sum += triangle_area(t);
  return sum;
}

BBox TriangleMesh::bbox() const {
  BBox b;
  b.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  b.hi = -b.lo;
  for (const auto& v : vertices) {
    b.lo = b.lo.cwiseMin(v);
    b.hi = b.hi.cwiseMax(v);
  }
  return b;
}

long TriangleMesh::euler_characteristic() const {
  std::vector<std::vector<std::uint32_t>> faces;
  faces.reserve(triangles.size());
  for (const auto& t : triangles) faces.push_back({t[0], t[1], t[2]});
  return euler_from_faces(faces);
}

std::size_t TriangleMesh::non_manifold_edges() const {
  std::unordered_map<std::uint64_t, int> count;
  for (const auto& t : triangles) {
    for (int i = 0; i < 3; ++i) ++count[edge_key(t[i], t[(i + 1) % 3])];
  }
  std::size_t bad = 0;
  for (const auto& [key, c] : count) bad += c != 2 ? 1 : 0;
  return bad;
}

TriangleMesh PolygonMesh::triangulate() const {
  TriangleMesh out;
  out.vertices = vertices;
  for (const auto& f : faces) {
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
      out.triangles.push_back({f[0], f[i], f[i + 1]});
    }
  }
  return out;
}

long PolygonMesh::euler_characteristic() const { return euler_from_faces(faces); }

double SegmentSoup::length() const {
  double sum = 0.0;
  for (const auto& s : segments) sum += (vertices[s[1]] - vertices[s[0]]).norm();
  return sum;
}

double winding_number(const TriangleMesh& mesh, const Vec3& p) {
  double omega = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3 a = mesh.vertices[t[0]] - p;
    const Vec3 b = mesh.vertices[t[1]] - p;
    const Vec3 c = mesh.vertices[t[2]] - p;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la +
                       c.dot(a) * lb;
    omega += 2.0 * std::atan2(num, den);
  }
  return omega / (4.0 * std::numbers::pi);
}

TriangleMesh make_icosphere(double radius, int subdivisions) {
  const double phi = std::numbers::phi;
  TriangleMesh mesh;
  mesh.vertices = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : mesh.vertices) v.normalize();
  mesh.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                    {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                    {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                    {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::unordered_map<std::uint64_t, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = edge_key(a, b);
      if (auto it = mid.find(key); it != mid.end()) return it->second;
      const auto idx = static_cast<std::uint32_t>(mesh.vertices.size());
      mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<Triangle> next;
    next.reserve(mesh.triangles.size() * 4);
    for (const auto& t : mesh.triangles) {
      const auto ab = midpoint(t[0], t[1]);
      const auto bc = midpoint(t[1], t[2]);
      const auto ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.triangles = std::move(next);
  }
  for (auto& v : mesh.vertices) v *= radius;
  return mesh;
}

TriangleMesh make_cube(double half_width, int div) {
  TriangleMesh mesh;
  std::map<std::array<int, 3>, std::uint32_t> index;
  auto vertex = [&](const std::array<int, 3>& key) {
    if (auto it = index.find(key); it != index.end()) return it->second;
    const auto idx = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back(Vec3(key[0], key[1], key[2]) *
                            (half_width / div));
    index.emplace(key, idx);
    return idx;
  };
  // For each face: fixed axis, sign, and two in-plane axes ordered so that
  // (u x v) points outward.
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign : {-1, 1}) {
      int u = (axis + 1) % 3, v = (axis + 2) % 3;
      if (sign < 0) std::swap(u, v);
      for (int i = 0; i < 2 * div; ++i) {
        for (int j = 0; j < 2 * div; ++j) {
          auto corner = [&](int di, int dj) {
            std::array<int, 3> key{};
            key[axis] = sign * div;
            key[u] = -div + i + di;
            key[v] = -div + j + dj;
            return vertex(key);
          };
          const auto p00 = corner(0, 0), p10 = corner(1, 0),
                     p11 = corner(1, 1), p01 = corner(0, 1);
          mesh.triangles.push_back({p00, p10, p11});
          mesh.triangles.push_back({p00, p11, p01});
        }
      }
    }
  }
  return mesh;
}

std::vector<Vec3> dodecahedron_normals() {
  const double phi = std::numbers::phi;
  std::vector<Vec3> n;
  for (double s1 : {-1.0, 1.0}) {
    for (double s2 : {-1.0, 1.0}) {
      n.emplace_back(0.0, s1, s2 * phi);
      n.emplace_back(s1, s2 * phi, 0.0);
      n.emplace_back(s2 * phi, 0.0, s1);
    }
  }
  for (auto& v : n) v.normalize();
  return n;
}

PolygonMesh make_dodecahedron(double inradius) {
  const double phi = std::numbers::phi;
  const double iphi = 1.0 / phi;
  PointList verts;
  for (double a : {-1.0, 1.0})
    for (double b : {-1.0, 1.0})
      for (double c : {-1.0, 1.0}) verts.emplace_back(a, b, c);
  for (double a : {-1.0, 1.0}) {
    for (double b : {-1.0, 1.0}) {
      verts.emplace_back(0.0, a * iphi, b * phi);
      verts.emplace_back(a * iphi, b * phi, 0.0);
      verts.emplace_back(a * phi, 0.0, b * iphi);
    }
  }
  const auto normals = dodecahedron_normals();
  double base = 0.0;
  for (const auto& v : verts) base = std::max(base, normals[0].dot(v));
  PolygonMesh mesh;
  for (auto& v : verts) mesh.vertices.push_back(v * (inradius / base));
  for (const auto& n : normals) {
    std::vector<std::uint32_t> face;
    for (std::uint32_t i = 0; i < mesh.vertices.size(); ++i) {
      if (std::abs(n.dot(mesh.vertices[i]) - inradius) < 1e-9 * inradius) {
        face.push_back(i);
      }
    }
    Vec3 centroid = Vec3::Zero();
    for (auto i : face) centroid += mesh.vertices[i];
    centroid /= static_cast<double>(face.size());
    const Vec3 e1 = (mesh.vertices[face[0]] - centroid).normalized();
    const Vec3 e2 = n.cross(e1);
    std::sort(face.begin(), face.end(), [&](std::uint32_t a, std::uint32_t b) {
      const Vec3 da = mesh.vertices[a] - centroid;
      const Vec3 db = mesh.vertices[b] - centroid;
      return std::atan2(da.dot(e2), da.dot(e1)) <
             std::atan2(db.dot(e2), db.dot(e1));
    });
    mesh.faces.push_back(std::move(face));
  }
  return mesh;
}

}  // namespace patchwork
