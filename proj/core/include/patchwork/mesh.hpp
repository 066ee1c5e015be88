#pragma once

#include "patchwork/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace patchwork {

using Triangle = std::array<std::uint32_t, 3>;

struct TriangleMesh {
  PointList vertices;
  std::vector<Triangle> triangles;

  bool empty() const { return triangles.empty(); }
  double area() const;
  double triangle_area(std::size_t t) const;
  Vec3 triangle_normal(std::size_t t) const;  // unit, zero when degenerate
  BBox bbox() const;
  // V - E + F over the indexed triangles.
  long euler_characteristic() const;
  // Number of edges with other than two incident triangles.
  std::size_t non_manifold_edges() const;
};

/// Faces are arbitrary simple polygons (convex in practice).
struct PolygonMesh {
  PointList vertices;
  std::vector<std::vector<std::uint32_t>> faces;

  TriangleMesh triangulate() const;  // fan triangulation
  long euler_characteristic() const;
};

/// 2D polyline soup (segments index into vertices; z == 0).
struct SegmentSoup {
  PointList vertices;
  std::vector<std::array<std::uint32_t, 2>> segments;

  double length() const;
};

/// Generalized winding number of a closed triangle mesh at p (1 inside,
/// 0 outside).
double winding_number(const TriangleMesh& mesh, const Vec3& p);

/// Subdivided icosahedron projected onto a sphere.
TriangleMesh make_icosphere(double radius, int subdivisions);
/// Axis-aligned box [-h, h]^3 with each face split into 2 * div^2 triangles.
TriangleMesh make_cube(double half_width, int div = 1);
/// Regular dodecahedron with the given inradius.
PolygonMesh make_dodecahedron(double inradius);
/// Outward unit face normals of the regular dodecahedron.
std::vector<Vec3> dodecahedron_normals();

}  // namespace patchwork
