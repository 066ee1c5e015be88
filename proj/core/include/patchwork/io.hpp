#pragma once

#include "patchwork/init.hpp"
#include "patchwork/mesh.hpp"
#include "patchwork/types.hpp"

#include <cstddef>
#include <filesystem>

namespace patchwork {

struct MeshLoadStats {
  std::size_t faces_read = 0;
  std::size_t polygons_split = 0;   // faces with more than three corners
  std::size_t degenerate_dropped = 0;
};

/// Reads OBJ or PLY (ASCII and binary little-endian). Polygons are fan
/// triangulated and zero-area triangles are dropped. Errors carry the line
/// number (text) or byte offset (binary).
TriangleMesh load_mesh(const std::filesystem::path& path,
                       MeshLoadStats* stats = nullptr);

/// PLY vertex list with x, y, z, nx, ny, nz. Non-unit normals are rescaled
/// with a warning. `dim` 2 drops z (which must then be zero).
OrientedSampleSet load_point_cloud(const std::filesystem::path& path, int dim = 3);

/// Uniform scale plus translation: normalized = scale * original + offset.
struct BoxTransform {
  double scale = 1.0;
  Vec3 offset = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * p + offset; }
  Vec3 invert(const Vec3& q) const { return (q - offset) / scale; }
};

struct NormalizedMesh {
  TriangleMesh mesh;
  BoxTransform transform;  // original -> normalized; invert() maps back
};

/// Centers the bounding box at the origin and scales the longest axis onto
/// [-1, 1].
NormalizedMesh normalize_to_box(const TriangleMesh& mesh);

void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh);
void save_obj(const std::filesystem::path& path, const PolygonMesh& mesh);
void save_ply(const std::filesystem::path& path, const TriangleMesh& mesh,
              bool binary = false);
void save_point_cloud(const std::filesystem::path& path,
                      const OrientedSampleSet& samples);

}  // namespace patchwork
