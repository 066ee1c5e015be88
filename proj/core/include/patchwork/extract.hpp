#pragma once

#include "patchwork/field.hpp"
#include "patchwork/mesh.hpp"
#include "patchwork/train.hpp"
#include "patchwork/types.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace patchwork {

/// Regular lattice of samples. Node (i, j, k) sits at lo + (i, j, k) * spacing
/// and is stored at (i * ny + j) * nz + k, so x is the slowest axis. 2D grids
/// have nz == 1.
struct ScalarGrid {
  int dim = 3;
  std::array<int, 3> res{2, 2, 2};
  BBox bbox;
  std::vector<double> values;

  std::size_t node_count() const {
    return static_cast<std::size_t>(res[0]) * static_cast<std::size_t>(res[1]) *
           static_cast<std::size_t>(res[2]);
  }
  std::size_t index(int i, int j, int k = 0) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(res[1]) +
            static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(res[2]) +
           static_cast<std::size_t>(k);
  }
  Vec3 spacing() const;
  Vec3 node(int i, int j, int k = 0) const;
  double cell_diagonal() const { return spacing().norm(); }
};

inline constexpr std::size_t kDefaultNodeCap = 160'000'000;

/// Resolution r gives r nodes per axis (r - 1 cells). 2D models ignore the
/// third entry. Throws MemoryBudgetExceeded above node_cap nodes.
ScalarGrid sample_grid(const PatchworkModel& model, int resolution,
                       const BBox& bbox, EvalMode mode = EvalMode::Smooth,
                       std::size_t node_cap = kDefaultNodeCap);

/// Samples an arbitrary scalar function on the same lattice layout.
ScalarGrid sample_function(int dim, int resolution, const BBox& bbox,
                           const std::function<double(const Vec3&)>& f,
                           std::size_t node_cap = kDefaultNodeCap);

/// Zero contour of a 2D grid. Each segment keeps the positive side on its
/// left; saddles are resolved by the sign of the cell-center average.
SegmentSoup marching_squares(const ScalarGrid& grid);

/// Zero isosurface of a 3D grid. Triangles face the positive side. Cubes are
/// traced face by face with the same saddle rule as marching squares, so
/// neighbouring cubes always agree and the output is watertight.
TriangleMesh marching_cubes(const ScalarGrid& grid);

// ---------------------------------------------------------------------------
// Chebyshev centers

/// Constraint <normal, x> + offset <= 0.
struct Halfspace {
  Vec3 normal = Vec3::Zero();
  double offset = 0.0;
  std::uint32_t label = 0;
};

enum class LPStatus { Optimal, Infeasible, Unbounded };

struct LPResult {
  Vec3 x = Vec3::Zero();
  double y = 0.0;  // radius; negative when the polyhedron is empty
  LPStatus status = LPStatus::Infeasible;
};

/// Largest ball inside the intersection of the halfspaces, by a seeded
/// incremental (Seidel) LP in d + 1 variables bounded to |.| <= 1e6. Among
/// optimal centers the lexicographically smallest x is returned.
LPResult chebyshev_center(std::span<const Halfspace> halfspaces, int dim);

// ---------------------------------------------------------------------------
// Exact extraction of the tropical zero set

inline constexpr std::uint32_t kBoundaryLabel = std::numeric_limits<std::uint32_t>::max();

/// One piece of the zero set: a segment (2D) or convex polygon (3D) on the
/// equality locus of a Minus term and a Plus term. Vertices are ordered so
/// the positive side is on the left (2D) or the polygon normal points to it
/// (3D).
struct Facet {
  std::vector<std::uint32_t> vertices;
  std::uint32_t minus_term = 0;
  std::uint32_t plus_term = 0;
};

/// Candidate region of one Minus term, clipped to the extraction box.
struct CandidateCell {
  std::uint32_t term = 0;
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  // Terms (or kBoundaryLabel) whose equality planes bound the clipped cell.
  std::vector<std::uint32_t> neighbours;
  std::vector<Halfspace> halfspaces;
};

enum class DegeneracyKind {
  TiedVertex,            // more than d + 1 terms share the maximum
  LowerDimensionalCell,  // nonempty candidate region with no interior
};

struct Degeneracy {
  DegeneracyKind kind = DegeneracyKind::TiedVertex;
  Vec3 point = Vec3::Zero();
  std::vector<std::uint32_t> terms;
};

struct ExtractOptions {
  double box_scale = 1.5;   // cells are clipped to box_scale * [-1, 1]^d
  double min_radius = 1e-7;
  double snap = 1e-7;       // relative to the box diagonal
  double tie_tol = 1e-8;
  std::size_t max_reported = 1000;
};

struct ExtractedComplex {
  int dim = 3;
  PointList vertices;
  std::vector<Facet> facets;
  std::vector<CandidateCell> interior_cells;
  std::vector<Degeneracy> degeneracies;  // first max_reported entries
  std::size_t degeneracy_count = 0;

  SegmentSoup segments() const;
  PolygonMesh polygons() const;
};

ExtractedComplex extract_tropical(const PatchworkModel& model,
                                  const ExtractOptions& options = {});

}  // namespace patchwork
