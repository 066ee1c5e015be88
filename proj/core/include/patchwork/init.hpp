#pragma once

#include "patchwork/field.hpp"
#include "patchwork/types.hpp"

#include <cstddef>
#include <functional>
#include <string>

namespace patchwork {

struct OrientedSampleSet {
  int dim = 3;
  PointList points;
  PointList normals;
  std::string source;

  std::size_t size() const { return points.size(); }

  // Throws EmptyInput, DimensionMismatch or NonUnitNormal.
  void validate(double unit_tol = 1e-6) const;
  // Rescales every normal to unit length; returns how many were off by more
  // than unit_tol. Zero normals are rejected with NonUnitNormal.
  std::size_t normalize_normals(double unit_tol = 1e-6);
};

/// Deterministic inside/outside classifier.
struct OccupancyOracle {
  std::function<bool(const Vec3&)> inside;
  std::string name;

  bool operator()(const Vec3& p) const { return inside(p); }
};

// Synthetic shapes (all centered at the origin).
OccupancyOracle circle_oracle(double radius);
OccupancyOracle square_oracle(double side);
OccupancyOracle sphere_oracle(double radius);
OccupancyOracle torus_oracle(double major, double minor);
OccupancyOracle cell_oracle(Vec3 center, double half_width);
OccupancyOracle empty_oracle();
OccupancyOracle complement(OccupancyOracle oracle);

/// Parses "circle(0.5)", "square(1)", "sphere(0.5)", "torus(0.5,0.2)" and
/// "mesh(path/to/mesh.obj)" (generalized winding number >= 0.5).
OccupancyOracle oracle_by_name(const std::string& spec);

inline constexpr double kDefaultRho = 200.0;

struct GeometricInitOptions {
  double rho = kDefaultRho;
  double beta = kDefaultBeta;
  bool weightnorm = true;
};

/// Two tangent-plane terms per sample so that the tropical field vanishes at
/// every sample with gradient equal to the sample normal:
///   Plus  a = rho x + n,  c = -rho |x|^2 / 2 - <n, x>
///   Minus a = rho x,      c = -rho |x|^2 / 2
/// Terms are laid out as [Plus_0 .. Plus_{m-1}, Minus_0 .. Minus_{m-1}].
PatchworkModel geometric_init(const OrientedSampleSet& samples,
                              const GeometricInitOptions& options = {});

/// Square-grid digital curve: one term per (k, l) in [-N, N]^2 with
/// a = (k, l), c = (1 - k^2 - l^2) / (2N). The term joins Minus when the
/// oracle reports its cell center (k, l) / N inside.
PatchworkModel digital_curve_grid(int n, const OccupancyOracle& oracle);

/// Hexagonal variant with c = -(k^2 + l^2 + kl - 1) / N. Cells are hexagons
/// centered at ((2k + l) / N, (k + 2l) / N); the oracle is queried there.
PatchworkModel digital_curve_hex(int n, const OccupancyOracle& oracle);
Vec3 hex_cell_center(int n, int k, int l);

inline constexpr std::size_t kDefaultTermCap = 2'000'000;

/// Cubic-grid digital surface; one term per (k, l, m) in [-N, N]^3 with
/// a = (k, l, m), c = (1 - k^2 - l^2 - m^2) / (2N).
PatchworkModel digital_surface_grid(int n, const OccupancyOracle& oracle,
                                    std::size_t term_cap = kDefaultTermCap);

/// Term index of lattice cell (k, l[, m]) in the grid constructions above.
std::size_t grid_term_index(int n, int k, int l);
std::size_t grid_term_index(int n, int k, int l, int m);

}  // namespace patchwork
