#pragma once

#include "patchwork/init.hpp"
#include "patchwork/mesh.hpp"
#include "patchwork/types.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace patchwork {

/// Area-weighted uniform samples with face normals. Throws DegenerateMesh
/// when the mesh has no face of positive area.
OrientedSampleSet sample_mesh_surface(const TriangleMesh& mesh, std::size_t count,
                                      std::mt19937_64& rng);

/// Length-weighted uniform samples on a 2D segment soup; normals are the
/// left-hand perpendiculars of the segments.
OrientedSampleSet sample_segments(const SegmentSoup& soup, std::size_t count,
                                  std::mt19937_64& rng);

/// Points every `spacing` (or closer) along each segment, endpoints included.
PointList densify_segments(const SegmentSoup& soup, double spacing);

/// Exact nearest-neighbour distances through a uniform voxel grid; rings of
/// cells are visited outward until no unvisited cell can hold a closer point.
class NearestIndex {
 public:
  explicit NearestIndex(std::span<const Vec3> points);
  double distance(const Vec3& q) const;

 private:
  std::vector<Vec3> points_;
  Vec3 lo_ = Vec3::Zero();
  double cell_ = 1.0;
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<std::uint32_t> start_;  // CSR offsets, one per cell plus one
  std::vector<std::uint32_t> order_;
};

/// d(a, B) for every a in A, in order.
std::vector<double> nearest_distances(std::span<const Vec3> from,
                                      std::span<const Vec3> to);

/// 1/2 (mean_a min_b |a - b| + mean_b min_a |a - b|)
double chamfer(std::span<const Vec3> a, std::span<const Vec3> b);
/// max of the two directed max-min distances
double hausdorff(std::span<const Vec3> a, std::span<const Vec3> b);
/// Harmonic mean of precision (a within cutoff of b) and recall (b within
/// cutoff of a), in percent. "Within" is strict: d < cutoff.
double fscore(std::span<const Vec3> a, std::span<const Vec3> b, double cutoff);

struct MetricReport {
  double chamfer = 0.0;
  double hausdorff = 0.0;
  double fscore = 0.0;  // percent
  double cutoff = 0.0;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> parameters;

  // Scaled as tabulated: CH x 1e3, HD x 1e2.
  double chamfer_scaled() const { return chamfer * 1e3; }
  double hausdorff_scaled() const { return hausdorff * 1e2; }
};

inline constexpr double kFscoreCutoffRatio = 1e-3;
inline constexpr std::size_t kDeskMetricSamples = 100'000;
inline constexpr std::size_t kPaperMetricSamples = 1'000'000;

/// Cutoff 0.1% of the longest bounding-box side of `reference`.
double fscore_cutoff(std::span<const Vec3> reference);

/// All three metrics on given point sets; cutoff defaults to fscore_cutoff(a).
MetricReport compare_point_sets(std::span<const Vec3> reference,
                                std::span<const Vec3> candidate,
                                std::optional<double> cutoff = std::nullopt);

/// Samples `count` points on each mesh, each from a generator seeded with
/// `seed`, and compares them. The cutoff comes from the reference mesh's
/// bounding box.
MetricReport compare_meshes(const TriangleMesh& reference,
                            const TriangleMesh& candidate, std::size_t count,
                            std::uint64_t seed);

}  // namespace patchwork
