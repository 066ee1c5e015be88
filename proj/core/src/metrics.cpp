#include "patchwork/metrics.hpp"

#include "patchwork/error.hpp"
#include "patchwork/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace patchwork {
namespace {

std::size_t pick(const std::vector<double>& cumulative, double r) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
  const auto k = static_cast<std::size_t>(it - cumulative.begin());
  return std::min(k, cumulative.size() - 1);
}

}  // namespace

OrientedSampleSet sample_mesh_surface(const TriangleMesh& mesh, std::size_t count,
                                      std::mt19937_64& rng) {
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += mesh.triangle_area(t);
    cumulative[t] = total;
  }
  if (!(total > 0.0)) raise(ErrorCode::DegenerateMesh, "mesh has no face with positive area");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  OrientedSampleSet out;
  out.dim = 3;
  out.source = "mesh-samples";
  out.points.reserve(count);
  out.normals.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t t = pick(cumulative, unit(rng) * total);
    while (mesh.triangle_area(t) == 0.0 && t > 0) --t;
    const double r1 = std::sqrt(unit(rng));
    const double r2 = unit(rng);
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    out.points.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
    out.normals.push_back(mesh.triangle_normal(t));
  }
  return out;
}

OrientedSampleSet sample_segments(const SegmentSoup& soup, std::size_t count,
                                  std::mt19937_64& rng) {
  std::vector<double> cumulative(soup.segments.size());
  double total = 0.0;
  for (std::size_t s = 0; s < soup.segments.size(); ++s) {
    const auto& seg = soup.segments[s];
    total += (soup.vertices[seg[1]] - soup.vertices[seg[0]]).norm();
    cumulative[s] = total;
  }
  if (!(total > 0.0)) raise(ErrorCode::DegenerateMesh, "contour has zero length");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  OrientedSampleSet out;
  out.dim = 2;
  out.source = "contour-samples";
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t s = pick(cumulative, unit(rng) * total);
    auto len = [&](std::size_t i) {
      return (soup.vertices[soup.segments[i][1]] - soup.vertices[soup.segments[i][0]]).norm();
    };
    while (len(s) == 0.0 && s > 0) --s;
    const Vec3& p = soup.vertices[soup.segments[s][0]];
    const Vec3& q = soup.vertices[soup.segments[s][1]];
    const Vec3 d = (q - p).normalized();
    out.points.push_back(p + unit(rng) * (q - p));
    out.normals.push_back(Vec3(-d.y(), d.x(), 0.0));
  }
  return out;
}

PointList densify_segments(const SegmentSoup& soup, double spacing) {
  if (!(spacing > 0.0)) raise(ErrorCode::InvalidArgument, "spacing must be positive");
  PointList out;
  for (const auto& seg : soup.segments) {
    const Vec3& p = soup.vertices[seg[0]];
    const Vec3& q = soup.vertices[seg[1]];
    const auto steps = static_cast<std::size_t>(std::ceil((q - p).norm() / spacing));
    const std::size_t n = std::max<std::size_t>(steps, 1);
    for (std::size_t k = 0; k <= n; ++k) {
      out.push_back(p + (static_cast<double>(k) / static_cast<double>(n)) * (q - p));
    }
  }
  return out;
}

NearestIndex::NearestIndex(std::span<const Vec3> points)
    : points_(points.begin(), points.end()) {
  if (points_.empty()) raise(ErrorCode::EmptyInput, "nearest-neighbour index over no points");
  Vec3 lo = points_[0], hi = points_[0];
  for (const auto& p : points_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 ext = hi - lo;
  int used_axes = 0;
  double volume = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (ext[k] > 0.0) {
      ++used_axes;
      volume *= ext[k];
    }
  }
  const double n = static_cast<double>(points_.size());
  cell_ = used_axes == 0 ? 1.0 : std::pow(volume / n, 1.0 / used_axes);
  // Keep the cell count near the point count, but never absurdly fine.
  cell_ = std::max(cell_, ext.maxCoeff() / 1024.0);
  if (!(cell_ > 0.0)) cell_ = 1.0;
  lo_ = lo;
  std::size_t cells = 1;
  for (int k = 0; k < 3; ++k) {
    dims_[static_cast<std::size_t>(k)] =
        std::max(1, static_cast<int>(std::floor(ext[k] / cell_)) + 1);
    cells *= static_cast<std::size_t>(dims_[static_cast<std::size_t>(k)]);
  }
  auto cell_of = [&](const Vec3& p) {
    std::size_t idx = 0;
    for (int k = 0; k < 3; ++k) {
      const int c = std::clamp(static_cast<int>(std::floor((p[k] - lo_[k]) / cell_)), 0,
                               dims_[static_cast<std::size_t>(k)] - 1);
      idx = idx * static_cast<std::size_t>(dims_[static_cast<std::size_t>(k)]) +
            static_cast<std::size_t>(c);
    }
    return idx;
  };
  start_.assign(cells + 1, 0);
  std::vector<std::size_t> owner(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    owner[i] = cell_of(points_[i]);
    ++start_[owner[i] + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) start_[c + 1] += start_[c];
  order_.resize(points_.size());
  std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    order_[fill[owner[i]]++] = static_cast<std::uint32_t>(i);
  }
}

double NearestIndex::distance(const Vec3& q) const {
  std::array<int, 3> c{};
  for (int k = 0; k < 3; ++k) {
    c[static_cast<std::size_t>(k)] =
        std::clamp(static_cast<int>(std::floor((q[k] - lo_[k]) / cell_)), 0,
                   dims_[static_cast<std::size_t>(k)] - 1);
  }
  const int max_ring = std::max({dims_[0], dims_[1], dims_[2]});
  double best = std::numeric_limits<double>::infinity();
  auto visit = [&](int x, int y, int z) {
    const std::size_t cell =
        (static_cast<std::size_t>(x) * static_cast<std::size_t>(dims_[1]) +
         static_cast<std::size_t>(y)) *
            static_cast<std::size_t>(dims_[2]) +
        static_cast<std::size_t>(z);
    for (std::uint32_t k = start_[cell]; k < start_[cell + 1]; ++k) {
      best = std::min(best, (points_[order_[k]] - q).norm());
    }
  };
  for (int ring = 0; ring <= max_ring; ++ring) {
    const int x0 = std::max(0, c[0] - ring), x1 = std::min(dims_[0] - 1, c[0] + ring);
    const int y0 = std::max(0, c[1] - ring), y1 = std::min(dims_[1] - 1, c[1] + ring);
    const int z0 = std::max(0, c[2] - ring), z1 = std::min(dims_[2] - 1, c[2] + ring);
    for (int x = x0; x <= x1; ++x) {
      const bool xedge = std::abs(x - c[0]) == ring;
      for (int y = y0; y <= y1; ++y) {
        const bool yedge = std::abs(y - c[1]) == ring;
        if (xedge || yedge) {
          for (int z = z0; z <= z1; ++z) visit(x, y, z);
        } else {
          if (c[2] - ring >= 0) visit(x, y, c[2] - ring);
          if (ring > 0 && c[2] + ring < dims_[2]) visit(x, y, c[2] + ring);
        }
      }
    }
    // Cells beyond this ring are at least ring * cell_ away.
    if (best <= ring * cell_) break;
  }
  return best;
}

std::vector<double> nearest_distances(std::span<const Vec3> from,
                                      std::span<const Vec3> to) {
  const NearestIndex index(to);
  std::vector<double> out(from.size());
  parallel_for(from.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = index.distance(from[i]);
  });
  return out;
}

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double maximum(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

double within(const std::vector<double>& v, double cutoff) {
  std::size_t n = 0;
  for (double x : v) n += x < cutoff ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(v.size());
}

double harmonic(double p, double r) {
  return (p + r) > 0.0 ? 100.0 * 2.0 * p * r / (p + r) : 0.0;
}

void require_points(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) raise(ErrorCode::EmptyInput, "metric over an empty point set");
}

}  // namespace

double chamfer(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_points(a, b);
  const double ab = mean(nearest_distances(a, b));
  const double ba = mean(nearest_distances(b, a));
  // Sum in a fixed order so the result is symmetric in (a, b).
  return 0.5 * (std::min(ab, ba) + std::max(ab, ba));
}

double hausdorff(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_points(a, b);
  return std::max(maximum(nearest_distances(a, b)), maximum(nearest_distances(b, a)));
}

double fscore(std::span<const Vec3> a, std::span<const Vec3> b, double cutoff) {
  require_points(a, b);
  if (!(cutoff > 0.0)) raise(ErrorCode::InvalidArgument, "cutoff must be positive");
  const double precision = within(nearest_distances(a, b), cutoff);
  const double recall = within(nearest_distances(b, a), cutoff);
  return harmonic(precision, recall);
}

double fscore_cutoff(std::span<const Vec3> reference) {
  if (reference.empty()) raise(ErrorCode::EmptyInput, "empty reference set");
  Vec3 lo = reference[0], hi = reference[0];
  for (const auto& p : reference) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double ext = (hi - lo).maxCoeff();
  if (!(ext > 0.0)) raise(ErrorCode::DegenerateBBox, "reference set has zero extent");
  return kFscoreCutoffRatio * ext;
}

MetricReport compare_point_sets(std::span<const Vec3> reference,
                                std::span<const Vec3> candidate,
                                std::optional<double> cutoff) {
  require_points(reference, candidate);
  MetricReport r;
  r.cutoff = cutoff ? *cutoff : fscore_cutoff(reference);
  const auto ab = nearest_distances(reference, candidate);
  const auto ba = nearest_distances(candidate, reference);
  const double mab = mean(ab), mba = mean(ba);
  r.chamfer = 0.5 * (std::min(mab, mba) + std::max(mab, mba));
  r.hausdorff = std::max(maximum(ab), maximum(ba));
  r.fscore = harmonic(within(ba, r.cutoff), within(ab, r.cutoff));
  r.sample_count = std::max(reference.size(), candidate.size());
  return r;
}

MetricReport compare_meshes(const TriangleMesh& reference,
                            const TriangleMesh& candidate, std::size_t count,
                            std::uint64_t seed) {
  // Both meshes draw from identically seeded generators, so a mesh compared
  // with itself gets the same samples and scores exactly (0, 0, 100).
  std::mt19937_64 rng(seed);
  const auto a = sample_mesh_surface(reference, count, rng);
  const double cut = kFscoreCutoffRatio * reference.bbox().extent().maxCoeff();
  if (candidate.empty() || !(candidate.area() > 0.0)) {
    MetricReport r;
    r.chamfer = r.hausdorff = std::numeric_limits<double>::infinity();
    r.fscore = 0.0;
    r.cutoff = cut;
    r.sample_count = count;
    r.seed = seed;
    return r;
  }
  std::mt19937_64 rng_b(seed);
  const auto b = sample_mesh_surface(candidate, count, rng_b);
  MetricReport r = compare_point_sets(a.points, b.points, cut);
  r.sample_count = count;
  r.seed = seed;
  return r;
}

}  // namespace patchwork
