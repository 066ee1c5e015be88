#include "patchwork/error.hpp"
#include "patchwork/extract.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>
#include <utility>

namespace patchwork {
namespace {

constexpr double kZeroNudge = 1e-12;

double nudged(double v) { return v == 0.0 ? kZeroNudge : v; }

struct FaceSegments {
  std::array<std::pair<int, int>, 2> seg{};
  int count = 0;
};

// Corners v[0..3] run counterclockwise seen from the side that defines
// "left". Edge q joins corners q and q + 1. Segments run from an edge where
// the sign drops to an edge where it rises, which keeps the positive side on
// the left.
FaceSegments face_segments(const double v[4]) {
  FaceSegments out;
  int rise[2], drop[2];
  int nr = 0, nd = 0;
  for (int q = 0; q < 4; ++q) {
    const bool a = v[q] > 0.0, b = v[(q + 1) % 4] > 0.0;
    if (!a && b) {
      rise[nr++] = q;
    } else if (a && !b) {
      drop[nd++] = q;
    }
  }
  if (nr == 1) {
    out.seg[0] = {drop[0], rise[0]};
    out.count = 1;
  } else if (nr == 2) {
    // Alternating corners; label crossings E1 X1 E2 X2 counterclockwise.
    const int e1 = rise[0], e2 = rise[1];
    const int x1 = (drop[0] > e1 && drop[0] < e2) ? drop[0] : drop[1];
    const int x2 = x1 == drop[0] ? drop[1] : drop[0];
    const double center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
    if (center > 0.0) {
      out.seg[0] = {x1, e2};
      out.seg[1] = {x2, e1};
    } else {
      out.seg[0] = {x1, e1};
      out.seg[1] = {x2, e2};
    }
    out.count = 2;
  }
  return out;
}

double crossing(double a, double b) {
  const double t = a / (a - b);
  return std::isfinite(t) ? std::clamp(t, 0.0, 1.0) : 0.5;
}

class VertexCache {
 public:
  VertexCache(const ScalarGrid& grid, PointList& out) : grid_(grid), out_(out) {}

  // Crossing on the edge leaving node (i, j, k) along `axis`.
  std::uint32_t get(int i, int j, int k, int axis) {
    const std::uint64_t key = grid_.index(i, j, k) * 3 + static_cast<std::uint64_t>(axis);
    if (auto it = map_.find(key); it != map_.end()) return it->second;
    int i1 = i, j1 = j, k1 = k;
    (axis == 0 ? i1 : axis == 1 ? j1 : k1) += 1;
    const double a = nudged(grid_.values[grid_.index(i, j, k)]);
    const double b = nudged(grid_.values[grid_.index(i1, j1, k1)]);
    const double t = crossing(a, b);
    const Vec3 p0 = grid_.node(i, j, k), p1 = grid_.node(i1, j1, k1);
    Vec3 p = p0 + t * (p1 - p0);
    if (grid_.dim == 2) p.z() = 0.0;
    const auto idx = static_cast<std::uint32_t>(out_.size());
    out_.push_back(p);
    map_.emplace(key, idx);
    return idx;
  }

 private:
  const ScalarGrid& grid_;
  PointList& out_;
  std::unordered_map<std::uint64_t, std::uint32_t> map_;
};

// Cube corner c has offsets (c & 1, (c >> 1) & 1, (c >> 2) & 1).
constexpr std::array<std::array<int, 4>, 6> kFaces = {{
    {0, 4, 6, 2},  // -x
    {1, 3, 7, 5},  // +x
    {0, 1, 5, 4},  // -y
    {2, 6, 7, 3},  // +y
    {0, 2, 3, 1},  // -z
    {4, 5, 7, 6},  // +z
}};

int corner_axis(int a, int b) {
  const int d = a ^ b;
  return d == 1 ? 0 : d == 2 ? 1 : 2;
}

// Local edge id 0..11: axis * 4 + the two remaining offset bits.
int local_edge(int a, int b) {
  const int axis = corner_axis(a, b);
  const int base = a & b;
  int rest = 0, bit = 0;
  for (int k = 0; k < 3; ++k) {
    if (k == axis) continue;
    rest |= ((base >> k) & 1) << bit++;
  }
  return axis * 4 + rest;
}

}  // namespace

SegmentSoup marching_squares(const ScalarGrid& grid) {
  if (grid.dim != 2) raise(ErrorCode::InvalidArgument, "marching squares needs a 2D grid");
  SegmentSoup out;
  VertexCache cache(grid, out.vertices);
  for (int i = 0; i + 1 < grid.res[0]; ++i) {
    for (int j = 0; j + 1 < grid.res[1]; ++j) {
      const double v[4] = {nudged(grid.values[grid.index(i, j)]),
                           nudged(grid.values[grid.index(i + 1, j)]),
                           nudged(grid.values[grid.index(i + 1, j + 1)]),
                           nudged(grid.values[grid.index(i, j + 1)])};
      const FaceSegments fs = face_segments(v);
      if (fs.count == 0) continue;
      auto edge_vertex = [&](int q) {
        switch (q) {
          case 0: return cache.get(i, j, 0, 0);
          case 1: return cache.get(i + 1, j, 0, 1);
          case 2: return cache.get(i, j + 1, 0, 0);
          default: return cache.get(i, j, 0, 1);
        }
      };
      for (int s = 0; s < fs.count; ++s) {
        out.segments.push_back(
            {edge_vertex(fs.seg[s].first), edge_vertex(fs.seg[s].second)});
      }
    }
  }
  return out;
}

TriangleMesh marching_cubes(const ScalarGrid& grid) {
  if (grid.dim != 3) raise(ErrorCode::InvalidArgument, "marching cubes needs a 3D grid");
  TriangleMesh out;
  VertexCache cache(grid, out.vertices);
  std::array<int, 12> next{};
  std::array<int, 12> edge_corner{};  // one endpoint (the lower corner)
  std::vector<std::uint32_t> loop;
  for (int i = 0; i + 1 < grid.res[0]; ++i) {
    for (int j = 0; j + 1 < grid.res[1]; ++j) {
      for (int k = 0; k + 1 < grid.res[2]; ++k) {
        double v[8];
        int positive = 0;
        for (int c = 0; c < 8; ++c) {
          v[c] = nudged(grid.values[grid.index(i + (c & 1), j + ((c >> 1) & 1),
                                               k + ((c >> 2) & 1))]);
          positive += v[c] > 0.0 ? 1 : 0;
        }
        if (positive == 0 || positive == 8) continue;

        next.fill(-1);
        for (const auto& face : kFaces) {
          const double fv[4] = {v[face[0]], v[face[1]], v[face[2]], v[face[3]]};
          const FaceSegments fs = face_segments(fv);
          for (int s = 0; s < fs.count; ++s) {
            const int qa = fs.seg[s].first, qb = fs.seg[s].second;
            const int ea = local_edge(face[qa], face[(qa + 1) % 4]);
            const int eb = local_edge(face[qb], face[(qb + 1) % 4]);
            next[static_cast<std::size_t>(ea)] = eb;
            edge_corner[static_cast<std::size_t>(ea)] = face[qa] & face[(qa + 1) % 4];
            edge_corner[static_cast<std::size_t>(eb)] = face[qb] & face[(qb + 1) % 4];
          }
        }
        std::array<bool, 12> used{};
        for (int start = 0; start < 12; ++start) {
          if (next[static_cast<std::size_t>(start)] < 0 || used[static_cast<std::size_t>(start)]) continue;
          loop.clear();
          int e = start;
          while (!used[static_cast<std::size_t>(e)]) {
            used[static_cast<std::size_t>(e)] = true;
            const int c = edge_corner[static_cast<std::size_t>(e)];
            loop.push_back(cache.get(i + (c & 1), j + ((c >> 1) & 1),
                                     k + ((c >> 2) & 1), e / 4));
            e = next[static_cast<std::size_t>(e)];
            if (e < 0) raise(ErrorCode::DegenerateMesh, "open contour in a cube");
          }
          for (std::size_t t = 1; t + 1 < loop.size(); ++t) {
            out.triangles.push_back({loop[0], loop[t], loop[t + 1]});
          }
        }
      }
    }
  }
  return out;
}

}  // namespace patchwork
