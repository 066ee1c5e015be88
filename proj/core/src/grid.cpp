#include "kernels.hpp"
#include "patchwork/error.hpp"
#include "patchwork/extract.hpp"
#include "patchwork/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace patchwork {
namespace {

ScalarGrid make_grid(int dim, int resolution, const BBox& bbox,
                     std::size_t node_cap) {
  if (dim != 2 && dim != 3) raise(ErrorCode::InvalidArgument, "dimension must be 2 or 3");
  if (resolution < 2) raise(ErrorCode::InvalidArgument, "resolution must be >= 2");
  for (int k = 0; k < dim; ++k) {
    if (!(bbox.hi[k] > bbox.lo[k])) {
      raise(ErrorCode::DegenerateBBox, "sampling box is empty along an axis");
    }
  }
  ScalarGrid grid;
  grid.dim = dim;
  grid.res = {resolution, resolution, dim == 3 ? resolution : 1};
  grid.bbox = bbox;
  if (dim == 2) grid.bbox.lo.z() = grid.bbox.hi.z() = 0.0;
  const std::size_t nodes = grid.node_count();
  if (nodes > node_cap) {
    raise(ErrorCode::MemoryBudgetExceeded,
          std::to_string(nodes) + " grid nodes exceed the cap of " +
              std::to_string(node_cap));
  }
  grid.values.assign(nodes, 0.0);
  return grid;
}

template <typename Fn>
void fill(ScalarGrid& grid, Fn&& f) {
  const std::size_t plane = static_cast<std::size_t>(grid.res[1]) *
                            static_cast<std::size_t>(grid.res[2]);
  parallel_for(grid.node_count(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const auto i = static_cast<int>(idx / plane);
      const std::size_t rest = idx % plane;
      const auto j = static_cast<int>(rest / static_cast<std::size_t>(grid.res[2]));
      const auto k = static_cast<int>(rest % static_cast<std::size_t>(grid.res[2]));
      grid.values[idx] = f(grid.node(i, j, k));
    }
  });
}

}  // namespace

Vec3 ScalarGrid::spacing() const {
  Vec3 h = Vec3::Zero();
  for (int k = 0; k < dim; ++k) h[k] = (bbox.hi[k] - bbox.lo[k]) / (res[k] - 1);
  return h;
}

Vec3 ScalarGrid::node(int i, int j, int k) const {
  const Vec3 h = spacing();
  // Pin the last node to hi exactly so symmetric boxes give symmetric nodes.
  auto coord = [&](int axis, int n) {
    if (n == res[axis] - 1) return bbox.hi[axis];
    return bbox.lo[axis] + n * h[axis];
  };
  return Vec3(coord(0, i), coord(1, j), dim == 3 ? coord(2, k) : 0.0);
}

namespace {

// Terms whose exponent stays this far below the group maximum over a whole
// box carry a relative weight under exp(-37) ~ 8.5e-17 everywhere in it.
constexpr double kCullMargin = 37.0;
constexpr int kLeafCells = 4;
constexpr int kTopCells = 32;

struct NodeBox {
  std::array<int, 3> lo{}, hi{};  // inclusive node ranges
};

class CulledSampler {
 public:
  CulledSampler(const PackedModel& packed, ScalarGrid& grid, EvalMode mode)
      : packed_(packed), grid_(grid), mode_(mode) {}

  void run(const NodeBox& box) {
    std::vector<std::uint32_t> plus(packed_.plus.size()), minus(packed_.minus.size());
    std::iota(plus.begin(), plus.end(), 0u);
    std::iota(minus.begin(), minus.end(), 0u);
    visit(box, plus, minus);
  }

 private:
  void visit(const NodeBox& box, const std::vector<std::uint32_t>& plus,
             const std::vector<std::uint32_t>& minus) {
    const Vec3 lo = grid_.node(box.lo[0], box.lo[1], box.lo[2]);
    const Vec3 hi = grid_.node(box.hi[0], box.hi[1], box.hi[2]);
    const Vec3 center = 0.5 * (lo + hi);
    const Vec3 half = 0.5 * (hi - lo);
    std::vector<std::uint32_t> keep_plus, keep_minus;
    cull(packed_.plus, plus, center, half, keep_plus);
    cull(packed_.minus, minus, center, half, keep_minus);

    int axis = 0;
    for (int k = 1; k < 3; ++k) {
      if (box.hi[k] - box.lo[k] > box.hi[axis] - box.lo[axis]) axis = k;
    }
    const int span = box.hi[axis] - box.lo[axis];
    if (span <= kLeafCells || keep_plus.size() + keep_minus.size() <= 2) {
      evaluate(box, keep_plus, keep_minus);
      return;
    }
    NodeBox a = box, b = box;
    a.hi[axis] = box.lo[axis] + span / 2;
    b.lo[axis] = a.hi[axis] + 1;
    visit(a, keep_plus, keep_minus);
    visit(b, keep_plus, keep_minus);
  }

  void cull(const PackedGroup& g, const std::vector<std::uint32_t>& cand,
            const Vec3& center, const Vec3& half,
            std::vector<std::uint32_t>& out) const {
    const bool smooth = mode_ == EvalMode::Smooth;
    const double scale = smooth ? g.beta : 1.0;
    bounds_.resize(2 * cand.size());
    double best_lower = detail::kNegInf;
    for (std::size_t q = 0; q < cand.size(); ++q) {
      const std::uint32_t t = cand[q];
      const double mid = g.ax[t] * center.x() + g.ay[t] * center.y() +
                         g.az[t] * center.z() + g.c[t];
      const double reach = std::abs(g.ax[t]) * half.x() +
                           std::abs(g.ay[t]) * half.y() +
                           std::abs(g.az[t]) * half.z();
      const double shift = smooth ? g.log_s[t] : 0.0;
      bounds_[2 * q] = scale * (mid - reach) + shift;
      bounds_[2 * q + 1] = scale * (mid + reach) + shift;
      best_lower = std::max(best_lower, bounds_[2 * q]);
    }
    // The tropical maximum must be kept exactly; the slack only absorbs
    // rounding in the bounds.
    const double margin =
        smooth ? kCullMargin : 1e-9 * (1.0 + std::abs(best_lower));
    out.clear();
    for (std::size_t q = 0; q < cand.size(); ++q) {
      if (bounds_[2 * q + 1] >= best_lower - margin) out.push_back(cand[q]);
    }
  }

  static void gather(const PackedGroup& g, const std::vector<std::uint32_t>& keep,
                     PackedGroup& out) {
    out.beta = g.beta;
    for (auto* v : {&out.ax, &out.ay, &out.az, &out.c, &out.log_s}) v->clear();
    out.index.clear();
    for (std::uint32_t t : keep) {
      out.ax.push_back(g.ax[t]);
      out.ay.push_back(g.ay[t]);
      out.az.push_back(g.az[t]);
      out.c.push_back(g.c[t]);
      out.log_s.push_back(g.log_s[t]);
      out.index.push_back(g.index[t]);
    }
  }

  void evaluate(const NodeBox& box, const std::vector<std::uint32_t>& plus,
                const std::vector<std::uint32_t>& minus) {
    sub_.dim = packed_.dim;
    gather(packed_.plus, plus, sub_.plus);
    gather(packed_.minus, minus, sub_.minus);
    for (int i = box.lo[0]; i <= box.hi[0]; ++i) {
      for (int j = box.lo[1]; j <= box.hi[1]; ++j) {
        for (int k = box.lo[2]; k <= box.hi[2]; ++k) {
          const Vec3 x = grid_.node(i, j, k);
          grid_.values[grid_.index(i, j, k)] =
              mode_ == EvalMode::Tropical ? detail::tropical_point(sub_, x)
                                          : detail::stream_point(sub_, x).value;
        }
      }
    }
  }

  const PackedModel& packed_;
  ScalarGrid& grid_;
  EvalMode mode_;
  PackedModel sub_;
  mutable std::vector<double> bounds_;
};

}  // namespace

ScalarGrid sample_grid(const PatchworkModel& model, int resolution,
                       const BBox& bbox, EvalMode mode, std::size_t node_cap) {
  model.validate();
  ScalarGrid grid = make_grid(model.dim, resolution, bbox, node_cap);
  const PackedModel packed(model);
  // Top-level blocks tile the lattice; within each, boxes are split in half
  // and the terms that cannot matter anywhere in a box are dropped before
  // recursing, so each node only sees the terms near the group maxima.
  std::array<int, 3> blocks{};
  for (int a = 0; a < 3; ++a) {
    blocks[a] = std::max(1, (grid.res[a] - 1 + kTopCells - 1) / kTopCells);
  }
  const auto count = static_cast<std::size_t>(blocks[0] * blocks[1] * blocks[2]);
  parallel_for(count, [&](std::size_t begin, std::size_t end) {
    CulledSampler sampler(packed, grid, mode);
    for (std::size_t b = begin; b < end; ++b) {
      const std::array<int, 3> id{static_cast<int>(b / static_cast<std::size_t>(blocks[1] * blocks[2])),
                                  static_cast<int>(b / static_cast<std::size_t>(blocks[2]) % static_cast<std::size_t>(blocks[1])),
                                  static_cast<int>(b % static_cast<std::size_t>(blocks[2]))};
      NodeBox box;
      for (int a = 0; a < 3; ++a) {
        // Blocks share no nodes: block a owns nodes [a*32, a*32 + 31], the
        // last one runs to the end of the axis.
        box.lo[a] = id[a] * kTopCells;
        box.hi[a] = id[a] + 1 == blocks[a] ? grid.res[a] - 1 : box.lo[a] + kTopCells - 1;
      }
      sampler.run(box);
    }
  });
  return grid;
}

ScalarGrid sample_function(int dim, int resolution, const BBox& bbox,
                           const std::function<double(const Vec3&)>& f,
                           std::size_t node_cap) {
  ScalarGrid grid = make_grid(dim, resolution, bbox, node_cap);
  fill(grid, f);
  return grid;
}

}  // namespace patchwork
