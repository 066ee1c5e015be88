#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace patchwork {

// Points and directions are always stored with three components. 2D data
// keeps z == 0; the owning object carries the logical dimension.
using Vec3 = Eigen::Vector3d;

struct BBox {
  Vec3 lo = Vec3::Constant(-1.0);
  Vec3 hi = Vec3::Constant(1.0);

  static BBox unit(int dim, double half_extent = 1.0) {
    BBox b;
    b.lo = Vec3::Constant(-half_extent);
    b.hi = Vec3::Constant(half_extent);
    if (dim == 2) {
      b.lo.z() = 0.0;
      b.hi.z() = 0.0;
    }
    return b;
  }

  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return 0.5 * (lo + hi); }
};

using PointList = std::vector<Vec3>;

}  // namespace patchwork
