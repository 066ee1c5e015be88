#pragma once

// Tile kernels shared by field evaluation, grid sampling and training.

#include "patchwork/field.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace patchwork::detail {

inline constexpr std::size_t kTile = 256;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Exponent floor for softmax terms. exp(-700) is far below the rounding of a
// group sum (which is >= 1), and keeping arguments above the subnormal range
// avoids the slow underflow path, which costs about 10x per element.
inline constexpr double kExpFloor = -700.0;

using TileArray = Eigen::Array<double, static_cast<int>(kTile), 1>;
using ConstMap = Eigen::Map<const Eigen::ArrayXd>;

struct GroupPass {
  double lse = kNegInf;       // log sum exp(beta * l_i + log s_i)
  double tropical = kNegInf;  // max l_i
  Vec3 grad = Vec3::Zero();   // softmax-weighted slope
};

// Two passes over fixed-size tiles; no heap traffic.
inline GroupPass stream_group(const PackedGroup& g, const Vec3& x) {
  GroupPass out;
  const std::size_t n = g.size();
  if (n == 0) return out;
  const double beta = g.beta;
  TileArray tile;

  double zmax = kNegInf;
  for (std::size_t off = 0; off < n; off += kTile) {
    const auto len = static_cast<Eigen::Index>(std::min(kTile, n - off));
    ConstMap ax(g.ax.data() + off, len), ay(g.ay.data() + off, len),
        az(g.az.data() + off, len), c(g.c.data() + off, len),
        ls(g.log_s.data() + off, len);
    auto l = tile.head(len);
    l = ax * x.x() + ay * x.y() + az * x.z() + c;
    out.tropical = std::max(out.tropical, l.maxCoeff());
    l = beta * l + ls;
    zmax = std::max(zmax, l.maxCoeff());
  }

  double sum = 0.0, gx = 0.0, gy = 0.0, gz = 0.0;
  for (std::size_t off = 0; off < n; off += kTile) {
    const auto len = static_cast<Eigen::Index>(std::min(kTile, n - off));
    ConstMap ax(g.ax.data() + off, len), ay(g.ay.data() + off, len),
        az(g.az.data() + off, len), c(g.c.data() + off, len),
        ls(g.log_s.data() + off, len);
    auto e = tile.head(len);
    e = (beta * (ax * x.x() + ay * x.y() + az * x.z() + c) + ls - zmax)
            .max(kExpFloor)
            .exp();
    sum += e.sum();
    gx += (e * ax).sum();
    gy += (e * ay).sum();
    gz += (e * az).sum();
  }
  out.lse = zmax + std::log(sum);
  out.grad = Vec3(gx, gy, gz) / sum;
  return out;
}

inline PointValue combine(const PackedModel& m, const GroupPass& p,
                          const GroupPass& q) {
  PointValue v;
  v.value = p.lse / m.plus.beta - q.lse / m.minus.beta;
  v.grad_x = p.grad - q.grad;
  v.tropical = p.tropical - q.tropical;
  return v;
}

inline PointValue stream_point(const PackedModel& m, const Vec3& x) {
  return combine(m, stream_group(m.plus, x), stream_group(m.minus, x));
}

// Tropical value only: one pass, no exponentials.
inline double group_max(const PackedGroup& g, const Vec3& x) {
  const std::size_t n = g.size();
  double best = kNegInf;
  TileArray tile;
  for (std::size_t off = 0; off < n; off += kTile) {
    const auto len = static_cast<Eigen::Index>(std::min(kTile, n - off));
    ConstMap ax(g.ax.data() + off, len), ay(g.ay.data() + off, len),
        az(g.az.data() + off, len), c(g.c.data() + off, len);
    auto l = tile.head(len);
    l = ax * x.x() + ay * x.y() + az * x.z() + c;
    best = std::max(best, l.maxCoeff());
  }
  return best;
}

inline double tropical_point(const PackedModel& m, const Vec3& x) {
  return group_max(m.plus, x) - group_max(m.minus, x);
}

}  // namespace patchwork::detail
