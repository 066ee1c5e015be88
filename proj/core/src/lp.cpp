#include "patchwork/error.hpp"
#include "patchwork/extract.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace patchwork {
namespace {

constexpr int kMaxVars = 4;
constexpr double kBound = 1e6;
constexpr std::uint64_t kShuffleSeed = 0x5eed1e55ULL;
// Problems up to this many rows are solved in one go.
constexpr std::size_t kDirectRows = 64;
constexpr std::size_t kRowsPerRound = 16;

// a . z <= b over the first k variables; mag tracks the size of the numbers
// that went into the row so tolerances stay relative.
struct Row {
  std::array<double, kMaxVars> a{};
  double b = 0.0;
  double mag = 0.0;
};

using Objective = std::array<double, kMaxVars>;

double tolerance(const Row& r, const double* z, int k) {
  double s = std::abs(r.b);
  for (int q = 0; q < k; ++q) s += std::abs(r.a[static_cast<std::size_t>(q)] * z[q]);
  return 1e-12 * s + 1e-15;
}

// Lexicographic maximum of the objectives over rows and |z_q| <= kBound.
bool solve(int k, const std::vector<Row>& rows, const std::vector<Objective>& objs,
           double* z) {
  if (k == 0) {
    for (const Row& r : rows) {
      if (r.b < -1e-12 * r.mag - 1e-15) return false;
    }
    return true;
  }
  for (int q = 0; q < k; ++q) {
    z[q] = 0.0;
    for (const auto& c : objs) {
      const double cq = c[static_cast<std::size_t>(q)];
      if (cq != 0.0) {
        z[q] = cq > 0.0 ? kBound : -kBound;
        break;
      }
    }
  }
  for (std::size_t h = 0; h < rows.size(); ++h) {
    const Row& r = rows[h];
    double lhs = 0.0;
    for (int q = 0; q < k; ++q) lhs += r.a[static_cast<std::size_t>(q)] * z[q];
    if (lhs <= r.b + tolerance(r, z, k)) continue;

    int p = 0;
    for (int q = 1; q < k; ++q) {
      if (std::abs(r.a[static_cast<std::size_t>(q)]) >
          std::abs(r.a[static_cast<std::size_t>(p)])) {
        p = q;
      }
    }
    const double ap = r.a[static_cast<std::size_t>(p)];
    double norm = 0.0;
    for (int q = 0; q < k; ++q) norm = std::max(norm, std::abs(r.a[static_cast<std::size_t>(q)]));
    if (norm <= 1e-12 * (1.0 + r.mag / kBound)) return false;  // 0 <= b < 0

    // Substitute z_p = (b - sum_{q != p} a_q z_q) / a_p into everything else.
    const double inv = 1.0 / ap;
    auto reduce = [&](const Row& g) {
      Row out;
      const double gp = g.a[static_cast<std::size_t>(p)];
      int w = 0;
      for (int q = 0; q < k; ++q) {
        if (q == p) continue;
        out.a[static_cast<std::size_t>(w++)] =
            g.a[static_cast<std::size_t>(q)] - gp * inv * r.a[static_cast<std::size_t>(q)];
      }
      out.b = g.b - gp * inv * r.b;
      out.mag = g.mag + std::abs(gp * inv) * r.mag;
      return out;
    };
    std::vector<Row> sub;
    sub.reserve(h + 2);
    // Box bounds of the eliminated variable become ordinary rows.
    for (double sign : {1.0, -1.0}) {
      Row box;
      box.a[static_cast<std::size_t>(p)] = sign;
      box.b = kBound;
      box.mag = kBound;
      sub.push_back(reduce(box));
    }
    for (std::size_t g = 0; g < h; ++g) sub.push_back(reduce(rows[g]));

    std::vector<Objective> sub_objs;
    sub_objs.reserve(objs.size());
    for (const auto& c : objs) {
      Objective o{};
      const double cp = c[static_cast<std::size_t>(p)];
      int w = 0;
      for (int q = 0; q < k; ++q) {
        if (q == p) continue;
        o[static_cast<std::size_t>(w++)] =
            c[static_cast<std::size_t>(q)] - cp * inv * r.a[static_cast<std::size_t>(q)];
      }
      sub_objs.push_back(o);
    }

    double zs[kMaxVars] = {};
    if (!solve(k - 1, sub, sub_objs, zs)) return false;
    double rest = r.b;
    int w = 0;
    for (int q = 0; q < k; ++q) {
      if (q == p) continue;
      z[q] = zs[w++];
      rest -= r.a[static_cast<std::size_t>(q)] * z[q];
    }
    z[p] = rest * inv;
  }
  return true;
}

// Shuffles a copy of the rows with a fixed seed (the expected linear running
// time relies on a random insertion order) and solves.
bool solve_shuffled(int k, std::vector<Row> rows, const std::vector<Objective>& objs,
                    double* z) {
  std::mt19937_64 rng(kShuffleSeed);
  std::shuffle(rows.begin(), rows.end(), rng);
  return solve(k, rows, objs, z);
}

}  // namespace

LPResult chebyshev_center(std::span<const Halfspace> halfspaces, int dim) {
  if (dim != 2 && dim != 3) raise(ErrorCode::InvalidArgument, "dimension must be 2 or 3");
  if (halfspaces.empty()) raise(ErrorCode::InvalidArgument, "no halfspaces");
  const int k = dim + 1;  // x then the radius y
  std::vector<Row> rows;
  rows.reserve(halfspaces.size());
  LPResult out;
  for (const Halfspace& h : halfspaces) {
    if (!h.normal.allFinite() || !std::isfinite(h.offset)) {
      raise(ErrorCode::NumericalDegeneracy, "non-finite halfspace");
    }
    Row r;
    double norm = 0.0;
    for (int q = 0; q < dim; ++q) norm += h.normal[q] * h.normal[q];
    norm = std::sqrt(norm);
    if (norm <= 1e-12) {
      // 0 <= -offset either always holds or never does.
      if (h.offset > 1e-12) return out;
      continue;
    }
    for (int q = 0; q < dim; ++q) r.a[static_cast<std::size_t>(q)] = h.normal[q];
    r.a[static_cast<std::size_t>(dim)] = norm;
    r.b = -h.offset;
    r.mag = std::abs(h.offset) + 2.0 * norm * kBound;
    rows.push_back(r);
  }

  std::vector<Objective> objs;
  Objective radius{};
  radius[static_cast<std::size_t>(dim)] = 1.0;
  objs.push_back(radius);
  for (int q = 0; q < dim; ++q) {
    Objective o{};
    o[static_cast<std::size_t>(q)] = -1.0;
    objs.push_back(o);
  }

  // Constraint generation. The lexicographic optimum over a subset that no
  // other row cuts off is also the optimum over all rows, so small working
  // sets suffice; cells of large models are bounded by a handful of rows.
  double z[kMaxVars] = {};
  if (rows.size() <= kDirectRows) {
    if (!solve_shuffled(k, rows, objs, z)) return out;
  } else {
    std::vector<char> in(rows.size(), 0);
    std::vector<Row> work;
    for (std::size_t i = 0; i < kDirectRows / 2; ++i) {
      // Spread the seed rows over the input.
      const std::size_t idx = i * rows.size() / (kDirectRows / 2);
      in[idx] = 1;
      work.push_back(rows[idx]);
    }
    std::vector<std::pair<double, std::size_t>> violated;
    while (true) {
      if (!solve_shuffled(k, work, objs, z)) return out;
      violated.clear();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (in[i]) continue;
        const Row& r = rows[i];
        double lhs = 0.0;
        for (int q = 0; q < k; ++q) lhs += r.a[static_cast<std::size_t>(q)] * z[q];
        const double excess = lhs - r.b;
        if (excess > tolerance(r, z, k)) {
          violated.emplace_back(-excess / r.a[static_cast<std::size_t>(dim)], i);
        }
      }
      if (violated.empty()) break;
      const std::size_t take = std::min<std::size_t>(violated.size(), kRowsPerRound);
      std::partial_sort(violated.begin(), violated.begin() + static_cast<std::ptrdiff_t>(take),
                        violated.end());
      for (std::size_t t = 0; t < take; ++t) {
        in[violated[t].second] = 1;
        work.push_back(rows[violated[t].second]);
      }
    }
  }
  out.x = Vec3::Zero();
  for (int q = 0; q < dim; ++q) out.x[q] = z[q];
  out.y = z[dim];
  out.status = out.y >= kBound * (1.0 - 1e-9) ? LPStatus::Unbounded : LPStatus::Optimal;
  return out;
}

}  // namespace patchwork
