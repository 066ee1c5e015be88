#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the library's evaluators; only plain data types are shared.

#include "patchwork/field.hpp"
#include "patchwork/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using patchwork::Group;
using patchwork::PatchworkModel;
using patchwork::Vec3;

struct Dense {
  double value = 0.0;
  Vec3 grad = Vec3::Zero();
  std::vector<double> w;  // softmax per term
};

// Straight two-array evaluation: materialize all logits, then normalize.
inline Dense dense_eval(const PatchworkModel& m, const Vec3& x) {
  Dense out;
  out.w.assign(m.terms.size(), 0.0);
  double lse[2];
  Vec3 g[2] = {Vec3::Zero(), Vec3::Zero()};
  for (int gi = 0; gi < 2; ++gi) {
    const Group which = gi == 0 ? Group::Plus : Group::Minus;
    const double beta = gi == 0 ? m.beta_plus : m.beta_minus;
    std::vector<double> z;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < m.terms.size(); ++i) {
      const auto& t = m.terms[i];
      if (!t.active || t.group != which) continue;
      z.push_back(beta * (t.a.dot(x) + t.c) + t.log_s);
      idx.push_back(i);
    }
    if (z.empty()) {
      lse[gi] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    long double sum = 0.0L;
    for (double v : z) sum += std::exp(static_cast<long double>(v - zmax));
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double w = static_cast<double>(std::exp(static_cast<long double>(z[k] - zmax)) / sum);
      out.w[idx[k]] = w;
      g[gi] += w * m.terms[idx[k]].a;
    }
    lse[gi] = zmax + static_cast<double>(std::log(sum));
  }
  out.value = lse[0] / m.beta_plus - lse[1] / m.beta_minus;
  out.grad = g[0] - g[1];
  return out;
}

inline double tropical(const PatchworkModel& m, const Vec3& x) {
  double best[2] = {-std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity()};
  for (const auto& t : m.terms) {
    if (!t.active) continue;
    double& b = best[t.group == Group::Plus ? 0 : 1];
    b = std::max(b, t.a.dot(x) + t.c);
  }
  return best[0] - best[1];
}

inline PatchworkModel random_model(int dim, std::size_t n, std::mt19937_64& rng,
                                   double beta = 10.0, bool weightnorm = false) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  PatchworkModel m;
  m.dim = dim;
  m.beta_plus = beta;
  m.beta_minus = beta * 1.3;
  for (std::size_t i = 0; i < n; ++i) {
    patchwork::LinearTerm t;
    for (int k = 0; k < dim; ++k) t.a[k] = N(rng);
    t.c = U(rng);
    t.log_s = U(rng);
    t.group = i % 2 == 0 ? Group::Plus : Group::Minus;
    m.terms.push_back(t);
  }
  if (weightnorm) m.enable_weightnorm();
  return m;
}

inline Vec3 random_point(int dim, std::mt19937_64& rng, double half = 1.0) {
  std::uniform_real_distribution<double> U(-half, half);
  Vec3 p = Vec3::Zero();
  for (int k = 0; k < dim; ++k) p[k] = U(rng);
  return p;
}

// Brute-force nearest distance.
inline double nearest(const Vec3& q, const std::vector<Vec3>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) best = std::min(best, (p - q).norm());
  return best;
}

inline double brute_hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double h = 0.0;
  for (const auto& p : a) h = std::max(h, nearest(p, b));
  for (const auto& p : b) h = std::max(h, nearest(p, a));
  return h;
}

inline double brute_chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double sa = 0.0, sb = 0.0;
  for (const auto& p : a) sa += nearest(p, b);
  for (const auto& p : b) sb += nearest(p, a);
  sa /= static_cast<double>(a.size());
  sb /= static_cast<double>(b.size());
  return 0.5 * (std::min(sa, sb) + std::max(sa, sb));
}

inline double brute_fscore(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                           double cutoff) {
  double pa = 0.0, rb = 0.0;
  for (const auto& p : a) pa += nearest(p, b) < cutoff ? 1.0 : 0.0;
  for (const auto& p : b) rb += nearest(p, a) < cutoff ? 1.0 : 0.0;
  pa /= static_cast<double>(a.size());
  rb /= static_cast<double>(b.size());
  return pa + rb > 0.0 ? 100.0 * 2.0 * pa * rb / (pa + rb) : 0.0;
}

// Distance from p to segment [a, b].
inline double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 d = b - a;
  const double len2 = d.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (a + t * d - p).norm();
}

// Zero set of the tropical field on a fine lattice: points where the sign of
// f differs from a lattice neighbour, placed at the edge midpoint.
inline std::vector<Vec3> tropical_zero_samples_2d(const PatchworkModel& m, int res,
                                                  double half = 1.0) {
  std::vector<double> f(static_cast<std::size_t>(res * res));
  const double h = 2.0 * half / (res - 1);
  auto at = [&](int i, int j) { return Vec3(-half + i * h, -half + j * h, 0.0); };
  for (int i = 0; i < res; ++i)
    for (int j = 0; j < res; ++j) f[static_cast<std::size_t>(i * res + j)] = tropical(m, at(i, j));
  std::vector<Vec3> out;
  for (int i = 0; i < res; ++i) {
    for (int j = 0; j < res; ++j) {
      const double v = f[static_cast<std::size_t>(i * res + j)];
      if (i + 1 < res && (v > 0) != (f[static_cast<std::size_t>((i + 1) * res + j)] > 0))
        out.push_back(0.5 * (at(i, j) + at(i + 1, j)));
      if (j + 1 < res && (v > 0) != (f[static_cast<std::size_t>(i * res + j + 1)] > 0))
        out.push_back(0.5 * (at(i, j) + at(i, j + 1)));
    }
  }
  return out;
}

}  // namespace oracle
