#include "patchwork/init.hpp"

#include "patchwork/error.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <string>

namespace patchwork {

void OrientedSampleSet::validate(double unit_tol) const {
  if (points.empty()) raise(ErrorCode::EmptyInput, "no samples");
  if (dim != 2 && dim != 3) raise(ErrorCode::InvalidArgument, "dimension must be 2 or 3");
  if (normals.size() != points.size()) {
    raise(ErrorCode::InvalidArgument, "points and normals differ in length");
  }
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (!points[j].allFinite() || !normals[j].allFinite()) {
      raise(ErrorCode::NonFiniteParameter,
            "sample " + std::to_string(j) + " is not finite");
    }
    if (dim == 2 && (points[j].z() != 0.0 || normals[j].z() != 0.0)) {
      raise(ErrorCode::DimensionMismatch,
            "sample " + std::to_string(j) + " has a z component in 2D");
    }
    if (std::abs(normals[j].norm() - 1.0) > unit_tol) {
      raise(ErrorCode::NonUnitNormal,
            "normal " + std::to_string(j) + " has length " +
                std::to_string(normals[j].norm()));
    }
  }
}

std::size_t OrientedSampleSet::normalize_normals(double unit_tol) {
  std::size_t fixed = 0;
  for (std::size_t j = 0; j < normals.size(); ++j) {
    const double len = normals[j].norm();
    if (!(len > 0.0) || !std::isfinite(len)) {
      raise(ErrorCode::NonUnitNormal,
            "normal " + std::to_string(j) + " cannot be normalized");
    }
    if (std::abs(len - 1.0) > unit_tol) ++fixed;
    normals[j] /= len;
  }
  if (fixed > 0) {
    spdlog::warn("rescaled {} non-unit normals in '{}'", fixed, source);
  }
  return fixed;
}

PatchworkModel geometric_init(const OrientedSampleSet& samples,
                              const GeometricInitOptions& options) {
  samples.validate();
  if (!(options.rho > 0.0) || !(options.beta > 0.0)) {
    raise(ErrorCode::InvalidArgument, "rho and beta must be positive");
  }
  const std::size_t m = samples.size();
  const double rho = options.rho;

  PatchworkModel model;
  model.dim = samples.dim;
  model.beta_plus = options.beta;
  model.beta_minus = options.beta;
  model.terms.resize(2 * m);
  for (std::size_t j = 0; j < m; ++j) {
    const Vec3& x = samples.points[j];
    const Vec3& n = samples.normals[j];
    const double half_sq = 0.5 * rho * x.squaredNorm();

    LinearTerm& plus = model.terms[j];
    plus.group = Group::Plus;
    plus.a = rho * x + n;
    plus.c = -half_sq - n.dot(x);

    LinearTerm& minus = model.terms[m + j];
    minus.group = Group::Minus;
    minus.a = rho * x;
    minus.c = -half_sq;
  }
  if (options.weightnorm) model.enable_weightnorm();
  return model;
}

std::size_t grid_term_index(int n, int k, int l) {
  const int side = 2 * n + 1;
  return static_cast<std::size_t>((k + n) * side + (l + n));
}

std::size_t grid_term_index(int n, int k, int l, int m) {
  const int side = 2 * n + 1;
  return static_cast<std::size_t>(((k + n) * side + (l + n)) * side + (m + n));
}

PatchworkModel digital_curve_grid(int n, const OccupancyOracle& oracle) {
  if (n < 1) raise(ErrorCode::InvalidArgument, "grid size N must be >= 1");
  PatchworkModel model;
  model.dim = 2;
  const double N = n;
  for (int k = -n; k <= n; ++k) {
    for (int l = -n; l <= n; ++l) {
      LinearTerm t;
      t.a = Vec3(k, l, 0.0);
      t.c = (1.0 - k * k - l * l) / (2.0 * N);
      t.group = oracle(Vec3(k / N, l / N, 0.0)) ? Group::Minus : Group::Plus;
      model.terms.push_back(t);
    }
  }
  return model;
}

Vec3 hex_cell_center(int n, int k, int l) {
  const double N = n;
  return Vec3((2.0 * k + l) / N, (k + 2.0 * l) / N, 0.0);
}

PatchworkModel digital_curve_hex(int n, const OccupancyOracle& oracle) {
  if (n < 1) raise(ErrorCode::InvalidArgument, "lattice size N must be >= 1");
  PatchworkModel model;
  model.dim = 2;
  const double N = n;
  for (int k = -n; k <= n; ++k) {
    for (int l = -n; l <= n; ++l) {
      LinearTerm t;
      t.a = Vec3(k, l, 0.0);
      t.c = -(k * k + l * l + k * l - 1.0) / N;
      t.group = oracle(hex_cell_center(n, k, l)) ? Group::Minus : Group::Plus;
      model.terms.push_back(t);
    }
  }
  return model;
}

PatchworkModel digital_surface_grid(int n, const OccupancyOracle& oracle,
                                    std::size_t term_cap) {
  if (n < 1) raise(ErrorCode::InvalidArgument, "grid size N must be >= 1");
  const auto side = static_cast<std::size_t>(2 * n + 1);
  if (side * side * side > term_cap) {
    raise(ErrorCode::MemoryBudgetExceeded,
          std::to_string(side * side * side) + " terms exceed the cap of " +
              std::to_string(term_cap));
  }
  PatchworkModel model;
  model.dim = 3;
  model.terms.reserve(side * side * side);
  const double N = n;
  for (int k = -n; k <= n; ++k) {
    for (int l = -n; l <= n; ++l) {
      for (int m = -n; m <= n; ++m) {
        LinearTerm t;
        t.a = Vec3(k, l, m);
        t.c = (1.0 - k * k - l * l - m * m) / (2.0 * N);
        t.group = oracle(Vec3(k / N, l / N, m / N)) ? Group::Minus : Group::Plus;
        model.terms.push_back(t);
      }
    }
  }
  return model;
}

}  // namespace patchwork
