#include "patchwork/error.hpp"
#include "patchwork/extract.hpp"

#include <spdlog/spdlog.h>

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>
#include <vector>

namespace patchwork {
namespace {

// Convex polygon (2D) with the label of the edge leaving each vertex.
struct Polygon2 {
  PointList v;
  std::vector<std::uint32_t> label;
};

struct Face3 {
  PointList v;  // counterclockwise seen from outside
  std::uint32_t label = kBoundaryLabel;
};

using Polytope3 = std::vector<Face3>;

double plane_eps(const Halfspace& h, double radius) {
  return 1e-12 * (h.normal.norm() * radius + std::abs(h.offset)) + 1e-15;
}

Vec3 cut_point(const Vec3& p, const Vec3& q, double hp, double hq) {
  const double t = hp / (hp - hq);
  return p + t * (q - p);
}

Polygon2 box_polygon(double s) {
  Polygon2 poly;
  poly.v = {Vec3(-s, -s, 0), Vec3(s, -s, 0), Vec3(s, s, 0), Vec3(-s, s, 0)};
  poly.label.assign(4, kBoundaryLabel);
  return poly;
}

Polytope3 box_polytope(double s) {
  static constexpr std::array<std::array<int, 4>, 6> faces = {{
      {0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4},
      {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}}};
  Polytope3 out;
  for (const auto& f : faces) {
    Face3 face;
    for (int c : f) {
      face.v.emplace_back((c & 1) ? s : -s, (c & 2) ? s : -s, (c & 4) ? s : -s);
    }
    out.push_back(std::move(face));
  }
  return out;
}

// Returns false when the clip leaves nothing.
bool clip(Polygon2& poly, const Halfspace& h, double radius) {
  const double eps = plane_eps(h, radius);
  const std::size_t n = poly.v.size();
  std::vector<double> val(n);
  bool any_out = false, any_in = false;
  for (std::size_t k = 0; k < n; ++k) {
    val[k] = h.normal.dot(poly.v[k]) + h.offset;
    any_out |= val[k] > eps;
    any_in |= val[k] < -eps;
  }
  if (!any_out) return true;
  if (!any_in) return false;
  Polygon2 out;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t k1 = (k + 1) % n;
    const double a = val[k], b = val[k1];
    if (a <= eps) {
      if (b > eps) {
        if (a < -eps) {
          out.v.push_back(poly.v[k]);
          out.label.push_back(poly.label[k]);
          out.v.push_back(cut_point(poly.v[k], poly.v[k1], a, b));
          out.label.push_back(h.label);
        } else {
          out.v.push_back(poly.v[k]);
          out.label.push_back(h.label);
        }
      } else {
        out.v.push_back(poly.v[k]);
        out.label.push_back(poly.label[k]);
      }
    } else if (b < -eps) {
      out.v.push_back(cut_point(poly.v[k], poly.v[k1], a, b));
      out.label.push_back(poly.label[k]);
    }
  }
  poly = std::move(out);
  return poly.v.size() >= 3;
}

bool clip(Polytope3& poly, const Halfspace& h, double radius) {
  const double eps = plane_eps(h, radius);
  bool any_out = false, any_in = false;
  for (const Face3& f : poly) {
    for (const Vec3& p : f.v) {
      const double d = h.normal.dot(p) + h.offset;
      any_out |= d > eps;
      any_in |= d < -eps;
    }
  }
  if (!any_out) return true;
  if (!any_in) return false;

  Polytope3 out;
  PointList cap;
  for (const Face3& f : poly) {
    const std::size_t n = f.v.size();
    std::vector<double> val(n);
    for (std::size_t k = 0; k < n; ++k) val[k] = h.normal.dot(f.v[k]) + h.offset;
    Face3 g;
    g.label = f.label;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t k1 = (k + 1) % n;
      const double a = val[k], b = val[k1];
      if (a <= eps) {
        g.v.push_back(f.v[k]);
        if (a >= -eps) cap.push_back(f.v[k]);
      }
      if ((a < -eps && b > eps) || (a > eps && b < -eps)) {
        const Vec3 p = cut_point(f.v[k], f.v[k1], a, b);
        g.v.push_back(p);
        cap.push_back(p);
      }
    }
    if (g.v.size() >= 3) out.push_back(std::move(g));
  }

  const Vec3 normal = h.normal.normalized();
  const double merge = 1e-11 * radius;
  PointList uniq;
  for (const Vec3& p : cap) {
    bool dup = false;
    for (const Vec3& q : uniq) dup |= (p - q).norm() <= merge;
    if (!dup) uniq.push_back(p);
  }
  if (uniq.size() >= 3) {
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : uniq) centroid += p;
    centroid /= static_cast<double>(uniq.size());
    const Vec3 e1 = normal.unitOrthogonal();
    const Vec3 e2 = normal.cross(e1);
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t k = 0; k < uniq.size(); ++k) {
      const Vec3 d = uniq[k] - centroid;
      order.emplace_back(std::atan2(d.dot(e2), d.dot(e1)), k);
    }
    std::sort(order.begin(), order.end());
    Face3 capf;
    capf.label = h.label;
    for (const auto& [angle, k] : order) capf.v.push_back(uniq[k]);
    double area = 0.0;
    for (std::size_t k = 1; k + 1 < capf.v.size(); ++k) {
      area += (capf.v[k] - capf.v[0]).cross(capf.v[k + 1] - capf.v[0]).norm();
    }
    if (area > merge * merge) out.push_back(std::move(capf));
  }
  poly = std::move(out);
  return poly.size() >= 4;
}

double max_distance(const Polygon2& poly, const Vec3& c) {
  double r = 0.0;
  for (const Vec3& p : poly.v) r = std::max(r, (p - c).norm());
  return r;
}

double max_distance(const Polytope3& poly, const Vec3& c) {
  double r = 0.0;
  for (const Face3& f : poly) {
    for (const Vec3& p : f.v) r = std::max(r, (p - c).norm());
  }
  return r;
}

// Clips `shape` by the halfspaces nearest to `center` first and stops once
// every remaining plane lies beyond the current shape.
template <typename Shape>
bool clip_all(Shape& shape, const std::vector<Halfspace>& hs, const Vec3& center,
              double radius) {
  std::vector<std::pair<double, std::uint32_t>> dist(hs.size());
  for (std::size_t k = 0; k < hs.size(); ++k) {
    const double n = hs[k].normal.norm();
    dist[k] = {-(hs[k].normal.dot(center) + hs[k].offset) / n,
               static_cast<std::uint32_t>(k)};
  }
  const std::size_t head = std::min<std::size_t>(dist.size(), 48);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(head),
                    dist.end());
  std::size_t done = 0;
  for (; done < head; ++done) {
    if (!clip(shape, hs[dist[done].second], radius)) return false;
  }
  double reach = max_distance(shape, center);
  std::vector<std::pair<double, std::uint32_t>> rest;
  for (std::size_t k = head; k < dist.size(); ++k) {
    if (dist[k].first < reach) rest.push_back(dist[k]);
  }
  std::sort(rest.begin(), rest.end());
  for (const auto& [d, k] : rest) {
    if (d >= reach) break;
    if (!clip(shape, hs[k], radius)) return false;
    reach = max_distance(shape, center);
  }
  return true;
}

class VertexSnap {
 public:
  explicit VertexSnap(double tol) : tol_(tol), cell_(4.0 * tol) {}

  std::uint32_t add(const Vec3& p, PointList& out) {
    const std::array<long long, 3> key = quantize(p);
    for (long long dx = -1; dx <= 1; ++dx) {
      for (long long dy = -1; dy <= 1; ++dy) {
        for (long long dz = -1; dz <= 1; ++dz) {
          auto it = map_.find({key[0] + dx, key[1] + dy, key[2] + dz});
          if (it == map_.end()) continue;
          for (std::uint32_t idx : it->second) {
            if ((out[idx] - p).norm() <= tol_) return idx;
          }
        }
      }
    }
    const auto idx = static_cast<std::uint32_t>(out.size());
    out.push_back(p);
    map_[key].push_back(idx);
    return idx;
  }

 private:
  std::array<long long, 3> quantize(const Vec3& p) const {
    return {static_cast<long long>(std::floor(p.x() / cell_)),
            static_cast<long long>(std::floor(p.y() / cell_)),
            static_cast<long long>(std::floor(p.z() / cell_))};
  }

  double tol_;
  double cell_;
  std::map<std::array<long long, 3>, std::vector<std::uint32_t>> map_;
};

std::vector<std::uint32_t> tied_terms(const PatchworkModel& model, const Vec3& x,
                                      double tol) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& t : model.terms) {
    if (t.active) best = std::max(best, t.eval(x));
  }
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < model.terms.size(); ++i) {
    const auto& t = model.terms[i];
    if (t.active && t.eval(x) >= best - tol) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

}  // namespace

SegmentSoup ExtractedComplex::segments() const {
  SegmentSoup out;
  out.vertices = vertices;
  for (const Facet& f : facets) {
    for (std::size_t k = 0; k + 1 < f.vertices.size(); ++k) {
      out.segments.push_back({f.vertices[k], f.vertices[k + 1]});
    }
  }
  return out;
}

PolygonMesh ExtractedComplex::polygons() const {
  PolygonMesh out;
  out.vertices = vertices;
  for (const Facet& f : facets) out.faces.push_back(f.vertices);
  return out;
}

ExtractedComplex extract_tropical(const PatchworkModel& model,
                                  const ExtractOptions& options) {
  model.validate();
  // With one group empty the field is +-inf everywhere and has no zero set.
  if (model.active_count(Group::Plus) == 0 || model.active_count(Group::Minus) == 0) {
    ExtractedComplex empty;
    empty.dim = model.dim;
    return empty;
  }
  const int dim = model.dim;
  const double s = options.box_scale;
  const double reach = s * std::sqrt(static_cast<double>(dim));
  const double snap_tol = options.snap * 2.0 * reach;

  ExtractedComplex out;
  out.dim = dim;
  VertexSnap snap(snap_tol);
  auto report = [&](Degeneracy d) {
    if (out.degeneracies.size() < options.max_reported) {
      out.degeneracies.push_back(std::move(d));
    }
    ++out.degeneracy_count;
  };

  std::vector<std::uint32_t> active;
  for (std::size_t i = 0; i < model.terms.size(); ++i) {
    if (model.terms[i].active) active.push_back(static_cast<std::uint32_t>(i));
  }

  std::vector<Halfspace> hs;
  for (std::uint32_t i : active) {
    const LinearTerm& ti = model.terms[i];
    if (ti.group != Group::Minus) continue;
    hs.clear();
    bool empty = false;
    for (std::uint32_t j : active) {
      if (j == i) continue;
      const LinearTerm& tj = model.terms[j];
      Halfspace h;
      h.normal = tj.a - ti.a;
      h.offset = tj.c - ti.c;
      h.label = j;
      if (h.normal.norm() <= 1e-14) {
        // Parallel copies: either j dominates everywhere or never binds.
        if (h.offset > 0.0) {
          empty = true;
          break;
        }
        continue;
      }
      hs.push_back(h);
    }
    if (empty) continue;
    for (int k = 0; k < dim; ++k) {
      for (double sign : {1.0, -1.0}) {
        Halfspace h;
        h.normal = Vec3::Zero();
        h.normal[k] = sign;
        h.offset = -s;
        h.label = kBoundaryLabel;
        hs.push_back(h);
      }
    }

    const LPResult lp = chebyshev_center(hs, dim);
    if (lp.status == LPStatus::Infeasible) continue;
    if (lp.y <= options.min_radius) {
      if (lp.y >= -options.tie_tol) {
        report({DegeneracyKind::LowerDimensionalCell, lp.x,
                tied_terms(model, lp.x, options.tie_tol)});
      }
      continue;
    }

    CandidateCell cell;
    cell.term = i;
    cell.center = lp.x;
    cell.radius = lp.y;
    std::vector<std::pair<std::vector<Vec3>, std::uint32_t>> faces;
    if (dim == 2) {
      Polygon2 poly = box_polygon(s);
      if (!clip_all(poly, hs, lp.x, reach)) continue;
      for (std::size_t k = 0; k < poly.v.size(); ++k) {
        // Reverse the counterclockwise boundary so the positive side is left.
        faces.push_back({{poly.v[(k + 1) % poly.v.size()], poly.v[k]}, poly.label[k]});
      }
    } else {
      Polytope3 poly = box_polytope(s);
      if (!clip_all(poly, hs, lp.x, reach)) continue;
      for (Face3& f : poly) faces.push_back({std::move(f.v), f.label});
    }

    for (auto& [pts, label] : faces) {
      cell.neighbours.push_back(label);
      if (label == kBoundaryLabel) {
        continue;
      }
      if (model.terms[label].group != Group::Plus) continue;
      Facet facet;
      facet.minus_term = i;
      facet.plus_term = label;
      for (const Vec3& p : pts) {
        const std::uint32_t idx = snap.add(p, out.vertices);
        if (facet.vertices.empty() || facet.vertices.back() != idx) {
          facet.vertices.push_back(idx);
        }
      }
      while (facet.vertices.size() > 1 && facet.vertices.front() == facet.vertices.back()) {
        facet.vertices.pop_back();
      }
      const std::size_t need = dim == 2 ? 2 : 3;
      if (facet.vertices.size() >= need) out.facets.push_back(std::move(facet));
    }
    std::sort(cell.neighbours.begin(), cell.neighbours.end());
    cell.neighbours.erase(std::unique(cell.neighbours.begin(), cell.neighbours.end()),
                          cell.neighbours.end());
    for (const Halfspace& h : hs) {
      if (std::binary_search(cell.neighbours.begin(), cell.neighbours.end(), h.label) &&
          h.label != kBoundaryLabel) {
        cell.halfspaces.push_back(h);
      }
    }
    out.interior_cells.push_back(std::move(cell));
  }

  // Vertices where more terms meet than general position allows.
  std::vector<char> used(out.vertices.size(), 0);
  for (const Facet& f : out.facets) {
    for (auto v : f.vertices) used[v] = 1;
  }
  for (std::size_t v = 0; v < out.vertices.size(); ++v) {
    if (!used[v]) continue;
    const Vec3& p = out.vertices[v];
    if ((p.head(dim).cwiseAbs().array() >= s * (1.0 - 1e-12)).any()) continue;
    auto tied = tied_terms(model, p, options.tie_tol);
    if (tied.size() > static_cast<std::size_t>(dim + 1)) {
      report({DegeneracyKind::TiedVertex, p, std::move(tied)});
    }
  }
  if (out.degeneracy_count > 0) {
    spdlog::warn("tropical extraction: {} degenerate configurations", out.degeneracy_count);
  }
  return out;
}

}  // namespace patchwork
