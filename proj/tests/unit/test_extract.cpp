#include "models.hpp"
#include "oracles.hpp"
#include "patchwork/error.hpp"
#include "patchwork/extract.hpp"
#include "patchwork/init.hpp"
#include "patchwork/mesh.hpp"
#include "patchwork/metrics.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace patchwork;
using namespace oracle;

namespace {

// Exact optimum by enumerating vertices of the LP in (x, r): every choice of
// four constraints a.x + r|a| + b <= 0 held with equality.
double vertex_enumeration_radius(const std::vector<Halfspace>& hs) {
  const std::size_t n = hs.size();
  double best = -1e300;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k)
        for (std::size_t l = k + 1; l < n; ++l) {
          Eigen::Matrix4d A;
          Eigen::Vector4d rhs;
          int row = 0;
          for (std::size_t q : {i, j, k, l}) {
            A.row(row) << hs[q].normal.x(), hs[q].normal.y(), hs[q].normal.z(),
                hs[q].normal.norm();
            rhs[row++] = -hs[q].offset;
          }
          const auto lu = A.fullPivLu();
          if (!lu.isInvertible()) continue;
          const Eigen::Vector4d z = lu.solve(rhs);
          const Vec3 x = z.head<3>();
          bool feasible = true;
          for (const auto& h : hs) {
            if (h.normal.dot(x) + z[3] * h.normal.norm() + h.offset > 1e-9) {
              feasible = false;
              break;
            }
          }
          if (feasible) best = std::max(best, z[3]);
        }
  return best;
}

}  // namespace

TEST(Grid, IndexingContract) {
  PatchworkModel m = fig2_model();
  const auto g = sample_grid(m, 3, BBox::unit(2));
  EXPECT_EQ(g.values.size(), 9u);
  EXPECT_EQ(g.index(1, 1), 4u);
  EXPECT_EQ(g.node(1, 1), Vec3::Zero());
  EXPECT_EQ(g.node(2, 0), Vec3(1, -1, 0));
  EXPECT_EQ(g.index(2, 0), 6u);
  EXPECT_DOUBLE_EQ(g.values[4], eval_field(m, Vec3::Zero()).value);
}

TEST(Grid, CulledSamplingMatchesDirectEvaluation) {
  // A steep geometric-init model, where most terms are negligible in any
  // small box, checked node by node.
  const auto sphere = make_icosphere(0.7, 3);
  std::mt19937_64 rng(3);
  const auto samples = sample_mesh_surface(sphere, 400, rng);
  auto m = geometric_init(samples);
  for (std::size_t i = 0; i < m.terms.size(); i += 7) m.terms[i].log_s = -3.0;
  for (int res : {2, 7, 41}) {
    const auto g = sample_grid(m, res, BBox::unit(3));
    const auto t = sample_grid(m, res, BBox::unit(3), EvalMode::Tropical);
    for (int i = 0; i < res; ++i)
      for (int j = 0; j < res; ++j)
        for (int k = 0; k < res; ++k) {
          const Vec3 x = g.node(i, j, k);
          ASSERT_NEAR(g.values[g.index(i, j, k)], eval_field(m, x).value, 1e-12);
          ASSERT_NEAR(t.values[t.index(i, j, k)], eval_tropical(m, x), 1e-12);
        }
  }
  std::mt19937_64 rng2(4);
  const auto m2 = oracle::random_model(2, 300, rng2, 30.0);
  const auto g2 = sample_grid(m2, 97, BBox::unit(2));
  for (int i = 0; i < 97; ++i)
    for (int j = 0; j < 97; ++j) {
      ASSERT_NEAR(g2.values[g2.index(i, j)], eval_field(m2, g2.node(i, j)).value, 1e-12);
    }
}

TEST(Grid, ConstantFieldAndPointwiseAgreement) {
  PatchworkModel c;
  c.dim = 3;
  LinearTerm p, q;
  p.c = 0.3;
  q.group = Group::Minus;
  c.terms = {p, q};
  for (double v : sample_grid(c, 9, BBox::unit(3)).values) EXPECT_DOUBLE_EQ(v, 0.3);

  std::mt19937_64 rng(1);
  const auto m = oracle::random_model(3, 40, rng, 20.0);
  const auto g = sample_grid(m, 11, BBox::unit(3));
  for (int i = 0; i < 11; i += 3)
    for (int j = 0; j < 11; j += 2)
      for (int k = 0; k < 11; k += 5) {
        EXPECT_NEAR(g.values[g.index(i, j, k)], eval_field(m, g.node(i, j, k)).value, 1e-12);
      }
  const auto t = sample_grid(m, 5, BBox::unit(3), EvalMode::Tropical);
  EXPECT_EQ(t.values[t.index(1, 2, 3)], eval_tropical(m, t.node(1, 2, 3)));
}

TEST(Grid, Errors) {
  const auto m = fig2_model();
  try {
    sample_grid(m, 1000, BBox::unit(2), EvalMode::Smooth, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MemoryBudgetExceeded);
  }
  BBox flat = BBox::unit(2);
  flat.hi.x() = flat.lo.x();
  try {
    sample_grid(m, 10, flat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateBBox);
  }
  EXPECT_THROW(sample_grid(m, 1, BBox::unit(2)), Error);
}

TEST(MarchingSquares, PlaneIsYAxisAndOriented) {
  const auto g = sample_function(2, 65, BBox::unit(2), [](const Vec3& p) { return p.x(); });
  const auto soup = marching_squares(g);
  ASSERT_FALSE(soup.segments.empty());
  for (const auto& v : soup.vertices) EXPECT_LT(std::abs(v.x()), 1e-12);
  EXPECT_NEAR(soup.length(), 2.0, 1e-9);
  for (const auto& s : soup.segments) {
    const Vec3 d = soup.vertices[s[1]] - soup.vertices[s[0]];
    EXPECT_LT(d.y(), 0.0);  // +x lies to the left
  }
}

TEST(MarchingSquares, Circle) {
  const auto g = sample_function(2, 256, BBox::unit(2), [](const Vec3& p) {
    return p.x() * p.x() + p.y() * p.y() - 0.25;
  });
  const auto soup = marching_squares(g);
  for (const auto& v : soup.vertices) {
    EXPECT_LT(std::abs(v.norm() - 0.5), 2 * g.cell_diagonal());
  }
  EXPECT_NEAR(soup.length(), std::numbers::pi, 0.02 * std::numbers::pi);
  // Closed: every vertex starts exactly one segment and ends one.
  std::vector<int> starts(soup.vertices.size()), ends(soup.vertices.size());
  for (const auto& s : soup.segments) {
    ++starts[s[0]];
    ++ends[s[1]];
  }
  for (std::size_t i = 0; i < starts.size(); ++i) {
    EXPECT_EQ(starts[i], 1);
    EXPECT_EQ(ends[i], 1);
  }
}

TEST(MarchingSquares, EmptyAndSaddle) {
  const auto pos = sample_function(2, 17, BBox::unit(2), [](const Vec3&) { return 1.0; });
  EXPECT_TRUE(marching_squares(pos).segments.empty());
  // Saddle f = xy + t: the center sign decides which diagonal pair connects.
  for (double t : {0.05, -0.05}) {
    const auto g = sample_function(2, 2, BBox::unit(2),
                                   [t](const Vec3& p) { return p.x() * p.y() + t; });
    const auto soup = marching_squares(g);
    ASSERT_EQ(soup.segments.size(), 2u);
    for (const auto& s : soup.segments) {
      const Vec3 mid = 0.5 * (soup.vertices[s[0]] + soup.vertices[s[1]]);
      // The segments cut off the corners whose sign differs from the center.
      EXPECT_GT(mid.norm(), 0.5);
      const Vec3 d = soup.vertices[s[1]] - soup.vertices[s[0]];
      const Vec3 left(-d.y(), d.x(), 0);
      const Vec3 corner(mid.x() > 0 ? 1.0 : -1.0, mid.y() > 0 ? 1.0 : -1.0, 0.0);
      const double fc = corner.x() * corner.y() + t;
      EXPECT_NE(fc > 0.0, t > 0.0);
      // The positive side is on the left.
      EXPECT_EQ((corner - mid).dot(left) > 0.0, fc > 0.0);
    }
  }
}

TEST(MarchingCubes, PlaneField) {
  const auto g = sample_function(3, 17, BBox::unit(3), [](const Vec3& p) { return p.z() - 0.1; });
  const auto mesh = marching_cubes(g);
  ASSERT_FALSE(mesh.empty());
  for (const auto& v : mesh.vertices) EXPECT_NEAR(v.z(), 0.1, 1e-10);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    EXPECT_GT(mesh.triangle_normal(t).z(), 0.99);
  }
  EXPECT_NEAR(mesh.area(), 4.0, 1e-9);
}

TEST(MarchingCubes, SphereAreaAndTopology) {
  const double r = 0.6;
  const auto g = sample_function(3, 128, BBox::unit(3),
                                 [r](const Vec3& p) { return p.norm() - r; });
  const auto mesh = marching_cubes(g);
  EXPECT_NEAR(mesh.area(), 4 * std::numbers::pi * r * r, 0.02 * 4 * std::numbers::pi * r * r);
  EXPECT_EQ(mesh.euler_characteristic(), 2);
  EXPECT_EQ(mesh.non_manifold_edges(), 0u);
  // Outward orientation: positive side is outside.
  for (std::size_t t = 0; t < mesh.triangles.size(); t += 97) {
    const Vec3 c = mesh.vertices[mesh.triangles[t][0]];
    EXPECT_GT(mesh.triangle_normal(t).dot(c), 0.0);
  }
}

TEST(MarchingCubes, TorusTopology) {
  const auto g = sample_function(3, 128, BBox::unit(3), [](const Vec3& p) {
    const double q = std::hypot(p.x(), p.y()) - 0.5;
    return std::sqrt(q * q + p.z() * p.z()) - 0.2;
  });
  const auto mesh = marching_cubes(g);
  EXPECT_EQ(mesh.euler_characteristic(), 0);
  EXPECT_EQ(mesh.non_manifold_edges(), 0u);
}

TEST(MarchingCubes, EmptyAndExactZeros) {
  const auto neg = sample_function(3, 9, BBox::unit(3), [](const Vec3&) { return -1.0; });
  EXPECT_TRUE(marching_cubes(neg).empty());
  // Nodes exactly on the surface are nudged, the result stays closed.
  const auto g = sample_function(3, 33, BBox::unit(3), [](const Vec3& p) {
    return std::max({std::abs(p.x()), std::abs(p.y()), std::abs(p.z())}) - 0.5;
  });
  const auto mesh = marching_cubes(g);
  EXPECT_EQ(mesh.euler_characteristic(), 2);
  EXPECT_EQ(mesh.non_manifold_edges(), 0u);
}

TEST(Chebyshev, UnitSquare) {
  const std::vector<Halfspace> hs{{Vec3(1, 0, 0), -0.5}, {Vec3(-1, 0, 0), -0.5},
                                  {Vec3(0, 1, 0), -0.5}, {Vec3(0, -1, 0), -0.5}};
  const auto r = chebyshev_center(hs, 2);
  ASSERT_EQ(r.status, LPStatus::Optimal);
  EXPECT_NEAR(r.y, 0.5, 1e-12);
  EXPECT_LT(r.x.norm(), 1e-12);
}

TEST(Chebyshev, InfeasibleAndUnbounded) {
  const std::vector<Halfspace> empty{{Vec3(1, 0, 0), 1.0}, {Vec3(-1, 0, 0), 1.0}};
  const auto r = chebyshev_center(empty, 2);
  EXPECT_TRUE(r.status == LPStatus::Infeasible || r.y < 0.0);
  const std::vector<Halfspace> half{{Vec3(1, 0, 0), 0.0}};
  EXPECT_EQ(chebyshev_center(half, 2).status, LPStatus::Unbounded);
}

TEST(Chebyshev, LexicographicTieBreak) {
  // A 4 x 1 strip: every center with y = 0 and |x| <= 1.5 is optimal.
  const std::vector<Halfspace> hs{{Vec3(1, 0, 0), -2}, {Vec3(-1, 0, 0), -2},
                                  {Vec3(0, 1, 0), -0.5}, {Vec3(0, -1, 0), -0.5}};
  const auto r = chebyshev_center(hs, 2);
  EXPECT_NEAR(r.y, 0.5, 1e-12);
  EXPECT_NEAR(r.x.x(), -1.5, 1e-9);
  EXPECT_NEAR(r.x.y(), 0.0, 1e-9);
}

TEST(Chebyshev, MatchesVertexEnumeration) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N;
  std::uniform_real_distribution<double> U(0.05, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Halfspace> hs;
    const Vec3 p = oracle::random_point(3, rng, 0.5);
    for (int j = 0; j < 10; ++j) {
      Vec3 u(N(rng), N(rng), N(rng));
      u *= 0.5 + U(rng);
      hs.push_back({u, -(u.dot(p) + U(rng))});
    }
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e[k] = 1.0;
      hs.push_back({e, -2.0});
      hs.push_back({-e, -2.0});
    }
    const auto r = chebyshev_center(hs, 3);
    ASSERT_EQ(r.status, LPStatus::Optimal);
    EXPECT_NEAR(r.y, vertex_enumeration_radius(hs), 1e-9) << "trial " << trial;
    for (const auto& h : hs) {
      EXPECT_LE(h.normal.dot(r.x) + r.y * h.normal.norm() + h.offset, 1e-9);
    }
  }
}

TEST(Tropical, Fig2TwoActiveRays) {
  const auto m = fig2_model();
  const auto cx = extract_tropical(m);
  ASSERT_EQ(cx.facets.size(), 2u);
  for (const auto& f : cx.facets) {
    EXPECT_EQ(f.plus_term, 2u);
    const Vec3 a = cx.vertices[f.vertices[0]], b = cx.vertices[f.vertices[1]];
    const bool vertical = std::abs(a.x() - 0.01) < 1e-12 && std::abs(b.x() - 0.01) < 1e-12;
    const bool horizontal = std::abs(a.y() - 0.01) < 1e-12 && std::abs(b.y() - 0.01) < 1e-12;
    EXPECT_TRUE(vertical || horizontal);
    // Both rays run from the apex (0.01, 0.01) to the box boundary.
    EXPECT_NEAR((a - b).norm(), 1.51, 1e-9);
  }
}

TEST(Tropical, DodecahedronHasTwelvePentagons) {
  const auto cx = extract_tropical(dodecahedron_model(0.7));
  ASSERT_EQ(cx.facets.size(), 12u);
  for (const auto& f : cx.facets) EXPECT_EQ(f.vertices.size(), 5u);
  EXPECT_EQ(cx.vertices.size(), 20u);
  const auto poly = cx.polygons();
  EXPECT_EQ(poly.euler_characteristic(), 2);
  const auto tri = poly.triangulate();
  EXPECT_EQ(tri.non_manifold_edges(), 0u);
  for (std::size_t t = 0; t < tri.triangles.size(); ++t) {
    const Vec3 c = tri.vertices[tri.triangles[t][0]];
    EXPECT_GT(tri.triangle_normal(t).dot(c), 0.0);  // normals face outward (f > 0)
  }
}

TEST(Tropical, AppendixADegenerateModel) {
  PatchworkModel m;
  m.dim = 2;
  LinearTerm l1, l2, l3, l4;
  l1.a = Vec3(1, 0, 0);
  l2.a = Vec3(0, 1, 0);
  l3.c = 1.0;
  l4.a = Vec3(1.0 / 3, 1.0 / 3, 0);
  l4.c = 1.0 / 3;
  l4.group = Group::Minus;
  m.terms = {l1, l2, l3, l4};
  const auto cx = extract_tropical(m);
  EXPECT_TRUE(cx.facets.empty());
  ASSERT_GE(cx.degeneracy_count, 1u);
  EXPECT_LT((cx.degeneracies[0].point - Vec3(1, 1, 0)).norm(), 1e-6);
}

TEST(Tropical, FacetInvariantsOnRandomModels) {
  std::mt19937_64 rng(3);
  for (int dim : {2, 3}) {
    for (int trial = 0; trial < 4; ++trial) {
      auto m = oracle::random_model(dim, 12, rng);
      const auto cx = extract_tropical(m);
      for (const auto& f : cx.facets) {
        EXPECT_NE(m.terms[f.minus_term].group, m.terms[f.plus_term].group);
        Vec3 p = Vec3::Zero();
        for (auto v : f.vertices) {
          p += cx.vertices[v];
          // Vertices lie on the facet's equality plane.
          EXPECT_NEAR(m.terms[f.minus_term].eval(cx.vertices[v]),
                      m.terms[f.plus_term].eval(cx.vertices[v]), 1e-8);
        }
        p /= static_cast<double>(f.vertices.size());
        double best = -1e300;
        for (const auto& t : m.terms) best = std::max(best, t.eval(p));
        EXPECT_NEAR(m.terms[f.minus_term].eval(p), best, 1e-8);
        EXPECT_NEAR(m.terms[f.plus_term].eval(p), best, 1e-8);
        EXPECT_NEAR(eval_tropical(m, p), 0.0, 1e-8);
        // Orientation: the positive side is to the left / along the normal.
        Vec3 nrm;
        if (dim == 2) {
          const Vec3 d = cx.vertices[f.vertices[1]] - cx.vertices[f.vertices[0]];
          nrm = Vec3(-d.y(), d.x(), 0);
        } else {
          const Vec3 a = cx.vertices[f.vertices[0]];
          nrm = (cx.vertices[f.vertices[1]] - a).cross(cx.vertices[f.vertices[2]] - a);
        }
        const Vec3 grad = m.terms[f.plus_term].a - m.terms[f.minus_term].a;
        EXPECT_GT(nrm.dot(grad), 0.0);
      }
    }
  }
}

TEST(Tropical, CrossValidatesWithMarchingSquares) {
  std::mt19937_64 rng(4);
  int checked = 0;
  while (checked < 3) {
    const auto m = general_position_2d(rng, 10, 2000.0);
    const auto trop = clip_to_box(densify_segments(extract_tropical(m).segments(), 5e-4), 1.0);
    const auto grid = sample_grid(m, 512, BBox::unit(2));
    const auto ms = densify_segments(marching_squares(grid), 5e-4);
    if (trop.size() < 100 || ms.size() < 100) continue;
    EXPECT_LT(hausdorff(trop, ms), 2 * grid.spacing().x());
    ++checked;
  }
}
