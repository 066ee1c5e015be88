#include "oracles.hpp"
#include "patchwork/error.hpp"
#include "patchwork/mesh.hpp"
#include "patchwork/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace patchwork;

namespace {

PointList random_cloud(std::mt19937_64& rng, std::size_t n, double spread = 1.0) {
  PointList out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(oracle::random_point(3, rng, spread));
  return out;
}

}  // namespace

TEST(SampleMesh, SingleTriangle) {
  TriangleMesh t;
  t.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  t.triangles = {{0, 1, 2}};
  std::mt19937_64 rng(1);
  const auto s = sample_mesh_surface(t, 1000, rng);
  ASSERT_EQ(s.size(), 1000u);
  for (std::size_t j = 0; j < s.size(); ++j) {
    const Vec3& p = s.points[j];
    EXPECT_GE(p.x(), -1e-15);
    EXPECT_GE(p.y(), -1e-15);
    EXPECT_LE(p.x() + p.y(), 1.0 + 1e-15);
    EXPECT_EQ(p.z(), 0.0);
    EXPECT_EQ(s.normals[j], Vec3(0, 0, 1));
  }
}

TEST(SampleMesh, CubeFacesEvenlyHit) {
  const auto cube = make_cube(1.0);
  std::mt19937_64 rng(2);
  const std::size_t n = 60000;
  const auto s = sample_mesh_surface(cube, n, rng);
  std::array<int, 6> count{};
  for (const auto& nrm : s.normals) {
    for (int k = 0; k < 3; ++k) {
      if (std::abs(nrm[k]) > 0.5) ++count[static_cast<std::size_t>(2 * k + (nrm[k] > 0 ? 1 : 0))];
    }
  }
  const double p = 1.0 / 6.0;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (int c : count) EXPECT_LT(std::abs(c - n * p), 3 * sigma);
}

TEST(SampleMesh, SeededAndDegenerate) {
  const auto sphere = make_icosphere(1.0, 2);
  std::mt19937_64 a(3), b(3);
  EXPECT_EQ(sample_mesh_surface(sphere, 500, a).points, sample_mesh_surface(sphere, 500, b).points);
  TriangleMesh flat;
  flat.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  flat.triangles = {{0, 1, 2}};
  try {
    sample_mesh_surface(flat, 10, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateMesh);
  }
}

TEST(SampleSegments, NormalsAreLeftPerpendiculars) {
  SegmentSoup s;
  s.vertices = {Vec3(0, 0, 0), Vec3(2, 0, 0)};
  s.segments = {{0, 1}};
  std::mt19937_64 rng(4);
  const auto out = sample_segments(s, 50, rng);
  EXPECT_EQ(out.dim, 2);
  for (std::size_t j = 0; j < out.size(); ++j) {
    EXPECT_EQ(out.points[j].y(), 0.0);
    EXPECT_EQ(out.normals[j], Vec3(0, 1, 0));
  }
  const auto dense = densify_segments(s, 0.1);
  EXPECT_GE(dense.size(), 21u);
  EXPECT_EQ(dense.front(), Vec3(0, 0, 0));
}

TEST(Chamfer, Examples) {
  std::mt19937_64 rng(5);
  const auto a = random_cloud(rng, 300);
  EXPECT_EQ(chamfer(a, a), 0.0);
  const PointList zero{Vec3::Zero()}, one{Vec3(1, 0, 0)};
  EXPECT_EQ(chamfer(zero, one), 1.0);
}

TEST(Hausdorff, Examples) {
  std::mt19937_64 rng(6);
  auto a = random_cloud(rng, 300, 0.5);
  EXPECT_EQ(hausdorff(a, a), 0.0);
  auto b = a;
  b.push_back(Vec3(5.0, 0, 0) + a[0]);
  // The outlier is 5 away from a[0] and farther from everything else.
  const double expected = oracle::nearest(b.back(), a);
  EXPECT_EQ(hausdorff(a, b), expected);
  const PointList p{Vec3::Zero()}, q{Vec3(0, 5, 0)};
  EXPECT_EQ(hausdorff(p, q), 5.0);
}

TEST(Fscore, Examples) {
  std::mt19937_64 rng(7);
  const auto a = random_cloud(rng, 300);
  EXPECT_EQ(fscore(a, a, 1e-3), 100.0);
  PointList far;
  for (const auto& p : a) far.push_back(p + Vec3(10, 0, 0));
  EXPECT_EQ(fscore(a, far, 1e-3), 0.0);
  // Half of b coincides with a, the other half is far away.
  PointList b(a.begin(), a.begin() + 150);
  for (std::size_t i = 150; i < 300; ++i) b.push_back(a[i] + Vec3(10, 0, 0));
  EXPECT_NEAR(fscore(a, b, 1e-3), oracle::brute_fscore(a, b, 1e-3), 1e-12);
  EXPECT_THROW(fscore(a, b, 0.0), Error);
}

TEST(Metrics, MatchBruteForce) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_cloud(rng, 500);
    auto b = random_cloud(rng, 500, 0.8);
    const double cutoff = 0.05 + 0.1 * trial / 20.0;
    EXPECT_NEAR(chamfer(a, b), oracle::brute_chamfer(a, b), 1e-12);
    EXPECT_NEAR(hausdorff(a, b), oracle::brute_hausdorff(a, b), 1e-12);
    EXPECT_NEAR(fscore(a, b, cutoff), oracle::brute_fscore(a, b, cutoff), 1e-12);
  }
}

TEST(Metrics, SymmetryScaleAndOrdering) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_cloud(rng, 400);
    const auto b = random_cloud(rng, 250, 0.6);
    EXPECT_EQ(chamfer(a, b), chamfer(b, a));
    EXPECT_EQ(hausdorff(a, b), hausdorff(b, a));
    EXPECT_LE(chamfer(a, b), hausdorff(a, b));
    const double t = 3.7;
    PointList as, bs;
    for (const auto& p : a) as.push_back(t * p);
    for (const auto& p : b) bs.push_back(t * p);
    EXPECT_NEAR(chamfer(as, bs), t * chamfer(a, b), 1e-12);
    EXPECT_NEAR(hausdorff(as, bs), t * hausdorff(a, b), 1e-12);
  }
}

TEST(Metrics, NearestIndexHandlesClustersAndOutliers) {
  std::mt19937_64 rng(10);
  PointList pts = random_cloud(rng, 2000, 0.01);
  pts.push_back(Vec3(50, -20, 3));
  const NearestIndex index(pts);
  for (int k = 0; k < 200; ++k) {
    const Vec3 q = oracle::random_point(3, rng, 60.0);
    EXPECT_EQ(index.distance(q), oracle::nearest(q, pts));
  }
}

TEST(Metrics, CompareMeshesSamplesBothMeshesFromOneSeed) {
  const auto sphere = make_icosphere(0.7, 3);
  const auto cube = make_cube(0.5);
  const auto rep = compare_meshes(sphere, cube, 5000, 11);
  std::mt19937_64 rng(11), rng_b(11);
  const auto a = sample_mesh_surface(sphere, 5000, rng);
  const auto b = sample_mesh_surface(cube, 5000, rng_b);
  EXPECT_EQ(rep.chamfer, oracle::brute_chamfer(a.points, b.points));
  EXPECT_EQ(rep.hausdorff, oracle::brute_hausdorff(a.points, b.points));
  EXPECT_EQ(rep.sample_count, 5000u);
  EXPECT_EQ(rep.seed, 11u);
  EXPECT_NEAR(rep.cutoff, 1e-3 * sphere.bbox().extent().maxCoeff(), 1e-15);
  const auto again = compare_meshes(sphere, cube, 5000, 11);
  EXPECT_EQ(again.chamfer, rep.chamfer);
  EXPECT_EQ(again.fscore, rep.fscore);
  const auto self = compare_meshes(sphere, sphere, 20000, 3);
  EXPECT_EQ(self.chamfer, 0.0);
  EXPECT_EQ(self.hausdorff, 0.0);
  EXPECT_EQ(self.fscore, 100.0);
  const auto empty = compare_meshes(sphere, TriangleMesh{}, 100, 1);
  EXPECT_TRUE(std::isinf(empty.chamfer));
  EXPECT_EQ(empty.fscore, 0.0);
}
