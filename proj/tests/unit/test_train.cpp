#include "oracles.hpp"
#include "patchwork/error.hpp"
#include "patchwork/init.hpp"
#include "patchwork/mesh.hpp"
#include "patchwork/metrics.hpp"
#include "patchwork/train.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace patchwork;

namespace {

PatchworkModel constant_model(double value, int dim = 3) {
  PatchworkModel m;
  m.dim = dim;
  LinearTerm p, q;
  p.c = value;
  q.group = Group::Minus;
  m.terms = {p, q};
  return m;
}

// F(x) = <a, x> exactly: one Plus slope term and one Minus constant.
PatchworkModel linear_model(const Vec3& a) {
  PatchworkModel m;
  m.dim = 3;
  LinearTerm p, q;
  p.a = a;
  q.group = Group::Minus;
  m.terms = {p, q};
  return m;
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double dense_occupancy(const PatchworkModel& m, const PointList& pts) {
  double sum = 0.0;
  for (const auto& y : pts) {
    const double p = sigmoid(-oracle::dense_eval(m, y).value);
    const double d = p - 0.5;
    const double g = 4 * d * d - 4 * std::abs(d) + 1;
    sum += g * g;
  }
  return sum / static_cast<double>(pts.size());
}

double rel_err(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

OrientedSampleSet sphere_samples(std::size_t m, double r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto s = sample_mesh_surface(make_icosphere(r, 4), m, rng);
  s.source = "sphere";
  return s;
}

}  // namespace

TEST(LossSurface, ConstantField) {
  const auto m = constant_model(0.5);
  const PointList pts{Vec3(0.1, 0.2, 0.3), Vec3(-0.5, 0.9, 0), Vec3::Zero()};
  EXPECT_NEAR(loss_surface(m, pts), 0.5, 1e-15);
}

TEST(LossSurface, MatchesDenseOracle) {
  std::mt19937_64 rng(1);
  const auto m = oracle::random_model(3, 24, rng);
  PointList pts;
  for (int k = 0; k < 300; ++k) pts.push_back(oracle::random_point(3, rng));
  double ref = 0.0;
  for (const auto& x : pts) ref += std::abs(oracle::dense_eval(m, x).value);
  ref /= static_cast<double>(pts.size());
  EXPECT_NEAR(loss_surface(m, pts), ref, 1e-10);
}

TEST(LossSurface, GeometricInitVanishesAtSamples) {
  const auto s = sphere_samples(512, 0.7, 2);
  const auto m = geometric_init(s);
  EXPECT_LT(loss_surface(m, s.points, EvalMode::Tropical), 1e-9);
  EXPECT_LT(loss_normal(m, s.points, s.normals, EvalMode::Tropical), 1e-6);
}

TEST(LossNormal, ParallelAndAntiparallel) {
  const Vec3 a(0.3, -0.4, 1.2);
  const auto m = linear_model(a);
  const PointList pts{Vec3(0.1, 0.2, 0.3), Vec3(-0.7, 0.1, 0.5)};
  const PointList same(2, a.normalized());
  const PointList flip(2, -a.normalized());
  EXPECT_NEAR(loss_normal(m, pts, same), 0.0, 1e-14);
  EXPECT_NEAR(loss_normal(m, pts, flip), 2.0, 1e-14);
}

TEST(LossNormal, DegenerateGradient) {
  const auto m = constant_model(0.2);
  const PointList pts{Vec3(0.1, 0.2, 0.3)};
  const PointList n{Vec3::UnitZ()};
  try {
    loss_normal(m, pts, n);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGradient);
  }
}

TEST(LossNormal, MatchesDenseOracleAndRange) {
  std::mt19937_64 rng(3);
  const auto m = oracle::random_model(3, 16, rng);
  PointList pts, ns;
  for (int k = 0; k < 200; ++k) {
    pts.push_back(oracle::random_point(3, rng));
    ns.push_back(oracle::random_point(3, rng).normalized());
  }
  double ref = 0.0;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const Vec3 g = oracle::dense_eval(m, pts[j]).grad;
    ref += 1.0 - g.dot(ns[j]) / g.norm();
  }
  ref /= static_cast<double>(pts.size());
  const double v = loss_normal(m, pts, ns);
  EXPECT_NEAR(v, ref, 1e-10);
  EXPECT_GE(v, 0.0);
  EXPECT_LE(v, 2.0);
}

TEST(LossOccupancy, DoubleWellValues) {
  EXPECT_EQ(double_well(0.5), 1.0);
  EXPECT_EQ(double_well(0.0), 0.0);
  EXPECT_EQ(double_well(1.0), 0.0);
  const PointList pts{Vec3(0.1, 0.2, 0.3)};
  EXPECT_NEAR(loss_occupancy(constant_model(0.0), pts), 1.0, 1e-15);
  EXPECT_NEAR(loss_occupancy(constant_model(800.0), pts), 0.0, 1e-15);
  EXPECT_NEAR(loss_occupancy(constant_model(-800.0), pts), 0.0, 1e-15);
}

TEST(LossOccupancy, MatchesDenseOracle) {
  std::mt19937_64 rng(4);
  const auto m = oracle::random_model(2, 20, rng, 3.0);
  PointList pts;
  for (int k = 0; k < 300; ++k) pts.push_back(oracle::random_point(2, rng));
  const double v = loss_occupancy(m, pts);
  EXPECT_NEAR(v, dense_occupancy(m, pts), 1e-10);
  EXPECT_GE(v, 0.0);
  EXPECT_LE(v, 1.0);
}

TEST(LossPrune, UnitWeightsConcentrated) {
  const auto m = linear_model(Vec3(1, 0, 0));
  const PointList pts{Vec3(0.1, 0.2, 0.3), Vec3::Zero()};
  EXPECT_NEAR(loss_prune(m, pts), 2.0, 1e-15);
  EXPECT_NEAR(loss_prune(m, pts, m), 2.0, 1e-15);
}

TEST(LossPrune, TinyWeights) {
  std::mt19937_64 rng(5);
  auto m = oracle::random_model(3, 10, rng);
  for (auto& t : m.terms) t.log_s = std::log(1e-5);
  PointList pts;
  for (int k = 0; k < 50; ++k) pts.push_back(oracle::random_point(3, rng));
  // First terms are 1e-5 each, the ReLU terms are 1 - 1e-5 each.
  EXPECT_NEAR(loss_prune(m, pts), 2.0, 1e-9);
  EXPECT_NEAR(loss_prune(m, pts), loss_prune(m, pts, m), 1e-12);
}

TEST(LossPrune, DisabledTermsLeaveFirstTerm) {
  auto m = linear_model(Vec3(1, 0, 0));
  LinearTerm extra;
  extra.active = false;
  extra.log_s = std::log(kDisabledWeight);
  m.terms.push_back(extra);
  const PointList pts{Vec3(0.1, 0.2, 0.3)};
  EXPECT_NEAR(loss_prune(m, pts), 2.0, 1e-15);
}

TEST(LossPrune, LogWeightGradientWithFrozenAttribution) {
  std::mt19937_64 rng(6);
  const auto m = oracle::random_model(3, 12, rng, 8.0);
  PointList pts;
  for (int k = 0; k < 40; ++k) pts.push_back(oracle::random_point(3, rng));
  std::vector<double> grad;
  evaluate_losses(m, pts, {}, {}, LossToggles{false, false, false, true}, &grad);
  const double h = 1e-6;
  for (std::size_t i = 0; i < m.terms.size(); ++i) {
    PatchworkModel p = m, q = m;
    p.terms[i].log_s += h;
    q.terms[i].log_s -= h;
    const double fd = (loss_prune(p, pts, m) - loss_prune(q, pts, m)) / (2 * h);
    EXPECT_LT(rel_err(grad[kParamStride * i + 4], fd, 1e-6), 1e-4) << "term " << i;
  }
}

TEST(TotalLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  int models = 0;
  for (int dim : {2, 3}) {
    for (std::size_t n : {8u, 32u}) {
      for (bool wn : {false, true}) {
        const auto m = oracle::random_model(dim, n, rng, 4.0, wn);
        PointList surf, norms, off;
        for (int k = 0; k < 16; ++k) {
          surf.push_back(oracle::random_point(dim, rng));
          norms.push_back(oracle::random_point(dim, rng).normalized());
          off.push_back(oracle::random_point(dim, rng));
        }
        const LossToggles smooth{true, true, true, false};
        std::vector<double> grad;
        evaluate_losses(m, surf, norms, off, LossToggles{}, &grad);
        auto total = [&](const PatchworkModel& mm) {
          return evaluate_losses(mm, surf, norms, off, smooth).total +
                 loss_prune(mm, surf, m);
        };
        const auto base = pack_parameters(m);
        const double h = 1e-6;
        for (std::size_t i = 0; i < m.terms.size(); ++i) {
          for (std::size_t k = 0; k < kParamStride; ++k) {
            if (k < 3 && k >= static_cast<std::size_t>(dim)) continue;
            if (k == 5 && !wn) continue;
            auto p = base, q = base;
            p[kParamStride * i + k] += h;
            q[kParamStride * i + k] -= h;
            PatchworkModel mp = m, mq = m;
            unpack_parameters(mp, p);
            unpack_parameters(mq, q);
            const double fd = (total(mp) - total(mq)) / (2 * h);
            EXPECT_LT(rel_err(grad[kParamStride * i + k], fd, 1e-5), 1e-3)
                << "dim " << dim << " n " << n << " wn " << wn << " term " << i
                << " slot " << k;
          }
        }
        ++models;
      }
    }
  }
  EXPECT_EQ(models, 8);
}

TEST(TotalLoss, BlockReductionIsDeterministic) {
  std::mt19937_64 rng(8);
  const auto m = oracle::random_model(3, 64, rng);
  PointList surf, norms, off;
  for (int k = 0; k < 777; ++k) {
    surf.push_back(oracle::random_point(3, rng));
    norms.push_back(oracle::random_point(3, rng).normalized());
    off.push_back(oracle::random_point(3, rng));
  }
  std::vector<double> g1, g2;
  const auto a = evaluate_losses(m, surf, norms, off, LossToggles{}, &g1);
  const auto b = evaluate_losses(m, surf, norms, off, LossToggles{}, &g2);
  EXPECT_EQ(a.total, b.total);
  EXPECT_EQ(g1, g2);
}

TEST(OffSurface, SeededUniformInBox) {
  const BBox box = BBox::unit(3);
  std::mt19937_64 r1(9), r2(9);
  const auto a = sample_off_surface(box, 3, 16384, r1);
  const auto b = sample_off_surface(box, 3, 16384, r2);
  EXPECT_EQ(a, b);
  Vec3 mean = Vec3::Zero();
  for (const auto& p : a) {
    EXPECT_TRUE((p.array() >= -1.0).all() && (p.array() <= 1.0).all());
    mean += p;
  }
  mean /= 16384.0;
  const double sigma = std::sqrt(1.0 / 3.0 / 16384.0);
  for (int k = 0; k < 3; ++k) EXPECT_LT(std::abs(mean[k]), 3 * sigma);
  std::mt19937_64 r3(9);
  for (const auto& p : sample_off_surface(BBox::unit(2), 2, 100, r3)) EXPECT_EQ(p.z(), 0.0);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.0, -2.0, 3.0}, g(3, 0.0);
  AdamState st(3, 0.9, 0.999, 1e-8);
  for (int k = 0; k < 10; ++k) ASSERT_TRUE(adam_update(p, g, st, 1e-3));
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));
}

TEST(Adam, FirstStepIsLearningRate) {
  std::vector<double> p{0.0, 0.0}, g{3.7, -1e-3};
  AdamState st(2, 0.9, 0.999, 1e-8);
  adam_update(p, g, st, 1e-3);
  EXPECT_NEAR(p[0], -1e-3, 1e-9);
  EXPECT_NEAR(p[1], 1e-3, 1e-8);
}

TEST(Adam, QuadraticToyConverges) {
  // minimize (x - 2.5)^2
  std::vector<double> p{0.0}, g(1);
  AdamState st(1, 0.9, 0.999, 1e-8);
  for (int k = 0; k < 5000; ++k) {
    g[0] = 2.0 * (p[0] - 2.5);
    adam_update(p, g, st, 1e-2);
  }
  EXPECT_NEAR(p[0], 2.5, 1e-6);
}

TEST(Adam, NonFiniteGradientSkipsStep) {
  std::mt19937_64 rng(10);
  auto m = oracle::random_model(3, 4, rng, 10.0, true);
  const auto before = pack_parameters(m);
  AdamState st(before.size(), 0.9, 0.999, 1e-8);
  std::vector<double> g(before.size(), 0.1);
  g[3] = std::nan("");
  EXPECT_FALSE(adam_step(m, g, st, 1e-3));
  EXPECT_EQ(pack_parameters(m), before);
  EXPECT_EQ(st.step, 0);
}

TEST(Adam, MaskedTermsStayFixed) {
  std::mt19937_64 rng(11);
  auto m = oracle::random_model(2, 4, rng, 10.0, true);
  m.terms[1].active = false;
  const auto before = m;
  AdamState st(kParamStride * 4, 0.9, 0.999, 1e-8);
  std::vector<double> g(kParamStride * 4, 1.0);
  ASSERT_TRUE(adam_step(m, g, st, 1e-3));
  EXPECT_EQ(m.terms[1].c, before.terms[1].c);
  EXPECT_EQ(m.terms[1].v, before.terms[1].v);
  EXPECT_EQ(m.terms[0].v.z(), 0.0);  // 2D models never gain a z slope
  EXPECT_NE(m.terms[0].c, before.terms[0].c);
  EXPECT_EQ(m.beta_plus, before.beta_plus);
}

TEST(Prune, Examples) {
  std::mt19937_64 rng(12);
  auto m = oracle::random_model(3, 6, rng);
  for (auto& t : m.terms) t.log_s = 0.0;
  EXPECT_EQ(prune_pass(m, 1e-2, 1e-5), 0u);
  m.terms[3].log_s = std::log(1e-3);
  EXPECT_EQ(prune_pass(m, 1e-2, 1e-5), 1u);
  EXPECT_FALSE(m.terms[3].active);
  EXPECT_NEAR(m.terms[3].s(), 1e-5, 1e-20);
  for (std::size_t i = 0; i < m.terms.size(); ++i) {
    if (i != 3) {
      EXPECT_TRUE(m.terms[i].active);
    }
  }
  EXPECT_EQ(prune_pass(m, 1e-2, 1e-5), 0u);
}

TEST(Prune, KeepsLastActiveTermOfGroup) {
  std::mt19937_64 rng(13);
  auto m = oracle::random_model(2, 6, rng);
  for (auto& t : m.terms) t.log_s = std::log(1e-4);
  EXPECT_EQ(prune_pass(m, 1e-2, 1e-5), 4u);
  EXPECT_EQ(m.active_count(Group::Plus), 1u);
  EXPECT_EQ(m.active_count(Group::Minus), 1u);
}

TEST(Fit, AllLossesOffReturnsInitModel) {
  const auto s = sphere_samples(128, 0.6, 14);
  FitConfig cfg;
  cfg.iterations = 20;
  cfg.losses = LossToggles{false, false, false, false};
  cfg.pruning = false;
  const auto r = fit(s, cfg);
  const auto init = geometric_init(s);
  ASSERT_EQ(r.model.terms.size(), init.terms.size());
  for (std::size_t i = 0; i < init.terms.size(); ++i) {
    EXPECT_EQ(r.model.terms[i].a, init.terms[i].a);
    EXPECT_EQ(r.model.terms[i].c, init.terms[i].c);
    EXPECT_EQ(r.model.terms[i].log_s, init.terms[i].log_s);
  }
}

TEST(Fit, SeededRunsAreBitwiseIdentical) {
  const auto s = sphere_samples(256, 0.6, 15);
  FitConfig cfg;
  cfg.iterations = 60;
  cfg.batch_size = 100;
  cfg.prune_interval = 20;
  cfg.seed = 42;
  const auto a = fit(s, cfg);
  const auto b = fit(s, cfg);
  EXPECT_EQ(a.report.to_csv(), b.report.to_csv());
  for (std::size_t i = 0; i < a.model.terms.size(); ++i) {
    EXPECT_EQ(a.model.terms[i].a, b.model.terms[i].a);
    EXPECT_EQ(a.model.terms[i].log_s, b.model.terms[i].log_s);
  }
  cfg.seed = 43;
  EXPECT_NE(fit(s, cfg).report.to_csv(), a.report.to_csv());
}

TEST(Fit, ActiveCountNeverIncreases) {
  const auto s = sphere_samples(256, 0.6, 16);
  FitConfig cfg;
  cfg.iterations = 600;
  cfg.learning_rate = 1e-2;
  cfg.prune_interval = 100;
  const auto r = fit(s, cfg);
  for (std::size_t k = 1; k < r.report.trace.size(); ++k) {
    EXPECT_LE(r.report.trace[k].active_terms, r.report.trace[k - 1].active_terms);
  }
  EXPECT_EQ(r.report.final_active_terms, r.model.active_count());
  EXPECT_EQ(r.report.initial_parameter_count(), 4u * 512u);
  EXPECT_EQ(r.report.final_parameter_count(), 4u * r.model.active_count() + 2u);
}

TEST(Fit, NoPruneKeepsEveryTerm) {
  const auto s = sphere_samples(128, 0.6, 17);
  FitConfig cfg;
  cfg.iterations = 300;
  cfg.prune_interval = 50;
  cfg.learning_rate = 1e-2;
  cfg.pruning = false;
  const auto r = fit(s, cfg);
  for (const auto& rec : r.report.trace) {
    EXPECT_EQ(rec.active_terms, 256u);
    EXPECT_EQ(rec.prune, 0.0);
  }
}

TEST(Fit, DuplicatePlanesArePruned) {
  // Cube of half width 0.5 as max of six planes, every plane (and the Minus
  // constant) stored twice with slightly different weights.
  PatchworkModel m;
  m.dim = 3;
  m.beta_plus = m.beta_minus = 75.0;
  const Vec3 dirs[6] = {Vec3::UnitX(), -Vec3::UnitX(), Vec3::UnitY(),
                        -Vec3::UnitY(), Vec3::UnitZ(), -Vec3::UnitZ()};
  for (const auto& d : dirs) {
    for (double s : {1.0, 0.6}) {
      LinearTerm t;
      t.a = d;
      t.c = -0.5;
      t.log_s = std::log(s);
      m.terms.push_back(t);
    }
  }
  for (double s : {1.0, 0.6}) {
    LinearTerm t;
    t.group = Group::Minus;
    t.log_s = std::log(s);
    m.terms.push_back(t);
  }
  m.enable_weightnorm();
  std::mt19937_64 rng(18);
  const auto samples = sample_mesh_surface(make_cube(0.5), 2048, rng);
  FitConfig cfg;
  cfg.iterations = 3000;
  cfg.batch_size = 1024;
  cfg.learning_rate = 1e-2;
  cfg.prune_interval = 500;
  const auto r = fit(samples, cfg, m);
  for (std::size_t pair = 0; pair < 7; ++pair) {
    const bool a = r.model.terms[2 * pair].active;
    const bool b = r.model.terms[2 * pair + 1].active;
    EXPECT_FALSE(a && b) << "pair " << pair << " kept both copies";
  }
}

TEST(Fit, RejectsBadConfig) {
  const auto s = sphere_samples(16, 0.6, 19);
  FitConfig cfg;
  cfg.learning_rate = -1;
  try {
    fit(s, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
  cfg = FitConfig{};
  cfg.prune_disable_value = 0.5;
  EXPECT_THROW(fit(s, cfg), Error);
}

TEST(WeightNorm, InitFieldIdenticalOnOrOff) {
  const auto s = sphere_samples(200, 0.6, 20);
  GeometricInitOptions a, b;
  b.weightnorm = false;
  const auto ma = geometric_init(s, a), mb = geometric_init(s, b);
  std::mt19937_64 rng(21);
  for (int k = 0; k < 50; ++k) {
    const Vec3 x = oracle::random_point(3, rng);
    EXPECT_NEAR(eval_field(ma, x).value, eval_field(mb, x).value, 1e-10);
  }
}
