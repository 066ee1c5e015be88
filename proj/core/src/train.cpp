#include "patchwork/train.hpp"

#include "kernels.hpp"
#include "patchwork/error.hpp"
#include "patchwork/parallel.hpp"

#include <spdlog/spdlog.h>

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

namespace patchwork {
namespace {

// Fixed number of point blocks; each owns its accumulators and blocks are
// reduced in index order.
constexpr std::size_t kBlocks = 16;
// Softmax weights below this fraction of the group total are skipped in the
// backward pass. The dropped mass is far below the loss tolerances.
constexpr double kWeightFloor = 1e-15;
constexpr double kGradFloor = 1e-12;
constexpr int kMaxConsecutiveSkips = 100;

using ArrayMap = Eigen::Map<const Eigen::ArrayXd>;

struct TrainGroup {
  const PackedGroup* packed = nullptr;
  AlignedVector s;
  double sign = 1.0;

  std::size_t size() const { return packed->size(); }
};

struct GroupForward {
  double lse = detail::kNegInf;
  double sum = 0.0;
  double weighted_s = 0.0;  // sum_i s_i w_i
  Vec3 grad = Vec3::Zero();
};

struct GroupAcc {
  std::vector<double> dc, dax, day, daz, dps;

  void reset(std::size_t n) {
    for (auto* v : {&dc, &dax, &day, &daz, &dps}) v->assign(n, 0.0);
  }
};

struct Block {
  GroupAcc acc[2];
  AlignedVector e[2];
  double surface = 0.0, normal = 0.0, occupancy = 0.0, prune = 0.0;
  std::size_t degenerate = 0;
};

struct Workspace {
  std::vector<Block> blocks = std::vector<Block>(kBlocks);
};

// Fills e with exp(z_i - zmax) and returns the group's LSE pieces.
GroupForward forward(const TrainGroup& tg, const Vec3& x, double* e, bool need_sw) {
  GroupForward out;
  const PackedGroup& g = *tg.packed;
  const auto n = static_cast<Eigen::Index>(g.size());
  if (n == 0) return out;
  ArrayMap ax(g.ax.data(), n), ay(g.ay.data(), n), az(g.az.data(), n),
      c(g.c.data(), n), ls(g.log_s.data(), n);
  Eigen::Map<Eigen::ArrayXd> z(e, n);
  z = g.beta * (ax * x.x() + ay * x.y() + az * x.z() + c) + ls;
  const double zmax = z.maxCoeff();
  z = (z - zmax).max(detail::kExpFloor).exp();
  out.sum = z.sum();
  out.grad = Vec3((z * ax).sum(), (z * ay).sum(), (z * az).sum()) / out.sum;
  if (need_sw) {
    out.weighted_s = (z * ArrayMap(tg.s.data(), n)).sum() / out.sum;
  }
  out.lse = zmax + std::log(out.sum);
  return out;
}

// Accumulates the parameter gradient of one point's loss given dL/dF,
// dL/d(grad F) = u and the prune-ReLU scale (0 when inactive).
void backward(const TrainGroup& tg, const GroupForward& fw, const Vec3& x,
              const double* e, double dldf, const Vec3& u, double prune_scale,
              GroupAcc& acc) {
  const PackedGroup& g = *tg.packed;
  const std::size_t n = g.size();
  const double inv = 1.0 / fw.sum;
  const double ug = u.dot(fw.grad);
  const double cutoff = kWeightFloor * fw.sum;
  const double beta = g.beta;
  const double sign = tg.sign;
  for (std::size_t i = 0; i < n; ++i) {
    if (e[i] < cutoff) continue;
    const double w = e[i] * inv;
    const double ua = u.x() * g.ax[i] + u.y() * g.ay[i] + u.z() * g.az[i];
    const double t = sign * w * (dldf + beta * (ua - ug));
    const double sw = sign * w;
    acc.dc[i] += t;
    acc.dax[i] += t * x.x() + sw * u.x();
    acc.day[i] += t * x.y() + sw * u.y();
    acc.daz[i] += t * x.z() + sw * u.z();
    if (prune_scale != 0.0) acc.dps[i] -= prune_scale * tg.s[i] * w;
  }
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double z = std::exp(t);
  return z / (1.0 + z);
}

double double_well_slope(double x) {
  const double d = x - 0.5;
  return 8.0 * d - 4.0 * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
}

LossBreakdown evaluate_impl(const PatchworkModel& model,
                            std::span<const Vec3> surface,
                            std::span<const Vec3> normals,
                            std::span<const Vec3> off_surface,
                            const LossToggles& toggles,
                            std::vector<double>* grad, Workspace& ws) {
  model.validate();
  if (toggles.normal && normals.size() != surface.size()) {
    raise(ErrorCode::InvalidArgument, "normals and surface batch differ in length");
  }
  const PackedModel packed(model);
  TrainGroup groups[2];
  groups[0].packed = &packed.plus;
  groups[1].packed = &packed.minus;
  groups[1].sign = -1.0;
  for (auto& tg : groups) {
    tg.s.resize(tg.size());
    for (std::size_t i = 0; i < tg.size(); ++i) tg.s[i] = std::exp(tg.packed->log_s[i]);
  }

  const bool need_surface = toggles.surface || toggles.normal || toggles.prune;
  const std::size_t ms = need_surface ? surface.size() : 0;
  const std::size_t mo = toggles.occupancy ? off_surface.size() : 0;
  const std::size_t total = ms + mo;
  const double inv_ms = ms > 0 ? 1.0 / static_cast<double>(ms) : 0.0;
  const double inv_mo = mo > 0 ? 1.0 / static_cast<double>(mo) : 0.0;
  const bool want_grad = grad != nullptr;

  parallel_blocks(kBlocks, [&](std::size_t b) {
    Block& blk = ws.blocks[b];
    blk.surface = blk.normal = blk.occupancy = blk.prune = 0.0;
    blk.degenerate = 0;
    for (int gi = 0; gi < 2; ++gi) {
      blk.e[gi].resize(groups[gi].size());
      if (want_grad) blk.acc[gi].reset(groups[gi].size());
    }
    const std::size_t begin = total * b / kBlocks;
    const std::size_t end = total * (b + 1) / kBlocks;
    for (std::size_t k = begin; k < end; ++k) {
      const bool on_surface = k < ms;
      const Vec3& x = on_surface ? surface[k] : off_surface[k - ms];
      const bool prune_here = on_surface && toggles.prune;
      GroupForward fw[2];
      for (int gi = 0; gi < 2; ++gi) {
        fw[gi] = forward(groups[gi], x, blk.e[gi].data(), prune_here);
      }
      const double F = fw[0].lse / packed.plus.beta - fw[1].lse / packed.minus.beta;
      const Vec3 gradF = fw[0].grad - fw[1].grad;

      double dldf = 0.0;
      Vec3 u = Vec3::Zero();
      double prune_scale[2] = {0.0, 0.0};
      if (on_surface) {
        if (toggles.surface) {
          blk.surface += std::abs(F) * inv_ms;
          dldf += (F > 0.0 ? 1.0 : (F < 0.0 ? -1.0 : 0.0)) * inv_ms;
        }
        if (toggles.normal) {
          const double gn = gradF.norm();
          if (gn < kGradFloor) {
            ++blk.degenerate;
          } else {
            const Vec3 nh = normals[k].normalized();
            const double cosv = gradF.dot(nh) / gn;
            blk.normal += (1.0 - cosv) * inv_ms;
            u = -inv_ms * (nh / gn - cosv * gradF / (gn * gn));
          }
        }
        if (prune_here) {
          for (int gi = 0; gi < 2; ++gi) {
            if (groups[gi].size() == 0) continue;
            const double r = 1.0 - fw[gi].weighted_s;
            if (r > 0.0) {
              blk.prune += r * inv_ms;
              prune_scale[gi] = inv_ms;
            }
          }
        }
      } else {
        const double p = sigmoid(-F);
        const double gd = double_well(p);
        blk.occupancy += gd * gd * inv_mo;
        dldf = inv_mo * 2.0 * gd * double_well_slope(p) * (-p * (1.0 - p));
      }

      if (!want_grad) continue;
      for (int gi = 0; gi < 2; ++gi) {
        if (groups[gi].size() == 0) continue;
        if (dldf == 0.0 && u.isZero(0.0) && prune_scale[gi] == 0.0) continue;
        backward(groups[gi], fw[gi], x, blk.e[gi].data(), dldf, u,
                 prune_scale[gi], blk.acc[gi]);
      }
    }
  });

  LossBreakdown out;
  for (const Block& blk : ws.blocks) {
    out.surface += blk.surface;
    out.normal += blk.normal;
    out.occupancy += blk.occupancy;
    out.prune += blk.prune;
    out.degenerate_normals += blk.degenerate;
  }
  if (toggles.prune) {
    for (const auto& tg : groups) {
      if (tg.size() == 0) continue;
      double sum = 0.0;
      for (double s : tg.s) sum += s;
      out.prune += sum / static_cast<double>(tg.size());
    }
  }
  out.total = out.surface + out.normal + out.occupancy + out.prune;

  if (want_grad) {
    grad->assign(kParamStride * model.terms.size(), 0.0);
    for (int gi = 0; gi < 2; ++gi) {
      const TrainGroup& tg = groups[gi];
      const std::size_t n = tg.size();
      const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        double dc = 0.0, dps = 0.0;
        Vec3 da = Vec3::Zero();
        for (const Block& blk : ws.blocks) {
          const GroupAcc& acc = blk.acc[gi];
          dc += acc.dc[p];
          dps += acc.dps[p];
          da += Vec3(acc.dax[p], acc.day[p], acc.daz[p]);
        }
        double dlogs = dc / tg.packed->beta + dps;
        if (toggles.prune) dlogs += tg.s[p] * inv_n;

        const std::size_t i = tg.packed->index[p];
        const LinearTerm& term = model.terms[i];
        double* slot = grad->data() + kParamStride * i;
        if (model.weightnorm) {
          const double vn = term.v.norm();
          const Vec3 unit = term.v / vn;
          const double dg = da.dot(unit);
          const Vec3 dv = (term.g / vn) * (da - unit * dg);
          slot[0] = dv.x();
          slot[1] = dv.y();
          slot[2] = dv.z();
          slot[5] = dg;
        } else {
          slot[0] = da.x();
          slot[1] = da.y();
          slot[2] = da.z();
        }
        slot[3] = dc;
        slot[4] = dlogs;
      }
    }
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void FitConfig::validate() const {
  auto fail = [](const std::string& what) { raise(ErrorCode::InvalidConfig, what); };
  if (iterations < 0) fail("iterations must be >= 0");
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must be in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
  if (prune_interval <= 0) fail("prune_interval must be positive");
  if (!(prune_threshold > 0.0)) fail("prune_threshold must be positive");
  if (!(prune_disable_value > 0.0 && prune_disable_value < prune_threshold)) {
    fail("prune_disable_value must be in (0, prune_threshold)");
  }
  if (!(rho > 0.0)) fail("rho must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) fail("beta must be positive");
}

std::size_t FitReport::initial_parameter_count() const {
  return static_cast<std::size_t>(dim + 1) * initial_terms;
}

std::size_t FitReport::final_parameter_count() const {
  return static_cast<std::size_t>(dim + 1) * final_active_terms + 2;
}

std::string FitReport::to_csv() const {
  std::string out =
      "iteration,surface,normal,occupancy,prune,total,active_terms,"
      "degenerate_normals,skipped\n";
  for (const auto& r : trace) {
    out += std::to_string(r.iteration) + ',' + fmt_double(r.surface) + ',' +
           fmt_double(r.normal) + ',' + fmt_double(r.occupancy) + ',' +
           fmt_double(r.prune) + ',' + fmt_double(r.total) + ',' +
           std::to_string(r.active_terms) + ',' +
           std::to_string(r.degenerate_normals) + ',' + (r.skipped ? "1" : "0") +
           '\n';
  }
  return out;
}

double double_well(double x) {
  const double d = x - 0.5;
  return 4.0 * d * d - 4.0 * std::abs(d) + 1.0;
}

LossBreakdown evaluate_losses(const PatchworkModel& model,
                              std::span<const Vec3> surface,
                              std::span<const Vec3> normals,
                              std::span<const Vec3> off_surface,
                              const LossToggles& toggles,
                              std::vector<double>* grad) {
  Workspace ws;
  return evaluate_impl(model, surface, normals, off_surface, toggles, grad, ws);
}

double loss_surface(const PatchworkModel& model, std::span<const Vec3> batch,
                    EvalMode mode) {
  if (batch.empty()) raise(ErrorCode::EmptyInput, "empty surface batch");
  if (mode == EvalMode::Tropical) {
    double sum = 0.0;
    for (const auto& x : batch) sum += std::abs(eval_tropical(model, x));
    return sum / static_cast<double>(batch.size());
  }
  LossToggles t{true, false, false, false};
  return evaluate_losses(model, batch, {}, {}, t).surface;
}

double loss_normal(const PatchworkModel& model, std::span<const Vec3> batch,
                   std::span<const Vec3> normals, EvalMode mode,
                   std::size_t* degenerate) {
  if (batch.empty()) raise(ErrorCode::EmptyInput, "empty surface batch");
  double value = 0.0;
  std::size_t bad = 0;
  if (mode == EvalMode::Tropical) {
    if (normals.size() != batch.size()) {
      raise(ErrorCode::InvalidArgument, "normals and batch differ in length");
    }
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const Vec3 g = tropical_gradient(model, batch[j]);
      const double gn = g.norm();
      if (gn < kGradFloor) {
        ++bad;
        continue;
      }
      value += 1.0 - g.dot(normals[j].normalized()) / gn;
    }
    value /= static_cast<double>(batch.size());
  } else {
    LossToggles t{false, true, false, false};
    const LossBreakdown lb = evaluate_losses(model, batch, normals, {}, t);
    value = lb.normal;
    bad = lb.degenerate_normals;
  }
  if (degenerate) *degenerate = bad;
  if (bad == batch.size()) {
    raise(ErrorCode::DegenerateGradient, "field gradient vanishes at every sample");
  }
  return value;
}

double loss_occupancy(const PatchworkModel& model, std::span<const Vec3> off_batch) {
  if (off_batch.empty()) raise(ErrorCode::EmptyInput, "empty off-surface batch");
  LossToggles t{false, false, true, false};
  return evaluate_losses(model, {}, {}, off_batch, t).occupancy;
}

double loss_prune(const PatchworkModel& model, std::span<const Vec3> batch) {
  if (batch.empty()) raise(ErrorCode::EmptyInput, "empty surface batch");
  LossToggles t{false, false, false, true};
  return evaluate_losses(model, batch, {}, {}, t).prune;
}

double loss_prune(const PatchworkModel& model, std::span<const Vec3> batch,
                  const PatchworkModel& attribution) {
  if (batch.empty()) raise(ErrorCode::EmptyInput, "empty surface batch");
  if (attribution.terms.size() != model.terms.size()) {
    raise(ErrorCode::InvalidArgument, "attribution model has a different term list");
  }
  model.validate();
  double value = 0.0;
  for (Group g : {Group::Plus, Group::Minus}) {
    const std::size_t n = model.active_count(g);
    if (n == 0) continue;
    double ssum = 0.0;
    for (const auto& t : model.terms) {
      if (t.active && t.group == g) ssum += t.s();
    }
    value += ssum / static_cast<double>(n);
  }
  double relu = 0.0;
  for (const auto& x : batch) {
    const FieldEval fe = eval_field(attribution, x);
    for (Group g : {Group::Plus, Group::Minus}) {
      if (model.active_count(g) == 0) continue;
      double sw = 0.0;
      for (std::size_t i = 0; i < model.terms.size(); ++i) {
        const auto& t = model.terms[i];
        if (t.active && t.group == g) sw += t.s() * fe.softmax[i];
      }
      relu += std::max(0.0, 1.0 - sw);
    }
  }
  return value + relu / static_cast<double>(batch.size());
}

PointList sample_off_surface(const BBox& bbox, int dim, std::size_t count,
                             std::mt19937_64& rng) {
  PointList out(count, Vec3::Zero());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& p : out) {
    for (int k = 0; k < dim; ++k) {
      p[k] = bbox.lo[k] + unit(rng) * (bbox.hi[k] - bbox.lo[k]);
    }
  }
  return out;
}

bool adam_update(std::span<double> params, std::span<const double> grads,
                 AdamState& state, double lr, std::span<const std::uint8_t> mask) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size() ||
      (!mask.empty() && mask.size() != params.size())) {
    raise(ErrorCode::DimensionMismatch, "Adam state does not match parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if ((mask.empty() || mask[i]) && !std::isfinite(grads[i])) return false;
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
  return true;
}

std::vector<double> pack_parameters(const PatchworkModel& model) {
  std::vector<double> out(kParamStride * model.terms.size(), 0.0);
  for (std::size_t i = 0; i < model.terms.size(); ++i) {
    const LinearTerm& t = model.terms[i];
    double* slot = out.data() + kParamStride * i;
    const Vec3& dir = model.weightnorm ? t.v : t.a;
    slot[0] = dir.x();
    slot[1] = dir.y();
    slot[2] = dir.z();
    slot[3] = t.c;
    slot[4] = t.log_s;
    slot[5] = model.weightnorm ? t.g : 0.0;
  }
  return out;
}

void unpack_parameters(PatchworkModel& model, std::span<const double> params) {
  if (params.size() != kParamStride * model.terms.size()) {
    raise(ErrorCode::DimensionMismatch, "parameter vector has the wrong length");
  }
  for (std::size_t i = 0; i < model.terms.size(); ++i) {
    LinearTerm& t = model.terms[i];
    const double* slot = params.data() + kParamStride * i;
    const Vec3 dir(slot[0], slot[1], slot[2]);
    t.c = slot[3];
    t.log_s = slot[4];
    if (model.weightnorm) {
      if (dir != t.v || slot[5] != t.g) {
        t.v = dir;
        t.g = slot[5];
        model.sync_weightnorm(i);
      }
    } else {
      t.a = dir;
    }
  }
}

bool adam_step(PatchworkModel& model, std::span<const double> grads,
               AdamState& state, double lr) {
  const std::size_t size = kParamStride * model.terms.size();
  if (grads.size() != size) {
    raise(ErrorCode::DimensionMismatch, "gradient vector has the wrong length");
  }
  if (state.m.size() != size) {
    raise(ErrorCode::DimensionMismatch, "Adam state does not match the model");
  }
  std::vector<std::uint8_t> mask(size, 0);
  for (std::size_t i = 0; i < model.terms.size(); ++i) {
    if (!model.terms[i].active) continue;
    const std::size_t used = model.weightnorm ? kParamStride : kParamStride - 1;
    const std::size_t dims = static_cast<std::size_t>(model.dim);
    for (std::size_t k = 0; k < used; ++k) {
      if (k < 3 && k >= dims) continue;
      mask[kParamStride * i + k] = 1;
    }
  }
  std::vector<double> params = pack_parameters(model);
  if (!adam_update(params, grads, state, lr, mask)) {
    spdlog::warn("non-finite gradient at Adam step {}; step skipped", state.step + 1);
    return false;
  }
  unpack_parameters(model, params);
  return true;
}

std::size_t prune_pass(PatchworkModel& model, double threshold, double disable_value) {
  std::size_t remaining[2] = {model.active_count(Group::Plus),
                              model.active_count(Group::Minus)};
  const double log_threshold = std::log(threshold);
  const double log_disable = std::log(disable_value);
  std::size_t disabled = 0;
  for (auto& t : model.terms) {
    if (!t.active || !(t.log_s < log_threshold)) continue;
    std::size_t& left = remaining[t.group == Group::Plus ? 0 : 1];
    if (left <= 1) continue;
    t.active = false;
    t.log_s = log_disable;
    --left;
    ++disabled;
  }
  return disabled;
}

PatchworkModel random_init(int dim, std::size_t count, double beta,
                           std::mt19937_64& rng, bool weightnorm) {
  PatchworkModel model;
  model.dim = dim;
  model.beta_plus = model.beta_minus = beta;
  std::normal_distribution<double> slope(0.0, std::sqrt(2.0 / dim));
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> offset(-bound, bound);
  model.terms.resize(2 * count);
  for (std::size_t i = 0; i < model.terms.size(); ++i) {
    LinearTerm& t = model.terms[i];
    t.group = i < count ? Group::Plus : Group::Minus;
    for (int k = 0; k < dim; ++k) t.a[k] = slope(rng);
    t.c = offset(rng);
  }
  if (weightnorm) model.enable_weightnorm();
  return model;
}

namespace {

FitResult run_fit(const OrientedSampleSet& samples, const FitConfig& config,
                  PatchworkModel initial, std::mt19937_64& rng,
                  std::chrono::steady_clock::time_point started) {
  FitResult result;
  result.model = std::move(initial);
  PatchworkModel& model = result.model;
  FitReport& report = result.report;
  report.dim = samples.dim;
  report.initial_terms = model.terms.size();

  const std::size_t m = samples.size();
  const std::size_t batch = std::min(config.batch_size, m);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = 0;
  if (batch < m) std::shuffle(order.begin(), order.end(), rng);

  PointList surf(batch), norms(batch);
  const BBox box = BBox::unit(samples.dim);
  AdamState state(kParamStride * model.terms.size(), config.adam_beta1,
                  config.adam_beta2, config.adam_eps);
  LossToggles toggles = config.losses;
  if (!config.pruning) toggles.prune = false;
  Workspace ws;
  std::vector<double> grad;
  int consecutive_skips = 0;

  spdlog::info("fit: {} samples, {} terms, {} iterations, batch {}", m,
               model.terms.size(), config.iterations, batch);
  report.trace.reserve(static_cast<std::size_t>(config.iterations));
  for (int it = 0; it < config.iterations; ++it) {
    if (batch == m) {
      for (std::size_t j = 0; j < m; ++j) {
        surf[j] = samples.points[j];
        norms[j] = samples.normals[j];
      }
    } else {
      if (cursor + batch > m) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      for (std::size_t j = 0; j < batch; ++j) {
        surf[j] = samples.points[order[cursor + j]];
        norms[j] = samples.normals[order[cursor + j]];
      }
      cursor += batch;
    }
    const PointList off = sample_off_surface(box, samples.dim, batch, rng);

    IterationRecord rec;
    rec.iteration = it;
    if (toggles.any()) {
      const LossBreakdown lb =
          evaluate_impl(model, surf, norms, off, toggles, &grad, ws);
      rec.surface = lb.surface;
      rec.normal = lb.normal;
      rec.occupancy = lb.occupancy;
      rec.prune = lb.prune;
      rec.total = lb.total;
      rec.degenerate_normals = lb.degenerate_normals;
      if (adam_step(model, grad, state, config.learning_rate)) {
        consecutive_skips = 0;
      } else {
        rec.skipped = true;
        ++report.skipped_steps;
        if (++consecutive_skips >= kMaxConsecutiveSkips) {
          raise(ErrorCode::FitAborted,
                "aborted after " + std::to_string(kMaxConsecutiveSkips) +
                    " consecutive non-finite steps");
        }
      }
    }
    if (config.pruning && (it + 1) % config.prune_interval == 0) {
      const std::size_t n =
          prune_pass(model, config.prune_threshold, config.prune_disable_value);
      report.disabled_by_pruning += n;
      spdlog::info("iteration {}: pruned {} terms, {} active", it + 1, n,
                   model.active_count());
    }
    rec.active_terms = model.active_count();
    report.trace.push_back(rec);
    if ((it + 1) % 1000 == 0) {
      spdlog::debug("iteration {}: total loss {:.6g}, {} active", it + 1,
                    rec.total, rec.active_terms);
    }
  }
  report.final_active_terms = model.active_count();
  report.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - started)
                            .count();
  return result;
}

}  // namespace

FitResult fit(const OrientedSampleSet& samples, const FitConfig& config) {
  config.validate();
  samples.validate();
  const auto started = std::chrono::steady_clock::now();
  std::mt19937_64 rng(config.seed);
  PatchworkModel model;
  if (config.geometric_init) {
    GeometricInitOptions opt;
    opt.rho = config.rho;
    opt.beta = config.beta;
    opt.weightnorm = config.weightnorm;
    model = geometric_init(samples, opt);
  } else {
    model = random_init(samples.dim, samples.size(), config.beta, rng,
                        config.weightnorm);
  }
  return run_fit(samples, config, std::move(model), rng, started);
}

FitResult fit(const OrientedSampleSet& samples, const FitConfig& config,
              PatchworkModel initial) {
  config.validate();
  samples.validate();
  initial.validate();
  if (initial.dim != samples.dim) {
    raise(ErrorCode::DimensionMismatch, "initial model and samples differ in dimension");
  }
  const auto started = std::chrono::steady_clock::now();
  std::mt19937_64 rng(config.seed);
  return run_fit(samples, config, std::move(initial), rng, started);
}

}  // namespace patchwork
