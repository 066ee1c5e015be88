#include "patchwork/field.hpp"

#include "kernels.hpp"
#include "patchwork/error.hpp"
#include "patchwork/parallel.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace patchwork {
namespace {

bool finite3(const Vec3& v) { return v.allFinite(); }

void check_dim(const PatchworkModel& model, std::size_t got) {
  if (got != static_cast<std::size_t>(model.dim)) {
    raise(ErrorCode::DimensionMismatch,
          "point has " + std::to_string(got) + " coordinates, model is " +
              std::to_string(model.dim) + "D");
  }
}

void pack_group(const PatchworkModel& model, Group which, PackedGroup& out) {
  out = PackedGroup{};
  out.beta = model.beta(which);
  const std::size_t n = model.active_count(which);
  out.ax.reserve(n);
  out.ay.reserve(n);
  out.az.reserve(n);
  out.c.reserve(n);
  out.log_s.reserve(n);
  out.index.reserve(n);
  for (std::size_t i = 0; i < model.terms.size(); ++i) {
    const LinearTerm& t = model.terms[i];
    if (!t.active || t.group != which) continue;
    out.ax.push_back(t.a.x());
    out.ay.push_back(t.a.y());
    out.az.push_back(t.a.z());
    out.c.push_back(t.c);
    out.log_s.push_back(t.log_s);
    out.index.push_back(static_cast<std::uint32_t>(i));
  }
}

}  // namespace

double LinearTerm::s() const { return std::exp(log_s); }

std::size_t PatchworkModel::active_count() const {
  std::size_t n = 0;
  for (const auto& t : terms) n += t.active ? 1 : 0;
  return n;
}

std::size_t PatchworkModel::active_count(Group g) const {
  std::size_t n = 0;
  for (const auto& t : terms) n += (t.active && t.group == g) ? 1 : 0;
  return n;
}

void PatchworkModel::validate() const {
  if (dim != 2 && dim != 3) {
    raise(ErrorCode::InvalidArgument, "dimension must be 2 or 3");
  }
  if (!(std::isfinite(beta_plus) && beta_plus > 0.0 &&
        std::isfinite(beta_minus) && beta_minus > 0.0)) {
    raise(ErrorCode::NonFiniteParameter, "sharpness must be finite and > 0");
  }
  if (active_count() == 0) {
    raise(ErrorCode::InvalidArgument, "model has no active terms");
  }
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const LinearTerm& t = terms[i];
    if (!finite3(t.a) || !std::isfinite(t.c) || !std::isfinite(t.log_s)) {
      raise(ErrorCode::NonFiniteParameter,
            "term " + std::to_string(i) + " has a non-finite parameter");
    }
    if (dim == 2 && (t.a.z() != 0.0 || t.v.z() != 0.0)) {
      raise(ErrorCode::DimensionMismatch,
            "term " + std::to_string(i) + " has a z slope in a 2D model");
    }
    if (weightnorm) {
      if (!std::isfinite(t.g) || !finite3(t.v)) {
        raise(ErrorCode::NonFiniteParameter,
              "term " + std::to_string(i) + " has non-finite (g, v)");
      }
      if (!(t.v.norm() > 0.0)) {
        raise(ErrorCode::InvalidArgument,
              "term " + std::to_string(i) + " has a zero direction vector");
      }
    }
  }
}

void PatchworkModel::enable_weightnorm() {
  weightnorm = true;
  for (auto& t : terms) {
    t.g = t.a.norm();
    t.v = t.a;
    // A zero slope (constant term) keeps a unit direction with g = 0.
    if (t.g == 0.0) t.v = Vec3::UnitX();
  }
}

void PatchworkModel::sync_weightnorm(std::size_t i) {
  LinearTerm& t = terms[i];
  t.a = t.v * (t.g / t.v.norm());
}

void PatchworkModel::sync_weightnorm() {
  for (std::size_t i = 0; i < terms.size(); ++i) sync_weightnorm(i);
}

double FieldEval::group_weight_sum(const PatchworkModel& model,
                                   Group g) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < model.terms.size(); ++i) {
    if (model.terms[i].group == g) sum += softmax[i];
  }
  return sum;
}

PackedModel::PackedModel(const PatchworkModel& model) : dim(model.dim) {
  pack_group(model, Group::Plus, plus);
  pack_group(model, Group::Minus, minus);
}

Vec3 to_point(int dim, std::span<const double> x) {
  Vec3 p = Vec3::Zero();
  for (int k = 0; k < dim; ++k) p[k] = x[static_cast<std::size_t>(k)];
  return p;
}

FieldEval eval_field(const PatchworkModel& model, const Vec3& x) {
  model.validate();
  if (!finite3(x)) raise(ErrorCode::InvalidArgument, "non-finite query point");

  FieldEval out;
  out.softmax.assign(model.terms.size(), 0.0);
  double lse[2] = {detail::kNegInf, detail::kNegInf};
  Vec3 grad[2] = {Vec3::Zero(), Vec3::Zero()};

  for (int gi = 0; gi < 2; ++gi) {
    const Group which = gi == 0 ? Group::Plus : Group::Minus;
    const double beta = model.beta(which);
    double zmax = detail::kNegInf;
    for (std::size_t i = 0; i < model.terms.size(); ++i) {
      const LinearTerm& t = model.terms[i];
      if (!t.active || t.group != which) continue;
      const double z = beta * t.eval(x) + t.log_s;
      out.softmax[i] = z;
      zmax = std::max(zmax, z);
    }
    if (zmax == detail::kNegInf) {
      continue;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < model.terms.size(); ++i) {
      const LinearTerm& t = model.terms[i];
      if (!t.active || t.group != which) continue;
      const double e = std::exp(out.softmax[i] - zmax);
      out.softmax[i] = e;
      sum += e;
    }
    for (std::size_t i = 0; i < model.terms.size(); ++i) {
      const LinearTerm& t = model.terms[i];
      if (!t.active || t.group != which) continue;
      out.softmax[i] /= sum;
      grad[gi] += out.softmax[i] * t.a;
    }
    lse[gi] = zmax + std::log(sum);
  }
  out.value = lse[0] / model.beta_plus - lse[1] / model.beta_minus;
  out.grad_x = grad[0] - grad[1];
  return out;
}

FieldEval eval_field(const PatchworkModel& model, std::span<const double> x) {
  check_dim(model, x.size());
  return eval_field(model, to_point(model.dim, x));
}

double eval_tropical(const PatchworkModel& model, const Vec3& x) {
  double best[2] = {detail::kNegInf, detail::kNegInf};
  for (const auto& t : model.terms) {
    if (!t.active) continue;
    double& b = best[t.group == Group::Plus ? 0 : 1];
    b = std::max(b, t.eval(x));
  }
  return best[0] - best[1];
}

double eval_tropical(const PatchworkModel& model, std::span<const double> x) {
  check_dim(model, x.size());
  return eval_tropical(model, to_point(model.dim, x));
}

std::ptrdiff_t tropical_argmax(const PatchworkModel& model, const Vec3& x,
                               Group group, std::ptrdiff_t prefer,
                               double tie_tol) {
  std::ptrdiff_t best = -1;
  double best_val = detail::kNegInf;
  for (std::size_t i = 0; i < model.terms.size(); ++i) {
    const LinearTerm& t = model.terms[i];
    if (!t.active || t.group != group) continue;
    const double v = t.eval(x);
    if (best < 0 || v > best_val) {
      best = static_cast<std::ptrdiff_t>(i);
      best_val = v;
    }
  }
  if (best < 0 || prefer < 0) return best;
  const auto p = static_cast<std::size_t>(prefer);
  if (p < model.terms.size() && model.terms[p].active &&
      model.terms[p].group == group &&
      model.terms[p].eval(x) >= best_val - tie_tol) {
    return prefer;
  }
  return best;
}

Vec3 tropical_gradient(const PatchworkModel& model, const Vec3& x) {
  const auto p = tropical_argmax(model, x, Group::Plus);
  const auto q = tropical_argmax(model, x, Group::Minus);
  Vec3 g = Vec3::Zero();
  if (p >= 0) g += model.terms[static_cast<std::size_t>(p)].a;
  if (q >= 0) g -= model.terms[static_cast<std::size_t>(q)].a;
  return g;
}

std::vector<TermGradient> grad_params(const PatchworkModel& model,
                                      const Vec3& x) {
  const FieldEval fe = eval_field(model, x);
  std::vector<TermGradient> out(model.terms.size());
  for (std::size_t i = 0; i < model.terms.size(); ++i) {
    const LinearTerm& t = model.terms[i];
    if (!t.active) continue;
    const double w = group_sign(t.group) * fe.softmax[i];
    TermGradient& d = out[i];
    d.c = w;
    d.a = w * x;
    d.log_s = w / model.beta(t.group);
    if (model.weightnorm) {
      const double vn = t.v.norm();
      const Vec3 u = t.v / vn;
      d.g = d.a.dot(u);
      d.v = (t.g / vn) * (d.a - u * u.dot(d.a));
    }
  }
  return out;
}

void eval_field_batch_streaming(
    const PackedModel& packed, std::span<const Vec3> points,
    const std::function<void(std::size_t, const PointValue&)>& sink) {
  if (packed.plus.size() + packed.minus.size() == 0) {
    raise(ErrorCode::InvalidArgument, "model has no active terms");
  }
  parallel_for(points.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      sink(i, detail::stream_point(packed, points[i]));
    }
  });
}

void eval_field_batch_streaming(
    const PatchworkModel& model, std::span<const Vec3> points,
    const std::function<void(std::size_t, const PointValue&)>& sink) {
  model.validate();
  eval_field_batch_streaming(PackedModel(model), points, sink);
}

void eval_field_batch_streaming(const PackedModel& packed,
                                std::span<const Vec3> points,
                                std::span<PointValue> out) {
  if (out.size() != points.size()) {
    raise(ErrorCode::InvalidArgument, "output span size mismatch");
  }
  if (packed.plus.size() + packed.minus.size() == 0) {
    raise(ErrorCode::InvalidArgument, "model has no active terms");
  }
  parallel_for(points.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = detail::stream_point(packed, points[i]);
    }
  });
}

std::vector<PointValue> eval_field_batch(const PatchworkModel& model,
                                         std::span<const Vec3> points) {
  model.validate();
  std::vector<PointValue> out(points.size());
  eval_field_batch_streaming(PackedModel(model), points, std::span(out));
  return out;
}

}  // namespace patchwork
