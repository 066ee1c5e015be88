#pragma once

#include "patchwork/types.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace patchwork {

enum class Group : std::uint8_t { Plus, Minus };

inline constexpr double kDefaultBeta = 75.0;
// Weight assigned to a term when pruning disables it.
inline constexpr double kDisabledWeight = 1e-5;

inline double group_sign(Group g) { return g == Group::Plus ? 1.0 : -1.0; }

/// One linear function l(x) = <a, x> + c with positive weight s = exp(log_s).
///
/// When the owning model uses weight normalization, (g, v) are the trainable
/// slope parameters and `a` is kept equal to g * v / |v|.
struct LinearTerm {
  Vec3 a = Vec3::Zero();
  double c = 0.0;
  double log_s = 0.0;
  Group group = Group::Plus;
  bool active = true;
  double g = 0.0;
  Vec3 v = Vec3::Zero();

  double s() const;
  double eval(const Vec3& x) const { return a.dot(x) + c; }
};

/// Signed log-sum-exp field
///
///   F(x) = 1/b+ log sum_{Plus} exp(b+ l_i(x) + log s_i)
///        - 1/b- log sum_{Minus} exp(b- l_i(x) + log s_i)
///
/// over the active terms. Inactive (pruned) terms stay in `terms` so indices
/// remain stable, but they never contribute to any sum. An empty group
/// contributes log(0) = -inf, which makes the field +/-inf everywhere.
struct PatchworkModel {
  int dim = 3;
  double beta_plus = kDefaultBeta;
  double beta_minus = kDefaultBeta;
  bool weightnorm = false;
  std::vector<LinearTerm> terms;

  double beta(Group g) const { return g == Group::Plus ? beta_plus : beta_minus; }

  std::size_t active_count() const;
  std::size_t active_count(Group g) const;

  // Throws NonFiniteParameter / InvalidArgument when an invariant is broken.
  void validate() const;

  // Sets g = |a|, v = a for every term and turns weight normalization on.
  void enable_weightnorm();
  // Recomputes a from (g, v) for every term.
  void sync_weightnorm();
  void sync_weightnorm(std::size_t term);
};

struct FieldEval {
  double value = 0.0;
  Vec3 grad_x = Vec3::Zero();
  // Per-term softmax attribution, indexed like model.terms. Each non-empty
  // group sums to one; inactive terms carry zero.
  std::vector<double> softmax;

  double group_weight_sum(const PatchworkModel& model, Group g) const;
};

/// Per-point output of the streaming evaluator.
struct PointValue {
  double value = 0.0;
  Vec3 grad_x = Vec3::Zero();
  double tropical = 0.0;
};

/// Heap buffer with Eigen's packet alignment. Vectorized reductions split
/// work into a scalar head and packet body according to the start address,
/// so a fixed alignment keeps results bit-identical from run to run.
using AlignedVector = std::vector<double, Eigen::aligned_allocator<double>>;

/// Structure-of-arrays copy of one group's active terms.
struct PackedGroup {
  AlignedVector ax, ay, az, c, log_s;
  std::vector<std::uint32_t> index;
  double beta = kDefaultBeta;

  std::size_t size() const { return index.size(); }
};

/// Evaluation layout of a model. Built once per model state; evaluation over
/// it performs no heap allocation.
struct PackedModel {
  int dim = 3;
  PackedGroup plus;
  PackedGroup minus;

  PackedModel() = default;
  explicit PackedModel(const PatchworkModel& model);
};

FieldEval eval_field(const PatchworkModel& model, const Vec3& x);
FieldEval eval_field(const PatchworkModel& model, std::span<const double> x);

/// max over active Plus terms of l_i(x) minus max over active Minus terms.
/// Weights and sharpness are ignored.
double eval_tropical(const PatchworkModel& model, const Vec3& x);
double eval_tropical(const PatchworkModel& model, std::span<const double> x);

/// Slope difference of the maximizing terms (the gradient of the tropical
/// field wherever it is smooth). Ties go to the lowest term index.
Vec3 tropical_gradient(const PatchworkModel& model, const Vec3& x);

/// Index of the active term of `group` maximizing l_i(x). Ties within
/// `tie_tol` resolve to `prefer` when it is among the maximizers, otherwise to
/// the lowest index. Returns -1 for an empty group.
std::ptrdiff_t tropical_argmax(const PatchworkModel& model, const Vec3& x,
                               Group group, std::ptrdiff_t prefer = -1,
                               double tie_tol = 0.0);

/// Derivatives of F at one point with respect to every parameter.
struct TermGradient {
  Vec3 a = Vec3::Zero();
  double c = 0.0;
  double log_s = 0.0;
  double g = 0.0;            // weight normalization only
  Vec3 v = Vec3::Zero();     // weight normalization only
};

std::vector<TermGradient> grad_params(const PatchworkModel& model,
                                      const Vec3& x);

/// Evaluates every point without materializing an n-by-m buffer: each point
/// makes two passes over fixed-size tiles of each group (running max, then
/// exp-sum and gradient accumulation). `sink(i, value)` may be called from
/// several threads at once, always with distinct i.
void eval_field_batch_streaming(
    const PackedModel& packed, std::span<const Vec3> points,
    const std::function<void(std::size_t, const PointValue&)>& sink);

void eval_field_batch_streaming(
    const PatchworkModel& model, std::span<const Vec3> points,
    const std::function<void(std::size_t, const PointValue&)>& sink);

/// Writes values into a caller-owned span (size must equal points.size()).
void eval_field_batch_streaming(const PackedModel& packed,
                                std::span<const Vec3> points,
                                std::span<PointValue> out);

std::vector<PointValue> eval_field_batch(const PatchworkModel& model,
                                         std::span<const Vec3> points);

/// Convert a point span of the model's dimension to Vec3 (z = 0 in 2D).
Vec3 to_point(int dim, std::span<const double> x);

}  // namespace patchwork
