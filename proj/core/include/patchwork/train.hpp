#pragma once

#include "patchwork/field.hpp"
#include "patchwork/init.hpp"
#include "patchwork/types.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace patchwork {

struct LossToggles {
  bool surface = true;
  bool normal = true;
  bool occupancy = true;
  bool prune = true;

  bool any() const { return surface || normal || occupancy || prune; }
};

struct FitConfig {
  int iterations = 10000;
  std::size_t batch_size = 16384;  // clamped to the sample count
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int prune_interval = 2000;
  double prune_threshold = 1e-2;
  double prune_disable_value = kDisabledWeight;
  double rho = kDefaultRho;
  double beta = kDefaultBeta;
  std::uint64_t seed = 0;
  LossToggles losses;
  bool pruning = true;
  bool geometric_init = true;
  bool weightnorm = true;

  // Throws InvalidConfig.
  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double surface = 0.0;
  double normal = 0.0;
  double occupancy = 0.0;
  double prune = 0.0;
  double total = 0.0;
  std::size_t active_terms = 0;
  std::size_t degenerate_normals = 0;
  bool skipped = false;
};

struct FitReport {
  std::vector<IterationRecord> trace;
  std::size_t initial_terms = 0;
  std::size_t final_active_terms = 0;
  std::size_t skipped_steps = 0;
  std::size_t disabled_by_pruning = 0;
  int dim = 3;
  double wall_seconds = 0.0;  // excluded from the CSV to keep it reproducible

  // (d + 1) numbers per term before pruning (8m for 2m terms in 3D) and
  // (d + 1) per surviving term plus the two sharpness values after.
  std::size_t initial_parameter_count() const;
  std::size_t final_parameter_count() const;

  std::string to_csv() const;
};

struct FitResult {
  PatchworkModel model;
  FitReport report;
};

enum class EvalMode { Smooth, Tropical };

/// mean |F(x_j)|
double loss_surface(const PatchworkModel& model, std::span<const Vec3> batch,
                    EvalMode mode = EvalMode::Smooth);

/// mean (1 - cos(grad F(x_j), n_j)). Samples whose gradient norm is below
/// 1e-12 contribute nothing and are counted in `degenerate`; when every
/// sample is degenerate the call throws DegenerateGradient.
double loss_normal(const PatchworkModel& model, std::span<const Vec3> batch,
                   std::span<const Vec3> normals,
                   EvalMode mode = EvalMode::Smooth,
                   std::size_t* degenerate = nullptr);

/// g_dw(x) = 4 (x - 1/2)^2 - 4 |x - 1/2| + 1
double double_well(double x);

/// mean g_dw(sigmoid(-F(y_k)))^2
double loss_occupancy(const PatchworkModel& model, std::span<const Vec3> off_batch);

/// Sum over both groups of
///   (1/n) sum_i s_i + (1/m) sum_j relu(1 - sum_i s_i w_i(x_j))
/// over active terms. The attributions w are softmax(beta l_i + log s_i)
/// taken from `attribution` (pass the model itself for the usual
/// stop-gradient semantics; a frozen copy for finite-difference checks).
double loss_prune(const PatchworkModel& model, std::span<const Vec3> batch);
double loss_prune(const PatchworkModel& model, std::span<const Vec3> batch,
                  const PatchworkModel& attribution);

struct LossBreakdown {
  double surface = 0.0;
  double normal = 0.0;
  double occupancy = 0.0;
  double prune = 0.0;
  double total = 0.0;
  std::size_t degenerate_normals = 0;
};

/// Trainable parameters are laid out with a stride of kParamStride per term:
/// [dir_x, dir_y, dir_z, c, log_s, g], where dir is v under weight
/// normalization and a otherwise (g is unused then).
inline constexpr std::size_t kParamStride = 6;

/// Evaluates the enabled losses on one batch and, when `grad` is non-null,
/// writes the gradient of their sum (resized to kParamStride * terms). Work
/// is split into fixed point blocks reduced in index order, so results do not
/// depend on the thread count.
LossBreakdown evaluate_losses(const PatchworkModel& model,
                              std::span<const Vec3> surface,
                              std::span<const Vec3> normals,
                              std::span<const Vec3> off_surface,
                              const LossToggles& toggles,
                              std::vector<double>* grad = nullptr);

/// Uniform samples in bbox (z fixed at 0 when dim == 2).
PointList sample_off_surface(const BBox& bbox, int dim, std::size_t count,
                             std::mt19937_64& rng);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  AdamState() = default;
  AdamState(std::size_t size, double b1, double b2, double epsilon)
      : beta1(b1), beta2(b2), eps(epsilon), m(size, 0.0), v(size, 0.0) {}
};

/// Plain bias-corrected Adam on a flat vector. Entries with mask 0 are left
/// alone (moments included). Returns false without touching anything when a
/// masked-in gradient is not finite.
bool adam_update(std::span<double> params, std::span<const double> grads,
                 AdamState& state, double lr,
                 std::span<const std::uint8_t> mask = {});

/// Flat parameter vector of the model in the layout above.
std::vector<double> pack_parameters(const PatchworkModel& model);
/// Writes the vector back; slopes are recomputed only for terms whose
/// (g, v) actually changed.
void unpack_parameters(PatchworkModel& model, std::span<const double> params);

/// One Adam step over the active terms. Returns false (and logs) when the
/// gradient contains non-finite values; the model is then unchanged.
bool adam_step(PatchworkModel& model, std::span<const double> grads,
               AdamState& state, double lr);

/// Disables every active term with s < threshold (log s := log
/// disable_value). The last active term of a group is always kept. Returns
/// the number of newly disabled terms.
std::size_t prune_pass(PatchworkModel& model, double threshold,
                       double disable_value);

/// Random slopes N(0, 2/d) and offsets U(-1/sqrt d, 1/sqrt d), `count` terms
/// per group. Used by the no-geometric-init ablation.
PatchworkModel random_init(int dim, std::size_t count, double beta,
                           std::mt19937_64& rng, bool weightnorm = true);

FitResult fit(const OrientedSampleSet& samples, const FitConfig& config);
/// Same loop starting from `initial` instead of an initializer; the
/// geometric_init, rho and weightnorm settings are ignored.
FitResult fit(const OrientedSampleSet& samples, const FitConfig& config,
              PatchworkModel initial);

}  // namespace patchwork
