#pragma once

#include <span>

#include "esmc/model.hpp"

namespace esmc {

// Binary cross entropy; p is clamped into [kProbEps, 1 - kProbEps] first.
double cross_entropy(double label, double p);
// d(cross_entropy)/dp; zero where the clamp saturates.
double cross_entropy_grad(double label, double p);

Vec softmax(const Vec& logits);

// KL divergence between the two towers' parameter vectors, each flattened
// and mapped to a distribution via softmax (temperature 1).
double parameter_kl(const Mlp& tower_a, const Mlp& tower_b);
double parameter_kl_flat(const Vec& a_flat, const Vec& b_flat);

// Gradients of D_KL(softmax(a) || softmax(b)) w.r.t. the raw vectors:
//   d/db = softmax(b) - softmax(a)
//   d/da = softmax(a) * (log(softmax(a)/softmax(b)) - KL)
// Either output may be null. Returns the KL value.
double parameter_kl_grads(const Vec& a_flat, const Vec& b_flat, Vec* da, Vec* db);

// Exposure-space task losses over the full batch:
//   l_ctr   = mean CE(c,   pctr)
//   l_ctcar = mean CE(c*a, pctcar)
//   l_ctcvr = mean CE(c*o, pctcvr)
// Requires the calibrated label hierarchy o <= a <= c on every sample.
struct TaskLosses {
  double l_ctr = 0.0;
  double l_ctcar = 0.0;
  double l_ctcvr = 0.0;
};
TaskLosses task_losses(std::span<const PredictionBundle> bundles,
                       std::span<const InteractionSample> samples);

struct ObjectiveOptions {
  // Verify o <= a <= c per sample; disabled when training on raw
  // (uncalibrated) labels, e.g. for the calibration-ablation arm.
  bool enforce_hierarchy = true;
  // When set, the KL teacher side reads this frozen flat vector instead of
  // the live CTCAR tower. Finite-difference oracles use it to reproduce the
  // stop-gradient semantics of the constraint.
  const Vec* kl_teacher_override = nullptr;
};

struct ObjectiveResult {
  double total = 0.0;
  double l_ctr = 0.0;
  double l_ctcar = 0.0;         // recommendation-domain cart loss
  double l_ctcvr = 0.0;         // baselines log their clicked-subset CVR loss here
  double l_ctcar_global = 0.0;  // ESMC2/ESMS2 only
  double l_kl = 0.0;
};

// Variant-dispatched multi-task objective. When `grads` is non-null the
// analytic gradients of the total loss are accumulated into it (including
// the KL term into the CTCVR tower; the CTCAR side is treated as constant
// unless weights.kl_symmetric is set).
ObjectiveResult compute_objective(const Model& model, std::span<const InteractionSample> batch,
                                  const LossWeights& weights, const ObjectiveOptions& opts = {},
                                  Model::Gradients* grads = nullptr);

// Named fronts with variant guards.
ObjectiveResult esmc_objective(const Model&, std::span<const InteractionSample>,
                               const LossWeights&, const ObjectiveOptions& = {},
                               Model::Gradients* = nullptr);
ObjectiveResult esms_objective(const Model&, std::span<const InteractionSample>,
                               const LossWeights&, const ObjectiveOptions& = {},
                               Model::Gradients* = nullptr);
ObjectiveResult esmg_objective(const Model&, std::span<const InteractionSample>,
                               const LossWeights&, const ObjectiveOptions& = {},
                               Model::Gradients* = nullptr);

}  // namespace esmc
