#pragma once

#include <string>
#include <vector>

#include "esmc/trainer.hpp"

namespace esmc {

// Default sensitivity grids: the parameter-constraint coefficient and the
// global-domain cart-loss weight.
inline const std::vector<double>& kl_weight_grid() {
  static const std::vector<double> grid{0.01, 0.05, 0.1, 0.5, 1.0};
  return grid;
}
inline const std::vector<double>& global_weight_grid() {
  static const std::vector<double> grid{0.1, 0.3, 0.5, 0.7, 1.0};
  return grid;
}

struct SweepSpec {
  TrainConfig base;
  // "kl" (constraint coefficient), "global" (global-domain cart weight), or
  // a literal weight slot "w1".."w5".
  std::string parameter = "kl";
  std::vector<double> values;
  std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
  TiePolicy tie = TiePolicy::TieAware;
  size_t workers = 1;
};

struct SweepRow {
  std::string variant;
  std::string parameter;
  double value = 0.0;
  uint64_t seed = 0;
  MetricsReport report;
  bool failed = false;
  std::string error;
};

// Trains and evaluates once per (value, seed); a failed run is recorded with
// its error and the sweep continues. Row order is deterministic regardless
// of worker count.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const FeatureSchema& schema,
                                const std::vector<InteractionSample>& train_samples,
                                const std::vector<InteractionSample>& test_samples);

// Long-format table, one row per run:
//   variant parameter value seed ctr_auc ctcvr_auc cvr_auc
//   good_case_cvr_auc bad_case_cvr_auc error
std::string sweep_table(const std::vector<SweepRow>& rows);

// Resolves a parameter alias onto the weight slot it drives for `variant`.
// "kl" -> w4 (ESMC/ESMS) or w5 (ESMC2/ESMS2); "global" -> w4 (ESMG only).
double& resolve_sweep_weight(LossWeights& weights, ModelVariant variant,
                             const std::string& parameter);

}  // namespace esmc
