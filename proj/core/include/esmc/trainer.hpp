#pragma once

#include <string>
#include <vector>

#include "esmc/evaluation.hpp"
#include "esmc/model.hpp"
#include "esmc/objectives.hpp"

namespace esmc {

struct TrainConfig {
  ModelConfig model;
  LossWeights weights;
  double lr = 0.005;
  size_t batch_size = 1024;
  size_t epochs = 1;
  long warmup_steps = 1000;
  uint64_t seed = 42;  // batch shuffling
  bool shuffle = true;
  double adagrad_decay = 1e-4;
  double adagrad_epsilon = 1e-8;
  bool enforce_hierarchy = true;  // off when training on raw labels

  void validate() const;
};

struct TrainStepLog {
  long step = 0;
  double lr = 0.0;
  double l_ctr = 0.0;
  double l_ctcar = 0.0;
  double l_ctcvr = 0.0;
  double l_ctcar_global = 0.0;
  double l_kl = 0.0;
  double total = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<TrainStepLog> log;
  bool aborted = false;        // non-finite loss/gradient; model is the last good state
  std::string abort_reason;
};

// Seeded, single-owner training loop: shuffled batches per epoch, the
// variant's objective, one Adagrad step per batch (towers dense, embedding
// tables row-sparse). Deterministic function of (config, samples).
TrainResult train(const TrainConfig& config, const FeatureSchema& schema,
                  const std::vector<InteractionSample>& samples);

void write_train_log(const std::vector<TrainStepLog>& log, const std::string& path);

struct AblationReport {
  MetricsReport calibrated;  // trained on calibrated samples
  MetricsReport raw;         // same seed, trained on raw samples
  CalibrationStats stats;
};

// Trains twice with the identical seed, once on calibrated and once on raw
// samples, evaluating both on the calibrated test set.
AblationReport ablate_calibration(const TrainConfig& config, const FeatureSchema& schema,
                                  std::vector<InteractionSample> raw_train,
                                  std::vector<InteractionSample> raw_test,
                                  TiePolicy tie = TiePolicy::TieAware);

}  // namespace esmc
