#pragma once

#include <span>
#include <string>

#include "esmc/common.hpp"

namespace esmc {

// Linear warm-up: lr(t) = base_lr * min(1, (t+1)/max(1, warmup_steps)).
// Nondecreasing during warm-up, constant afterwards.
struct LrSchedule {
  double base_lr = 0.005;
  long warmup_steps = 1000;

  double at(long step) const {
    double ramp = static_cast<double>(step + 1) /
                  static_cast<double>(warmup_steps > 1 ? warmup_steps : 1);
    return base_lr * (ramp < 1.0 ? ramp : 1.0);
  }
};

// Adagrad with an optional exponential decay on the squared-gradient
// accumulator: decay = 0 is vanilla Adagrad (acc += g^2), decay > 0 keeps a
// moving average (acc = (1-decay)*acc + g^2). Entries whose gradient is
// exactly zero are skipped entirely, which makes sparse and dense updates
// of untouched rows identical.
struct AdagradState {
  Vec accumulator;
  long step_count = 0;
  double decay = 0.0;
  double epsilon = 1e-8;

  AdagradState() = default;
  AdagradState(size_t n, double decay_, double epsilon_)
      : accumulator(n, 0.0), decay(decay_), epsilon(epsilon_) {}
};

// One optimizer step over a flat parameter group. Throws NumericError naming
// `group` if any gradient entry is non-finite; parameters are untouched then.
void adagrad_step(std::span<double> params, std::span<const double> grads,
                  AdagradState& state, const LrSchedule& schedule,
                  const std::string& group = "params");

// Row-sparse variant used by embedding tables: applies the same rule to the
// given rows only; lr comes from the shared state/schedule step.
void adagrad_step_rows(std::span<double> params, std::span<const double> grads,
                       std::span<const size_t> rows, size_t row_len, AdagradState& state,
                       const LrSchedule& schedule, const std::string& group = "rows");

}  // namespace esmc
