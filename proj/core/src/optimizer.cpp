#include "esmc/optimizer.hpp"

#include <cmath>

namespace esmc {

namespace {

inline void update_entry(double& param, double& acc, double g, double lr, double decay,
                         double epsilon) {
  if (g == 0.0) return;  // untouched entries keep their accumulator bit-identical
  if (decay > 0.0)
    acc = (1.0 - decay) * acc + g * g;
  else
    acc += g * g;
  param -= lr * g / (std::sqrt(acc) + epsilon);
}

void check_finite(std::span<const double> grads, const std::string& group) {
  for (double g : grads)
    if (!std::isfinite(g))
      throw NumericError("non-finite gradient in parameter group '" + group + "'");
}

}  // namespace

void adagrad_step(std::span<double> params, std::span<const double> grads,
                  AdagradState& state, const LrSchedule& schedule, const std::string& group) {
  if (params.size() != grads.size() || params.size() != state.accumulator.size())
    throw ConfigError("adagrad_step: params/grads/accumulator shapes disagree in '" + group +
                      "'");
  check_finite(grads, group);
  const double lr = schedule.at(state.step_count);
  for (size_t i = 0; i < params.size(); ++i)
    update_entry(params[i], state.accumulator[i], grads[i], lr, state.decay, state.epsilon);
  ++state.step_count;
}

void adagrad_step_rows(std::span<double> params, std::span<const double> grads,
                       std::span<const size_t> rows, size_t row_len, AdagradState& state,
                       const LrSchedule& schedule, const std::string& group) {
  if (params.size() != state.accumulator.size())
    throw ConfigError("adagrad_step_rows: accumulator shape mismatch in '" + group + "'");
  if (grads.size() != rows.size() * row_len)
    throw ConfigError("adagrad_step_rows: gradient shape mismatch in '" + group + "'");
  check_finite(grads, group);
  const double lr = schedule.at(state.step_count);
  for (size_t ri = 0; ri < rows.size(); ++ri) {
    const size_t base = rows[ri] * row_len;
    if (base + row_len > params.size())
      throw ConfigError("adagrad_step_rows: row index out of range in '" + group + "'");
    for (size_t c = 0; c < row_len; ++c)
      update_entry(params[base + c], state.accumulator[base + c], grads[ri * row_len + c], lr,
                   state.decay, state.epsilon);
  }
  ++state.step_count;
}

}  // namespace esmc
