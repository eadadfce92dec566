#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "esmc/common.hpp"

namespace esmc {

struct GradCheckEntry {
  std::string group;
  double max_rel_err = 0.0;
  size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> groups;
  double max_rel_err = 0.0;

  bool within(double tol) const { return max_rel_err < tol; }
};

// A named, mutable view over one parameter group plus its analytic gradient.
struct ParamGroupView {
  std::string name;
  std::span<double> params;
  std::span<const double> analytic_grad;
};

// Central finite differences against the analytic gradient.
// rel err = |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// `loss` must be a deterministic function of the current parameter values.
GradCheckReport grad_check(const std::function<double()>& loss,
                           std::vector<ParamGroupView> groups, double h = 1e-5);

}  // namespace esmc
