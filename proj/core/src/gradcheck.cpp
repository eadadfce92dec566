#include "esmc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace esmc {

GradCheckReport grad_check(const std::function<double()>& loss,
                           std::vector<ParamGroupView> groups, double h) {
  GradCheckReport report;
  for (auto& group : groups) {
    GradCheckEntry entry;
    entry.group = group.name;
    for (size_t i = 0; i < group.params.size(); ++i) {
      const double saved = group.params[i];
      group.params[i] = saved + h;
      const double up = loss();
      group.params[i] = saved - h;
      const double down = loss();
      group.params[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = group.analytic_grad[i];
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      const double rel = std::fabs(analytic - numeric) / denom;
      if (rel >= entry.max_rel_err) {
        entry.max_rel_err = rel;
        entry.worst_index = i;
        entry.analytic = analytic;
        entry.numeric = numeric;
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.groups.push_back(std::move(entry));
  }
  return report;
}

}  // namespace esmc
