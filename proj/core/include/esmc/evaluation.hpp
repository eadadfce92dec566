#pragma once

#include <optional>
#include <span>
#include <string>

#include "esmc/model.hpp"

namespace esmc {

// Tie handling for AUC: TieAware scores tied positive/negative pairs 0.5
// (the standard rank statistic); Strict scores them 0, matching a literal
// indicator I(score_p > score_n).
enum class TiePolicy { TieAware, Strict };

// Rank-based AUC, O(n log n), equal to the pairwise definition.
// Throws UsageError if only one class is present.
double auc(std::span<const double> scores, std::span<const int> labels,
           TiePolicy tie = TiePolicy::TieAware);

struct MetricsReport {
  std::optional<double> ctr_auc;    // score pctr,      label c,   all samples
  std::optional<double> ctcvr_auc;  // score pctcvr,    label c*o, all samples
  std::optional<double> cvr_auc;    // score cvr_score, label o,   clicked samples
  size_t n_samples = 0;
  size_t n_clicked = 0;
  size_t n_conversions = 0;

  // Conversion samples split by where the cart label came from. Negatives
  // are clicked non-converting samples drawn from the same sessions as the
  // group's positives.
  struct CaseGroup {
    std::optional<double> cvr_auc;
    size_t n_pos = 0;
    size_t n_neg = 0;
  };
  CaseGroup good_case;  // cart and purchase in the same session
  CaseGroup bad_case;   // cart relocated from an earlier session

  std::string to_string() const;
  std::string to_record() const;  // one line, machine-readable key=value pairs
};

MetricsReport evaluate(const Model& model, std::span<const InteractionSample> test,
                       TiePolicy tie = TiePolicy::TieAware);

// Just the Good/Bad-case split of `evaluate` (also included there).
MetricsReport case_split_eval(const Model& model, std::span<const InteractionSample> test,
                              TiePolicy tie = TiePolicy::TieAware);

}  // namespace esmc
