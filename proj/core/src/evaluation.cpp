#include "esmc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <vector>

namespace esmc {

double auc(std::span<const double> scores, std::span<const int> labels, TiePolicy tie) {
  if (scores.size() != labels.size()) throw UsageError("auc: scores/labels length mismatch");
  const size_t n = scores.size();
  size_t n_pos = 0;
  for (int y : labels) n_pos += y > 0;
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw UsageError("auc: need at least one positive and one negative sample");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // average ranks within tie groups; accumulate positive ranks and the
  // pos*neg pair count of each group for the strict correction
  double pos_rank_sum = 0.0;
  double tied_pairs = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    size_t group_pos = 0;
    for (size_t k = i; k < j; ++k) group_pos += labels[order[k]] > 0;
    pos_rank_sum += avg_rank * static_cast<double>(group_pos);
    tied_pairs += static_cast<double>(group_pos) * static_cast<double>(j - i - group_pos);
    i = j;
  }

  const double pairs = static_cast<double>(n_pos) * static_cast<double>(n_neg);
  double result =
      (pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) / pairs;
  if (tie == TiePolicy::Strict) result -= 0.5 * tied_pairs / pairs;
  return result;
}

namespace {

std::optional<double> try_auc(const std::vector<double>& scores, const std::vector<int>& labels,
                              TiePolicy tie) {
  bool has_pos = false, has_neg = false;
  for (int y : labels) (y > 0 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg || labels.empty()) return std::nullopt;
  return auc(scores, labels, tie);
}

MetricsReport::CaseGroup group_eval(const std::vector<PredictionBundle>& bundles,
                                    std::span<const InteractionSample> test,
                                    const std::vector<size_t>& positives, TiePolicy tie) {
  MetricsReport::CaseGroup group;
  group.n_pos = positives.size();
  if (positives.empty()) return group;

  std::unordered_set<long> sessions;
  for (size_t i : positives) sessions.insert(test[i].session_id);

  std::vector<double> scores;
  std::vector<int> labels;
  for (size_t i : positives) {
    scores.push_back(bundles[i].cvr_score());
    labels.push_back(1);
  }
  for (size_t i = 0; i < test.size(); ++i) {
    const auto& s = test[i];
    if (s.c == 1 && s.o == 0 && sessions.count(s.session_id)) {
      scores.push_back(bundles[i].cvr_score());
      labels.push_back(0);
      ++group.n_neg;
    }
  }
  group.cvr_auc = try_auc(scores, labels, tie);
  return group;
}

void fill_case_split(MetricsReport& report, const std::vector<PredictionBundle>& bundles,
                     std::span<const InteractionSample> test, TiePolicy tie) {
  std::vector<size_t> good, bad;
  for (size_t i = 0; i < test.size(); ++i) {
    if (test[i].o != 1) continue;
    (test[i].cart_origin_session >= 0 ? bad : good).push_back(i);
  }
  report.n_conversions = good.size() + bad.size();
  report.good_case = group_eval(bundles, test, good, tie);
  report.bad_case = group_eval(bundles, test, bad, tie);
}

}  // namespace

MetricsReport evaluate(const Model& model, std::span<const InteractionSample> test,
                       TiePolicy tie) {
  if (test.empty()) throw UsageError("evaluate: empty test set");
  const auto bundles = model.predict(test);

  MetricsReport report;
  report.n_samples = test.size();

  std::vector<double> s_ctr, s_ctcvr, s_cvr;
  std::vector<int> y_ctr, y_ctcvr, y_cvr;
  for (size_t i = 0; i < test.size(); ++i) {
    const auto& s = test[i];
    const auto& b = bundles[i];
    s_ctr.push_back(b.pctr);
    y_ctr.push_back(s.c);
    s_ctcvr.push_back(b.pctcvr);
    y_ctcvr.push_back(s.c * s.o);
    if (s.c == 1) {
      s_cvr.push_back(b.cvr_score());
      y_cvr.push_back(s.o);
      ++report.n_clicked;
    }
  }
  report.ctr_auc = try_auc(s_ctr, y_ctr, tie);
  report.ctcvr_auc = try_auc(s_ctcvr, y_ctcvr, tie);
  report.cvr_auc = try_auc(s_cvr, y_cvr, tie);

  fill_case_split(report, bundles, test, tie);
  return report;
}

MetricsReport case_split_eval(const Model& model, std::span<const InteractionSample> test,
                              TiePolicy tie) {
  if (test.empty()) throw UsageError("case_split_eval: empty test set");
  const auto bundles = model.predict(test);
  MetricsReport report;
  report.n_samples = test.size();
  fill_case_split(report, bundles, test, tie);
  return report;
}

namespace {

std::string opt_str(const std::optional<double>& v) {
  if (!v) return "na";
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << *v;
  return os.str();
}

}  // namespace

std::string MetricsReport::to_string() const {
  std::ostringstream os;
  os << "samples " << n_samples << " (clicked " << n_clicked << ", conversions "
     << n_conversions << ")\n";
  os << "ctr_auc   " << opt_str(ctr_auc) << "\n";
  os << "ctcvr_auc " << opt_str(ctcvr_auc) << "\n";
  os << "cvr_auc   " << opt_str(cvr_auc) << "\n";
  os << "good_case cvr_auc " << opt_str(good_case.cvr_auc) << " (pos " << good_case.n_pos
     << ", neg " << good_case.n_neg << ")\n";
  os << "bad_case  cvr_auc " << opt_str(bad_case.cvr_auc) << " (pos " << bad_case.n_pos
     << ", neg " << bad_case.n_neg << ")\n";
  return os.str();
}

std::string MetricsReport::to_record() const {
  std::ostringstream os;
  os << "n=" << n_samples << " clicked=" << n_clicked << " conversions=" << n_conversions
     << " ctr_auc=" << opt_str(ctr_auc) << " ctcvr_auc=" << opt_str(ctcvr_auc)
     << " cvr_auc=" << opt_str(cvr_auc) << " good_case_cvr_auc=" << opt_str(good_case.cvr_auc)
     << " bad_case_cvr_auc=" << opt_str(bad_case.cvr_auc);
  return os.str();
}

}  // namespace esmc
