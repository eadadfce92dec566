#include "esmc/sweep.hpp"

#include <atomic>
#include <sstream>
#include <thread>

namespace esmc {

double& resolve_sweep_weight(LossWeights& weights, ModelVariant variant,
                             const std::string& parameter) {
  if (parameter == "w1") return weights.w1;
  if (parameter == "w2") return weights.w2;
  if (parameter == "w3") return weights.w3;
  if (parameter == "w4") return weights.w4;
  if (parameter == "w5") return weights.w5;
  if (parameter == "kl") {
    if (has_twin_towers(variant)) return variant == ModelVariant::ESMC ? weights.w4 : weights.w5;
    throw ConfigError("sweep: 'kl' applies to ESMC/ESMC2 only");
  }
  if (parameter == "global") {
    if (is_esmg(variant)) return weights.w4;
    throw ConfigError("sweep: 'global' applies to ESMC2/ESMS2 only");
  }
  throw ConfigError("sweep: unknown parameter '" + parameter + "'");
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const FeatureSchema& schema,
                                const std::vector<InteractionSample>& train_samples,
                                const std::vector<InteractionSample>& test_samples) {
  if (spec.values.empty()) throw ConfigError("sweep: empty value grid");
  if (spec.seeds.empty()) throw ConfigError("sweep: need at least one seed");

  struct Job {
    double value;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double v : spec.values)
    for (uint64_t s : spec.seeds) jobs.push_back({v, s});

  std::vector<SweepRow> rows(jobs.size());

  auto run_one = [&](size_t ji) {
    const Job& job = jobs[ji];
    SweepRow& row = rows[ji];
    row.variant = variant_name(spec.base.model.variant);
    row.parameter = spec.parameter;
    row.value = job.value;
    row.seed = job.seed;
    try {
      TrainConfig cfg = spec.base;
      resolve_sweep_weight(cfg.weights, cfg.model.variant, spec.parameter) = job.value;
      cfg.model.seed = job.seed;
      cfg.seed = job.seed;
      TrainResult res = train(cfg, schema, train_samples);
      if (res.aborted) throw NumericError(res.abort_reason);
      row.report = evaluate(res.model, test_samples, spec.tie);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
  };

  const size_t workers = std::max<size_t>(1, spec.workers);
  if (workers == 1) {
    for (size_t ji = 0; ji < jobs.size(); ++ji) run_one(ji);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (size_t w = 0; w < std::min(workers, jobs.size()); ++w)
      pool.emplace_back([&] {
        for (size_t ji = next.fetch_add(1); ji < jobs.size(); ji = next.fetch_add(1)) run_one(ji);
      });
    for (auto& t : pool) t.join();
  }
  return rows;
}

namespace {

std::string opt_cell(const std::optional<double>& v) {
  if (!v) return "na";
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << *v;
  return os.str();
}

}  // namespace

std::string sweep_table(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "variant parameter value seed ctr_auc ctcvr_auc cvr_auc good_case_cvr_auc "
        "bad_case_cvr_auc error\n";
  for (const auto& r : rows) {
    os << r.variant << ' ' << r.parameter << ' ' << r.value << ' ' << r.seed << ' ';
    if (r.failed) {
      std::string msg = r.error;
      for (char& ch : msg)
        if (ch == ' ' || ch == '\n') ch = '_';
      os << "na na na na na " << msg << '\n';
    } else {
      os << opt_cell(r.report.ctr_auc) << ' ' << opt_cell(r.report.ctcvr_auc) << ' '
         << opt_cell(r.report.cvr_auc) << ' ' << opt_cell(r.report.good_case.cvr_auc) << ' '
         << opt_cell(r.report.bad_case.cvr_auc) << " -\n";
    }
  }
  return os.str();
}

}  // namespace esmc
