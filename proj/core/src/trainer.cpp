#include "esmc/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

namespace esmc {

void TrainConfig::validate() const {
  model.validate();
  weights.validate(model.variant);
  if (!(lr >= 0.0)) throw ConfigError("train: lr must be >= 0");
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (epochs == 0) throw ConfigError("train: epochs must be >= 1");
  if (warmup_steps < 0) throw ConfigError("train: warmup_steps must be >= 0");
}

TrainResult train(const TrainConfig& config, const FeatureSchema& schema,
                  const std::vector<InteractionSample>& samples) {
  config.validate();
  if (samples.empty()) throw UsageError("train: no samples");

  ModelConfig mcfg = config.model;
  mcfg.weights = config.weights;  // recorded in checkpoints
  TrainResult result{Model(mcfg, schema), {}, false, {}};
  Model& model = result.model;

  LrSchedule schedule{config.lr, config.warmup_steps};

  // optimizer state: one per tower layer weight/bias, plus embedding tables
  auto emb_states = model.tables().make_states(config.adagrad_decay, config.adagrad_epsilon);
  std::vector<std::vector<AdagradState>> tower_states(model.tower_count());
  for (size_t ti = 0; ti < model.tower_count(); ++ti) {
    for (const auto& layer : model.tower(ti).layers()) {
      tower_states[ti].emplace_back(layer.weight.size(), config.adagrad_decay,
                                    config.adagrad_epsilon);
      tower_states[ti].emplace_back(layer.bias.size(), config.adagrad_decay,
                                    config.adagrad_epsilon);
    }
  }

  ObjectiveOptions opts;
  opts.enforce_hierarchy = config.enforce_hierarchy;

  Rng shuffle_rng(config.seed);
  std::vector<size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);

  long step = 0;
  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) shuffle_rng.shuffle(order);
    for (size_t begin = 0; begin < samples.size(); begin += config.batch_size) {
      const size_t end = std::min(begin + config.batch_size, samples.size());
      std::vector<InteractionSample> batch;
      batch.reserve(end - begin);
      for (size_t k = begin; k < end; ++k) batch.push_back(samples[order[k]]);

      auto grads = model.zero_grads();
      ObjectiveResult res;
      try {
        res = compute_objective(model, batch, config.weights, opts, &grads);
        if (!std::isfinite(res.total))
          throw NumericError("non-finite loss at step " + std::to_string(step));

        for (size_t ti = 0; ti < model.tower_count(); ++ti) {
          auto& layers = model.tower(ti).layers();
          for (size_t li = 0; li < layers.size(); ++li) {
            const std::string group = model.tower_name(ti) + "/" + std::to_string(li);
            adagrad_step(std::span<double>(layers[li].weight.data),
                         std::span<const double>(grads.towers[ti].dweight[li].data),
                         tower_states[ti][2 * li], schedule, group + "/weight");
            adagrad_step(std::span<double>(layers[li].bias),
                         std::span<const double>(grads.towers[ti].dbias[li]),
                         tower_states[ti][2 * li + 1], schedule, group + "/bias");
          }
        }
        model.tables().apply(grads.emb, emb_states, schedule);
      } catch (const NumericError& e) {
        // leave the model at its last good state and stop
        result.aborted = true;
        result.abort_reason = e.what();
        return result;
      }

      result.log.push_back({step, schedule.at(step), res.l_ctr, res.l_ctcar, res.l_ctcvr,
                            res.l_ctcar_global, res.l_kl, res.total});
      ++step;
    }
  }
  return result;
}

void write_train_log(const std::vector<TrainStepLog>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("write_train_log: cannot open '" + path + "'");
  out << "step lr l_ctr l_ctcar l_ctcvr l_ctcar_global l_kl total\n";
  out.precision(12);
  for (const auto& e : log)
    out << e.step << ' ' << e.lr << ' ' << e.l_ctr << ' ' << e.l_ctcar << ' ' << e.l_ctcvr
        << ' ' << e.l_ctcar_global << ' ' << e.l_kl << ' ' << e.total << '\n';
}

AblationReport ablate_calibration(const TrainConfig& config, const FeatureSchema& schema,
                                  std::vector<InteractionSample> raw_train,
                                  std::vector<InteractionSample> raw_test, TiePolicy tie) {
  AblationReport report;

  std::vector<InteractionSample> cal_train = raw_train;
  std::vector<InteractionSample> cal_test = std::move(raw_test);
  report.stats = calibrate(cal_train);
  calibrate(cal_test);

  TrainResult with_cal = train(config, schema, cal_train);
  report.calibrated = evaluate(with_cal.model, cal_test, tie);

  TrainConfig raw_cfg = config;
  raw_cfg.enforce_hierarchy = false;  // raw labels may violate o <= a <= c
  TrainResult without_cal = train(raw_cfg, schema, raw_train);
  report.raw = evaluate(without_cal.model, cal_test, tie);

  return report;
}

}  // namespace esmc
