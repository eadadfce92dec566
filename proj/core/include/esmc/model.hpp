#pragma once

#include <span>
#include <string>
#include <vector>

#include "esmc/dataset.hpp"
#include "esmc/embedding.hpp"
#include "esmc/layers.hpp"
#include "esmc/model_config.hpp"

namespace esmc {

// All probability outputs are clamped into [kProbEps, 1 - kProbEps].
constexpr double kProbEps = 1e-7;

inline double clip_prob(double p) {
  return p < kProbEps ? kProbEps : (p > 1.0 - kProbEps ? 1.0 - kProbEps : p);
}
// 1 where the clamp is inactive, 0 where it saturates.
inline double clip_gate(double p) {
  return (p >= kProbEps && p <= 1.0 - kProbEps) ? 1.0 : 0.0;
}

// Per-sample conditionals and their sequential compositions. The composed
// fields are literal products of the (clipped) conditionals:
//   pctcar = pctr * pcar
//   pctcvr = pctr * pcvr            (two-factor variants)
//   pctcvr = pctr * pcar * pcvr     (three-factor chain, ESMM2)
struct PredictionBundle {
  double pctr = 0.0;
  double pcar = 0.0;
  double pcvr = 0.0;
  double pctcar = 0.0;
  double pctcvr = 0.0;
  bool has_car = false;       // pcar / pctcar populated
  bool three_factor = false;  // ESMM2 chain composition

  // Post-click conversion estimate used for CVR ranking; under the
  // three-factor chain the conditional on click is pcar * pcvr.
  double cvr_score() const { return three_factor ? pcar * pcvr : pcvr; }
};

// d(loss)/d(clipped conditional) for one sample.
struct BundleGrad {
  double dpctr = 0.0;
  double dpcar = 0.0;
  double dpcvr = 0.0;
};

class Model {
 public:
  Model(const ModelConfig& cfg, const FeatureSchema& schema);

  struct SampleCache {
    Vec embedding;
    std::vector<MlpCache> tower;  // aligned with tower order
    std::vector<Vec> expert_out;  // MMoE
    Vec gate_ctr, gate_cvr;       // softmax mixture weights
    Vec mix_ctr, mix_cvr;
    double raw_pctr = 0.0, raw_pcar = 0.0, raw_pcvr = 0.0;  // pre-clip sigmoids
  };

  struct ForwardBatch {
    std::vector<SampleCache> caches;
    std::vector<PredictionBundle> bundles;
  };

  struct Gradients {
    EmbeddingTables::SparseGrad emb;
    std::vector<MlpGrads> towers;
  };

  ForwardBatch forward_batch(std::span<const InteractionSample> batch) const;
  std::vector<PredictionBundle> predict(std::span<const InteractionSample> batch) const;
  PredictionBundle predict_one(const InteractionSample& s) const;

  void backward_batch(std::span<const InteractionSample> batch, const ForwardBatch& fwd,
                      std::span<const BundleGrad> bundle_grads, Gradients& grads) const;

  Gradients zero_grads() const;

  const ModelConfig& config() const { return cfg_; }
  ModelConfig& config() { return cfg_; }
  const FeatureSchema& schema() const { return tables_.schema(); }
  EmbeddingTables& tables() { return tables_; }
  const EmbeddingTables& tables() const { return tables_; }

  size_t tower_count() const { return towers_.size(); }
  const std::string& tower_name(size_t i) const { return tower_names_[i]; }
  Mlp& tower(size_t i) { return towers_[i]; }
  const Mlp& tower(size_t i) const { return towers_[i]; }
  int tower_index(const std::string& name) const;  // -1 if absent

  // Twin towers linked by the parameter constraint (ESMC/ESMC2).
  const Mlp& car_tower() const;
  const Mlp& cvr_tower() const;
  int car_tower_index() const;
  int cvr_tower_index() const;

  // Named views over every parameter group, embeddings first.
  struct ParamGroup {
    std::string name;
    std::span<double> data;
  };
  struct ConstParamGroup {
    std::string name;
    std::span<const double> data;
  };
  std::vector<ParamGroup> param_groups();
  std::vector<ConstParamGroup> param_groups() const;

  void save_checkpoint(const std::string& path) const;
  static Model load_checkpoint(const std::string& path);

 private:
  void build_towers(Rng& rng);
  PredictionBundle forward_one(const InteractionSample& s, SampleCache* cache) const;

  ModelConfig cfg_;
  EmbeddingTables tables_;
  std::vector<Mlp> towers_;
  std::vector<std::string> tower_names_;
};

// Dense per-table gradient view (untouched rows are zero); used by the
// finite-difference harness.
Vec dense_table_grad(const Model& model, const Model::Gradients& grads, size_t field);

}  // namespace esmc
