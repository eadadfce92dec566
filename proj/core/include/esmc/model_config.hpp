#pragma once

#include <string>
#include <vector>

#include "esmc/common.hpp"

namespace esmc {

enum class ModelVariant { SharedBottom, ESMM, MMoE, ESMM2, ESMC, ESMS, ESMC2, ESMS2 };

const char* variant_name(ModelVariant v);
ModelVariant parse_variant(const std::string& name);

inline bool is_esmg(ModelVariant v) {
  return v == ModelVariant::ESMC2 || v == ModelVariant::ESMS2;
}
inline bool is_siamese(ModelVariant v) {
  return v == ModelVariant::ESMS || v == ModelVariant::ESMS2;
}
inline bool has_twin_towers(ModelVariant v) {
  return v == ModelVariant::ESMC || v == ModelVariant::ESMC2;
}

// Multi-task objective weights.
//   w1 — CTR cross entropy
//   w2 — CTCVR cross entropy
//   w3 — CTCAR cross entropy (recommendation-domain carts)
//   w4 — ESMC/ESMS family: KL parameter constraint; ESMC2/ESMS2: global-domain
//        CTCAR cross entropy
//   w5 — ESMC2: KL parameter constraint; must be 0 for ESMS2
struct LossWeights {
  double w1 = 1.0;
  double w2 = 1.0;
  double w3 = 1.0;
  double w4 = 0.0;
  double w5 = 0.0;
  bool kl_symmetric = false;  // propagate the KL gradient into both towers

  void validate(ModelVariant variant) const;
};

struct ModelConfig {
  ModelVariant variant = ModelVariant::ESMC;
  std::vector<size_t> tower_hidden = {64, 32};  // hidden dims; the sigmoid unit is appended
  size_t expert_count = 2;                      // MMoE
  std::vector<size_t> expert_hidden = {};       // MMoE expert / shared-bottom hidden dims
  size_t expert_dim = 32;                       // expert / shared-bottom output width
  double leaky_slope = 0.01;
  LossWeights weights;
  uint64_t seed = 1;

  void validate() const;
};

}  // namespace esmc
