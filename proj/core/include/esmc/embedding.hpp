#pragma once

#include <span>
#include <unordered_map>
#include <string>
#include <vector>

#include "esmc/linalg.hpp"
#include "esmc/optimizer.hpp"

namespace esmc {

enum class OovPolicy { ReservedBucket, Reject };

struct FeatureField {
  std::string name;
  size_t vocab_size = 0;
  size_t embed_dim = 0;
};

// Ordered feature fields. Field order fixes the layout of both the sample
// feature-id list and the concatenated embedding vector.
struct FeatureSchema {
  std::vector<FeatureField> fields;
  OovPolicy oov_policy = OovPolicy::ReservedBucket;

  size_t total_dim() const;
  void validate() const;
  uint64_t hash() const;

  std::string serialize() const;
  static FeatureSchema parse(const std::string& text);
};

// One table per field, shared by every tower of the model: any update made
// through one task's loss is visible to all tasks.
class EmbeddingTables {
 public:
  EmbeddingTables() = default;
  EmbeddingTables(const FeatureSchema& schema, Rng& rng);

  // Concatenated rows W_field[id], schema order. Under ReservedBucket an
  // out-of-range id reads row 0; under Reject it is an input error.
  Vec embed(std::span<const long> field_ids) const;

  // Accumulates the upstream gradient of the concatenated vector into a
  // row-sparse gradient buffer (repeated ids add up), then applies one
  // Adagrad step per table restricted to the touched rows.
  struct SparseGrad {
    // per field: touched row index -> summed gradient
    std::vector<std::vector<size_t>> rows;
    std::vector<std::vector<double>> grads;
    std::vector<std::unordered_map<size_t, size_t>> slot_of;
  };

  SparseGrad zero_grad() const;
  void accumulate_grad(std::span<const long> field_ids, const Vec& upstream, SparseGrad& g) const;
  void apply(const SparseGrad& g, std::vector<AdagradState>& states, const LrSchedule& schedule);

  std::vector<AdagradState> make_states(double decay, double epsilon) const;

  size_t field_count() const { return tables_.size(); }
  Matrix& table(size_t f) { return tables_[f]; }
  const Matrix& table(size_t f) const { return tables_[f]; }
  const FeatureSchema& schema() const { return schema_; }

 private:
  size_t resolve_row(size_t field, long id) const;

  FeatureSchema schema_;
  std::vector<Matrix> tables_;
};

}  // namespace esmc
