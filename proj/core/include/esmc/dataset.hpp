#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "esmc/embedding.hpp"

namespace esmc {

// Origin of a sample's cart label. `search` marks carts whose add-to-cart
// happened outside the recommendation feed; samples without a cart are rec.
enum class Domain { Rec, Search };

// One (user, item, session) exposure with click / cart / purchase labels.
struct InteractionSample {
  long user_id = 0;
  long item_id = 0;
  long session_id = 0;
  Domain domain = Domain::Rec;
  int c = 0;  // click
  int a = 0;  // cart
  int o = 0;  // purchase
  std::vector<long> feature_ids;
  bool calibrated = false;
  long cart_origin_session = -1;  // set iff calibration moved a cart label here
};

struct CalibrationStats {
  size_t moved = 0;          // cart labels relocated from an earlier session
  size_t implicit_carts = 0; // purchases with no cart anywhere, auto-repaired
  size_t touched = 0;        // samples modified in any way
};

struct HierarchyReport {
  struct Violation {
    size_t index;
    std::string what;
  };
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

enum class HierarchyMode { Raw, Calibrated };

struct DatasetSplit {
  std::vector<InteractionSample> train;
  std::vector<InteractionSample> test;
  long boundary = 0;
};

// Relocates cart labels of cross-session conversions onto the purchase
// sample (one-to-one move: sets c=1, a=1, records cart_origin_session, and
// clears `a` on the origin sample). Purchases with no cart anywhere get an
// implicit cart. Idempotent; only (user, item) pairs with a purchase are
// ever touched.
CalibrationStats calibrate(std::vector<InteractionSample>& samples);

HierarchyReport validate_hierarchy(const std::vector<InteractionSample>& samples,
                                   HierarchyMode mode);

// Line-delimited text format, one sample per line:
//   user item session domain c a o f0 ... f{k-1} cart_origin
// with header `esmc-samples 1 <schema_hash_hex16> <n_features> <raw|calibrated>`.
void write_samples(const std::vector<InteractionSample>& samples, const std::string& path,
                   uint64_t schema_hash);
std::vector<InteractionSample> read_samples(const std::string& path,
                                            uint64_t* schema_hash_out = nullptr);

// train = sessions < boundary, test = sessions >= boundary.
DatasetSplit split_by_session(const std::vector<InteractionSample>& samples, long boundary);

// boundary such that roughly `fraction` of the observed session range lands
// in train; deterministic in the sample set.
long session_boundary_for_fraction(const std::vector<InteractionSample>& samples,
                                   double fraction);

}  // namespace esmc
