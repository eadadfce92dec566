#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "esmc/dataset.hpp"

namespace esmc {

// Generative configuration. Base rates default to the observed industrial
// sparsities (click ~ 0.061, purchase ~ 0.0109 of exposures, purchase|cart
// 0.8). deferred_purchase_rate (rho) is the probability that a purchase is
// executed from the cart page in a later session instead of the session of
// its cart event, which is exactly the confusion the gap oracle measures.
struct SimulatorConfig {
  size_t n_users = 200;
  size_t n_items = 100;
  size_t n_sessions_per_user = 10;
  size_t exposures_per_session = 40;
  double base_click_prob = 0.06096;
  double cart_given_click_prob = 0.22412;
  double purchase_given_cart_prob = 0.8;
  double deferred_purchase_rate = 0.0;  // rho
  double global_domain_cart_rate = 0.0;
  size_t affinity_dim = 0;  // 0 = homogeneous pairs (cart independent of click)
  double affinity_scale = 1.0;
  uint64_t seed = 1;

  void validate() const;
  size_t total_exposures() const {
    return n_users * n_sessions_per_user * exposures_per_session;
  }

  // Sized for one million exposures at the industrial base rates.
  static SimulatorConfig table1_preset();
};

enum class EventKind { Exposure, Click, Cart, Purchase };

struct Event {
  long user = 0;
  long item = 0;
  long session = 0;  // global id: round * n_users + user, so later rounds sort later
  Domain domain = Domain::Rec;
  EventKind kind = EventKind::Exposure;
  long timestamp = 0;
};

struct EventLog {
  SimulatorConfig config;
  std::vector<Event> events;

  struct Counts {
    size_t exposures = 0;
    size_t clicks = 0;
    size_t carts = 0;
    size_t search_carts = 0;
    size_t purchases = 0;
    size_t same_session_purchases = 0;
    size_t deferred_purchases = 0;  // realized in a later session
    size_t dropped_deferrals = 0;   // fell off the log horizon
  };
  Counts counts() const;
};

struct GapReport {
  double ground_truth_E_R = 0.0;  // realized purchases per exposure
  double chain_rule_E_R = 0.0;    // product of per-session empirical conditionals
  double gap = 0.0;
  double upper_bound = 0.0;
  double monte_carlo_stderr = 0.0;
  size_t n_samples = 0;
  size_t n_deferred = 0;
  bool low_support = false;  // too few cross-session purchases; stderr widened

  std::string to_string() const;
};

// Exact per-pair generative conditionals, the oracle the simulator draws
// from: (p_click, p_cart_given_click, p_buy_given_cart).
struct PairProbs {
  double p_click = 0.0;
  double p_cart = 0.0;
  double p_buy = 0.0;
};

class Simulator {
 public:
  explicit Simulator(const SimulatorConfig& config);

  const SimulatorConfig& config() const { return cfg_; }

  PairProbs ground_truth_probabilities(long user, long item) const;
  double affinity_dot(long user, long item) const;

  EventLog simulate() const;

  static FeatureSchema dataset_schema(const SimulatorConfig& config);

  // One InteractionSample per (user, item, session) exposure, raw labels
  // taken from events inside that session only. A purchase executed from
  // the cart page therefore surfaces as (c=0, a=0, o=1).
  std::vector<InteractionSample> export_dataset(const EventLog& log) const;

 private:
  SimulatorConfig cfg_;
  std::vector<double> user_vecs_;  // n_users x affinity_dim
  std::vector<double> item_vecs_;  // n_items x affinity_dim
};

// Convenience: simulate + export in one call.
std::vector<InteractionSample> simulate_dataset(const SimulatorConfig& config);

// Monte-Carlo check of the cross-session gap: widens the configured user
// count until at least n_samples exposures are generated, then compares the
// realized conversion rate against the per-session chain-rule estimate.
GapReport gap_oracle(SimulatorConfig config, size_t n_samples, uint64_t seed);

}  // namespace esmc
