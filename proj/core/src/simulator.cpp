#include "esmc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace esmc {

void SimulatorConfig::validate() const {
  if (n_users == 0 || n_items == 0) throw ConfigError("simulator: need users and items");
  if (n_sessions_per_user == 0) throw ConfigError("simulator: need at least one session");
  if (exposures_per_session == 0) throw ConfigError("simulator: need at least one exposure");
  if (exposures_per_session > n_items)
    throw ConfigError("simulator: exposures_per_session cannot exceed n_items");
  for (double p : {base_click_prob, cart_given_click_prob, purchase_given_cart_prob,
                   deferred_purchase_rate, global_domain_cart_rate})
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("simulator: probabilities must be in [0,1]");
}

SimulatorConfig SimulatorConfig::table1_preset() {
  SimulatorConfig cfg;
  cfg.n_users = 2000;
  cfg.n_items = 200;
  cfg.n_sessions_per_user = 10;
  cfg.exposures_per_session = 50;  // 1e6 exposures total
  cfg.base_click_prob = 0.06096;
  cfg.cart_given_click_prob = 0.22412;  // click * cart * buy = 0.01093 purchases/exposure
  cfg.purchase_given_cart_prob = 0.8;
  cfg.deferred_purchase_rate = 0.0;
  cfg.global_domain_cart_rate = 0.0;
  cfg.affinity_dim = 0;
  return cfg;
}

Simulator::Simulator(const SimulatorConfig& config) : cfg_(config) {
  cfg_.validate();
  if (cfg_.affinity_dim > 0) {
    Rng rng(cfg_.seed * 0x9e3779b97f4a7c15ull + 1);
    const double sd = std::pow(static_cast<double>(cfg_.affinity_dim), -0.25);
    user_vecs_.resize(cfg_.n_users * cfg_.affinity_dim);
    item_vecs_.resize(cfg_.n_items * cfg_.affinity_dim);
    for (double& v : user_vecs_) v = rng.normal() * sd;
    for (double& v : item_vecs_) v = rng.normal() * sd;
  }
}

double Simulator::affinity_dot(long user, long item) const {
  if (cfg_.affinity_dim == 0) return 0.0;
  const double* u = user_vecs_.data() + static_cast<size_t>(user) * cfg_.affinity_dim;
  const double* v = item_vecs_.data() + static_cast<size_t>(item) * cfg_.affinity_dim;
  double dot = 0.0;
  for (size_t k = 0; k < cfg_.affinity_dim; ++k) dot += u[k] * v[k];
  return dot;
}

PairProbs Simulator::ground_truth_probabilities(long user, long item) const {
  PairProbs p{cfg_.base_click_prob, cfg_.cart_given_click_prob, cfg_.purchase_given_cart_prob};
  if (cfg_.affinity_dim == 0) return p;
  // Lognormal sharpening with mean correction: dot is ~N(0,1), so
  // E[exp(s*dot - s^2/2)] ~ 1 and the marginal rates stay near the bases.
  const double s = cfg_.affinity_scale;
  const double f = std::exp(s * affinity_dot(user, item) - 0.5 * s * s);
  auto clamp01 = [](double x) { return x > 1.0 ? 1.0 : x; };
  p.p_click = clamp01(p.p_click * f);
  p.p_cart = clamp01(p.p_cart * f);
  p.p_buy = clamp01(p.p_buy * f);
  return p;
}

EventLog Simulator::simulate() const {
  EventLog log;
  log.config = cfg_;

  const size_t U = cfg_.n_users, S = cfg_.n_sessions_per_user, E = cfg_.exposures_per_session;
  Rng rng(cfg_.seed);
  long timestamp = 0;

  // Purchases deferred to (round, user) -> items to buy from the cart page.
  std::unordered_map<uint64_t, std::vector<long>> pending;
  auto pending_key = [U](size_t round, size_t user) {
    return static_cast<uint64_t>(round) * U + user;
  };

  std::vector<long> pool(cfg_.n_items);
  std::iota(pool.begin(), pool.end(), 0);

  log.events.reserve(U * S * E + U * S * E / 8);

  for (size_t round = 0; round < S; ++round) {
    for (size_t user = 0; user < U; ++user) {
      const long sid = static_cast<long>(round * U + user);

      std::vector<long> to_buy;
      if (auto it = pending.find(pending_key(round, user)); it != pending.end()) {
        to_buy = std::move(it->second);
        pending.erase(it);
      }
      if (to_buy.size() > E) {
        // more cart-page purchases than exposure slots: push overflow on
        std::vector<long> overflow(to_buy.begin() + static_cast<long>(E), to_buy.end());
        to_buy.resize(E);
        if (round + 1 < S) {
          auto& next = pending[pending_key(round + 1, user)];
          next.insert(next.end(), overflow.begin(), overflow.end());
        }
      }

      // E distinct exposed items via partial Fisher-Yates
      std::vector<long> exposed(E);
      for (size_t k = 0; k < E; ++k) {
        size_t j = k + static_cast<size_t>(rng.bounded(cfg_.n_items - k));
        std::swap(pool[k], pool[j]);
        exposed[k] = pool[k];
      }

      // cart-page purchases occupy exposure slots for their items
      std::vector<bool> forced(E, false);
      for (long item : to_buy) {
        size_t slot = E;
        for (size_t k = 0; k < E; ++k)
          if (exposed[k] == item) {
            slot = k;
            break;
          }
        if (slot == E) {
          for (size_t k = 0; k < E; ++k)
            if (!forced[k]) {
              slot = k;
              break;
            }
          exposed[slot] = item;
        }
        forced[slot] = true;
      }

      for (size_t k = 0; k < E; ++k) {
        const long item = exposed[k];
        log.events.push_back({static_cast<long>(user), item, sid, Domain::Rec,
                              EventKind::Exposure, timestamp++});
        if (forced[k]) {
          // user came back for the cart: purchase without feed click/cart
          log.events.push_back({static_cast<long>(user), item, sid, Domain::Rec,
                                EventKind::Purchase, timestamp++});
          continue;
        }
        const PairProbs p = ground_truth_probabilities(static_cast<long>(user), item);
        if (!rng.bernoulli(p.p_click)) continue;
        log.events.push_back({static_cast<long>(user), item, sid, Domain::Rec,
                              EventKind::Click, timestamp++});
        if (!rng.bernoulli(p.p_cart)) continue;
        const Domain cart_domain =
            rng.bernoulli(cfg_.global_domain_cart_rate) ? Domain::Search : Domain::Rec;
        log.events.push_back({static_cast<long>(user), item, sid, cart_domain, EventKind::Cart,
                              timestamp++});
        if (!rng.bernoulli(p.p_buy)) continue;
        if (rng.bernoulli(cfg_.deferred_purchase_rate)) {
          if (round + 1 < S) {
            const size_t target = round + 1 + static_cast<size_t>(rng.bounded(S - 1 - round));
            auto& list = pending[pending_key(target, user)];
            if (std::find(list.begin(), list.end(), item) == list.end()) list.push_back(item);
          }
          // cart in the final session: the purchase never lands in the log
        } else {
          log.events.push_back({static_cast<long>(user), item, sid, Domain::Rec,
                                EventKind::Purchase, timestamp++});
        }
      }
    }
  }
  return log;
}

EventLog::Counts EventLog::counts() const {
  Counts c;
  // key: (session, item) is unique per exposure
  std::unordered_map<uint64_t, bool> cart_in_session;
  cart_in_session.reserve(events.size() / 8 + 1);
  auto key = [this](const Event& e) {
    return static_cast<uint64_t>(e.session) * config.n_items + static_cast<uint64_t>(e.item);
  };
  for (const auto& e : events) {
    switch (e.kind) {
      case EventKind::Exposure: ++c.exposures; break;
      case EventKind::Click: ++c.clicks; break;
      case EventKind::Cart:
        ++c.carts;
        if (e.domain == Domain::Search) ++c.search_carts;
        cart_in_session[key(e)] = true;
        break;
      case EventKind::Purchase:
        ++c.purchases;
        if (cart_in_session.count(key(e)))
          ++c.same_session_purchases;
        else
          ++c.deferred_purchases;
        break;
    }
  }
  return c;
}

FeatureSchema Simulator::dataset_schema(const SimulatorConfig& config) {
  FeatureSchema schema;
  schema.oov_policy = OovPolicy::ReservedBucket;
  schema.fields = {{"user", config.n_users + 1, 8},
                   {"item", config.n_items + 1, 8},
                   {"affinity", 17, 8}};
  return schema;
}

namespace {

long affinity_bucket(double dot) {
  double t = (std::tanh(dot) + 1.0) * 0.5;  // in [0, 1]
  long b = static_cast<long>(t * 16.0);
  return 1 + std::clamp<long>(b, 0, 15);
}

}  // namespace

std::vector<InteractionSample> Simulator::export_dataset(const EventLog& log) const {
  struct Labels {
    int c = 0, a = 0, o = 0;
    Domain domain = Domain::Rec;
  };
  std::unordered_map<uint64_t, Labels> labels;
  labels.reserve(log.events.size() / 4 + 1);
  auto key = [this](const Event& e) {
    return static_cast<uint64_t>(e.session) * cfg_.n_items + static_cast<uint64_t>(e.item);
  };
  for (const auto& e : log.events) {
    switch (e.kind) {
      case EventKind::Exposure: break;
      case EventKind::Click: labels[key(e)].c = 1; break;
      case EventKind::Cart: {
        auto& l = labels[key(e)];
        l.a = 1;
        l.domain = e.domain;
        break;
      }
      case EventKind::Purchase: labels[key(e)].o = 1; break;
    }
  }

  std::vector<InteractionSample> samples;
  samples.reserve(cfg_.total_exposures());
  for (const auto& e : log.events) {
    if (e.kind != EventKind::Exposure) continue;
    InteractionSample s;
    s.user_id = e.user;
    s.item_id = e.item;
    s.session_id = e.session;
    auto it = labels.find(key(e));
    if (it != labels.end()) {
      s.c = it->second.c;
      s.a = it->second.a;
      s.o = it->second.o;
      s.domain = it->second.domain;
    }
    s.feature_ids = {1 + e.user, 1 + e.item, affinity_bucket(affinity_dot(e.user, e.item))};
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<InteractionSample> simulate_dataset(const SimulatorConfig& config) {
  Simulator sim(config);
  return sim.export_dataset(sim.simulate());
}

GapReport gap_oracle(SimulatorConfig config, size_t n_samples, uint64_t seed) {
  if (n_samples == 0) throw UsageError("gap_oracle: n_samples must be positive");
  config.seed = seed;
  const size_t per_user = config.n_sessions_per_user * config.exposures_per_session;
  config.n_users = std::max<size_t>(1, (n_samples + per_user - 1) / per_user);

  Simulator sim(config);
  const EventLog log = sim.simulate();
  const auto c = log.counts();

  GapReport report;
  report.n_samples = c.exposures;
  report.n_deferred = c.deferred_purchases;

  const double n = static_cast<double>(c.exposures);
  report.ground_truth_E_R = static_cast<double>(c.purchases) / n;

  // ESMM2-style estimate: product of the per-session empirical conditionals
  // P(click|exposure) * P(cart|click) * P(purchase|cart, same session).
  // Cross-session purchases never enter the last factor.
  const double p_click = c.clicks ? static_cast<double>(c.clicks) / n : 0.0;
  const double p_cart = c.clicks ? static_cast<double>(c.carts) / c.clicks : 0.0;
  const double p_buy_same = c.carts ? static_cast<double>(c.same_session_purchases) / c.carts : 0.0;
  report.chain_rule_E_R = p_click * p_cart * p_buy_same;

  report.gap = report.ground_truth_E_R - report.chain_rule_E_R;

  // Loose bound: ground-truth left/right terms with the subtracted
  // estimation term dropped and probabilities bounded by 1, evaluated on
  // the same sample: P(purchase|cart) * P(cart|click).
  const double p_buy_all = c.carts ? static_cast<double>(c.purchases) / c.carts : 0.0;
  report.upper_bound = p_buy_all * p_cart;

  const double p_def = static_cast<double>(c.deferred_purchases) / n;
  report.monte_carlo_stderr = std::sqrt(p_def * (1.0 - p_def) / n);
  if (c.deferred_purchases < 10) {
    report.low_support = true;
    report.monte_carlo_stderr = std::max(
        report.monte_carlo_stderr, std::sqrt(static_cast<double>(c.deferred_purchases + 1)) / n);
  }
  return report;
}

std::string GapReport::to_string() const {
  std::ostringstream os;
  os << "n_samples " << n_samples << "\n"
     << "ground_truth_E_R " << ground_truth_E_R << "\n"
     << "chain_rule_E_R " << chain_rule_E_R << "\n"
     << "gap " << gap << "\n"
     << "upper_bound " << upper_bound << "\n"
     << "monte_carlo_stderr " << monte_carlo_stderr << "\n"
     << "n_deferred " << n_deferred << "\n"
     << "low_support " << (low_support ? 1 : 0) << "\n";
  return os.str();
}

}  // namespace esmc
