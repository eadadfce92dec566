#include "esmc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace esmc {

namespace {

uint64_t pair_key(long user, long item) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(user)) << 32) |
         static_cast<uint64_t>(static_cast<uint32_t>(item));
}

const char* domain_token(Domain d) { return d == Domain::Rec ? "rec" : "search"; }

Domain parse_domain(const std::string& tok, const std::string& where) {
  if (tok == "rec") return Domain::Rec;
  if (tok == "search") return Domain::Search;
  throw InputError(where + ": unknown domain '" + tok + "'");
}

}  // namespace

CalibrationStats calibrate(std::vector<InteractionSample>& samples) {
  CalibrationStats stats;

  std::unordered_map<uint64_t, std::vector<size_t>> groups;
  groups.reserve(samples.size() / 4 + 1);
  for (size_t i = 0; i < samples.size(); ++i)
    groups[pair_key(samples[i].user_id, samples[i].item_id)].push_back(i);

  for (auto& [key, idx] : groups) {
    (void)key;
    std::sort(idx.begin(), idx.end(), [&](size_t lhs, size_t rhs) {
      return samples[lhs].session_id < samples[rhs].session_id;
    });
    for (size_t k = 0; k + 1 < idx.size(); ++k) {
      if (samples[idx[k]].session_id == samples[idx[k + 1]].session_id) {
        const auto& s = samples[idx[k]];
        throw InputError("calibrate: duplicate sample for user " + std::to_string(s.user_id) +
                         " item " + std::to_string(s.item_id) + " session " +
                         std::to_string(s.session_id));
      }
    }

    bool any_purchase = false;
    for (size_t i : idx) any_purchase |= samples[i].o == 1;
    if (!any_purchase) continue;

    // Carts available as move sources: cart present and not already backing
    // its own same-session purchase.
    std::vector<bool> consumed(idx.size(), false);
    for (size_t k = 0; k < idx.size(); ++k) {
      const auto& s = samples[idx[k]];
      if (s.a == 1 && s.o == 1) consumed[k] = true;
    }

    for (size_t k = 0; k < idx.size(); ++k) {
      InteractionSample& buy = samples[idx[k]];
      if (buy.o != 1 || buy.a != 0) continue;
      // latest unconsumed cart in an earlier session
      long best = -1;
      for (size_t j = 0; j < k; ++j) {
        const auto& cand = samples[idx[j]];
        if (cand.a == 1 && cand.o == 0 && !consumed[j]) best = static_cast<long>(j);
      }
      if (best >= 0) {
        InteractionSample& origin = samples[idx[static_cast<size_t>(best)]];
        buy.a = 1;
        buy.c = 1;
        buy.cart_origin_session = origin.session_id;
        buy.domain = origin.domain;
        origin.a = 0;
        origin.domain = Domain::Rec;
        consumed[static_cast<size_t>(best)] = true;
        ++stats.moved;
        stats.touched += 2;
      } else {
        buy.a = 1;
        buy.c = 1;
        ++stats.implicit_carts;
        ++stats.touched;
      }
    }
  }

  for (auto& s : samples) s.calibrated = true;
  return stats;
}

HierarchyReport validate_hierarchy(const std::vector<InteractionSample>& samples,
                                   HierarchyMode mode) {
  HierarchyReport report;
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    std::ostringstream what;
    if (mode == HierarchyMode::Raw) {
      if (s.domain == Domain::Rec && s.a > s.c)
        what << "cart without click (a=" << s.a << ", c=" << s.c << ")";
    } else {
      if (s.o > s.a)
        what << "purchase without cart (o=" << s.o << ", a=" << s.a << ")";
      else if (s.a > s.c)
        what << "cart without click (a=" << s.a << ", c=" << s.c << ")";
    }
    if (what.tellp() > 0) {
      what << " at user " << s.user_id << " item " << s.item_id << " session " << s.session_id;
      report.violations.push_back({i, what.str()});
    }
  }
  return report;
}

void write_samples(const std::vector<InteractionSample>& samples, const std::string& path,
                   uint64_t schema_hash) {
  std::ofstream out(path);
  if (!out) throw InputError("write_samples: cannot open '" + path + "' for writing");
  size_t n_features = samples.empty() ? 0 : samples.front().feature_ids.size();
  bool all_calibrated = !samples.empty();
  for (const auto& s : samples) all_calibrated = all_calibrated && s.calibrated;
  out << "esmc-samples 1 " << to_hex16(schema_hash) << ' ' << n_features << ' '
      << (all_calibrated ? "calibrated" : "raw") << '\n';
  for (const auto& s : samples) {
    if (s.feature_ids.size() != n_features)
      throw InputError("write_samples: inconsistent feature count");
    out << s.user_id << ' ' << s.item_id << ' ' << s.session_id << ' '
        << domain_token(s.domain) << ' ' << s.c << ' ' << s.a << ' ' << s.o;
    for (long f : s.feature_ids) out << ' ' << f;
    out << ' ' << s.cart_origin_session << '\n';
  }
  if (!out) throw InputError("write_samples: write failed for '" + path + "'");
}

std::vector<InteractionSample> read_samples(const std::string& path, uint64_t* schema_hash_out) {
  std::ifstream in(path);
  if (!in) throw InputError("read_samples: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ":1: empty file");

  std::istringstream hs(line);
  std::string magic, hash_hex, mode;
  int version = 0;
  size_t n_features = 0;
  if (!(hs >> magic >> version >> hash_hex >> n_features >> mode) || magic != "esmc-samples")
    throw InputError(path + ":1: bad header (expected 'esmc-samples 1 <hash> <k> <mode>')");
  if (version != 1) throw InputError(path + ":1: unsupported version");
  if (mode != "raw" && mode != "calibrated")
    throw InputError(path + ":1: unknown mode '" + mode + "'");
  const bool calibrated = mode == "calibrated";
  if (schema_hash_out) *schema_hash_out = from_hex(hash_hex);

  std::vector<InteractionSample> samples;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    InteractionSample s;
    std::string dom;
    const std::string where = path + ":" + std::to_string(line_no);
    if (!(ls >> s.user_id >> s.item_id >> s.session_id >> dom >> s.c >> s.a >> s.o))
      throw InputError(where + ": malformed sample line");
    s.domain = parse_domain(dom, where);
    s.feature_ids.resize(n_features);
    for (size_t f = 0; f < n_features; ++f)
      if (!(ls >> s.feature_ids[f])) throw InputError(where + ": truncated feature list");
    if (!(ls >> s.cart_origin_session)) throw InputError(where + ": missing cart_origin field");
    std::string extra;
    if (ls >> extra) throw InputError(where + ": trailing tokens after cart_origin");
    if ((s.c != 0 && s.c != 1) || (s.a != 0 && s.a != 1) || (s.o != 0 && s.o != 1))
      throw InputError(where + ": labels must be 0/1");
    s.calibrated = calibrated;
    samples.push_back(std::move(s));
  }
  return samples;
}

DatasetSplit split_by_session(const std::vector<InteractionSample>& samples, long boundary) {
  DatasetSplit split;
  split.boundary = boundary;
  for (const auto& s : samples)
    (s.session_id < boundary ? split.train : split.test).push_back(s);
  if (split.train.empty()) throw ConfigError("split_by_session: empty train partition");
  if (split.test.empty()) throw ConfigError("split_by_session: empty test partition");
  return split;
}

long session_boundary_for_fraction(const std::vector<InteractionSample>& samples,
                                   double fraction) {
  if (samples.empty()) throw ConfigError("session boundary: no samples");
  long lo = samples.front().session_id, hi = lo;
  for (const auto& s : samples) {
    lo = std::min(lo, s.session_id);
    hi = std::max(hi, s.session_id);
  }
  long span = hi - lo + 1;
  long boundary = lo + static_cast<long>(std::llround(fraction * static_cast<double>(span)));
  return std::clamp(boundary, lo + 1, hi);
}

}  // namespace esmc
