#include "esmc/run_config.hpp"

#include <fstream>
#include <sstream>

namespace esmc {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : value) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value '" + v + "' for " + key);
  }
}

long parse_long(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value '" + v + "' for " + key);
  }
}

size_t parse_size(const std::string& v, const std::string& key) {
  long d = parse_long(v, key);
  if (d < 0) throw ConfigError("config: " + key + " must be nonnegative");
  return static_cast<size_t>(d);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: bad boolean '" + v + "' for " + key);
}

std::vector<size_t> parse_size_list(const std::string& v, const std::string& key) {
  std::vector<size_t> out;
  for (const auto& tok : split_list(v)) out.push_back(parse_size(tok, key));
  return out;
}

FeatureSchema parse_fields(const std::string& value) {
  FeatureSchema schema;
  for (const auto& tok : split_list(value)) {
    size_t c1 = tok.find(':');
    size_t c2 = c1 == std::string::npos ? std::string::npos : tok.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw ConfigError("config: schema field '" + tok + "' must be name:vocab:dim");
    FeatureField f;
    f.name = tok.substr(0, c1);
    f.vocab_size = parse_size(tok.substr(c1 + 1, c2 - c1 - 1), "schema vocab");
    f.embed_dim = parse_size(tok.substr(c2 + 1), "schema dim");
    schema.fields.push_back(std::move(f));
  }
  schema.validate();
  return schema;
}

}  // namespace

void RunConfig::set(const std::string& dotted_key, const std::string& value) {
  size_t dot = dotted_key.find('.');
  if (dot == std::string::npos)
    throw ConfigError("config: expected section.key, got '" + dotted_key + "'");
  const std::string section = dotted_key.substr(0, dot);
  const std::string key = dotted_key.substr(dot + 1);

  if (section == "simulator") {
    auto& s = simulator;
    if (key == "preset") {
      if (value == "table1") {
        uint64_t seed = s.seed;
        s = SimulatorConfig::table1_preset();
        s.seed = seed;
      } else if (value != "none") {
        throw ConfigError("config: unknown simulator preset '" + value + "'");
      }
    } else if (key == "n_users") s.n_users = parse_size(value, dotted_key);
    else if (key == "n_items") s.n_items = parse_size(value, dotted_key);
    else if (key == "sessions_per_user") s.n_sessions_per_user = parse_size(value, dotted_key);
    else if (key == "exposures_per_session")
      s.exposures_per_session = parse_size(value, dotted_key);
    else if (key == "base_click_prob") s.base_click_prob = parse_double(value, dotted_key);
    else if (key == "cart_given_click_prob")
      s.cart_given_click_prob = parse_double(value, dotted_key);
    else if (key == "purchase_given_cart_prob")
      s.purchase_given_cart_prob = parse_double(value, dotted_key);
    else if (key == "deferred_purchase_rate")
      s.deferred_purchase_rate = parse_double(value, dotted_key);
    else if (key == "global_domain_cart_rate")
      s.global_domain_cart_rate = parse_double(value, dotted_key);
    else if (key == "affinity_dim") s.affinity_dim = parse_size(value, dotted_key);
    else if (key == "affinity_scale") s.affinity_scale = parse_double(value, dotted_key);
    else if (key == "seed") s.seed = static_cast<uint64_t>(parse_long(value, dotted_key));
    else throw ConfigError("config: unknown key '" + dotted_key + "'");
  } else if (section == "schema") {
    if (key == "file") schema_file = value;
    else if (key == "fields") {
      inline_schema = parse_fields(value);
      has_inline_schema = true;
    } else if (key == "oov_policy") {
      OovPolicy p;
      if (value == "reserved") p = OovPolicy::ReservedBucket;
      else if (value == "reject") p = OovPolicy::Reject;
      else throw ConfigError("config: oov_policy must be reserved|reject");
      inline_schema.oov_policy = p;
    } else throw ConfigError("config: unknown key '" + dotted_key + "'");
  } else if (section == "model") {
    auto& m = training.model;
    if (key == "variant") m.variant = parse_variant(value);
    else if (key == "tower_hidden") m.tower_hidden = parse_size_list(value, dotted_key);
    else if (key == "expert_count") m.expert_count = parse_size(value, dotted_key);
    else if (key == "expert_hidden") m.expert_hidden = parse_size_list(value, dotted_key);
    else if (key == "expert_dim") m.expert_dim = parse_size(value, dotted_key);
    else if (key == "leaky_slope") m.leaky_slope = parse_double(value, dotted_key);
    else if (key == "seed") m.seed = static_cast<uint64_t>(parse_long(value, dotted_key));
    else throw ConfigError("config: unknown key '" + dotted_key + "'");
  } else if (section == "weights") {
    auto& w = training.weights;
    if (key == "w1") w.w1 = parse_double(value, dotted_key);
    else if (key == "w2") w.w2 = parse_double(value, dotted_key);
    else if (key == "w3") w.w3 = parse_double(value, dotted_key);
    else if (key == "w4") w.w4 = parse_double(value, dotted_key);
    else if (key == "w5") w.w5 = parse_double(value, dotted_key);
    else if (key == "kl_symmetric") w.kl_symmetric = parse_bool(value, dotted_key);
    else throw ConfigError("config: unknown key '" + dotted_key + "'");
  } else if (section == "training") {
    auto& t = training;
    if (key == "lr") t.lr = parse_double(value, dotted_key);
    else if (key == "batch_size") t.batch_size = parse_size(value, dotted_key);
    else if (key == "epochs") t.epochs = parse_size(value, dotted_key);
    else if (key == "warmup_steps") t.warmup_steps = parse_long(value, dotted_key);
    else if (key == "seed") t.seed = static_cast<uint64_t>(parse_long(value, dotted_key));
    else if (key == "shuffle") t.shuffle = parse_bool(value, dotted_key);
    else if (key == "adagrad_decay") t.adagrad_decay = parse_double(value, dotted_key);
    else if (key == "adagrad_epsilon") t.adagrad_epsilon = parse_double(value, dotted_key);
    else if (key == "calibrate") calibrate_samples = parse_bool(value, dotted_key);
    else if (key == "split_fraction") split_fraction = parse_double(value, dotted_key);
    else if (key == "split_boundary") split_boundary = parse_long(value, dotted_key);
    else throw ConfigError("config: unknown key '" + dotted_key + "'");
  } else if (section == "evaluation") {
    if (key == "tie_policy") {
      if (value == "tie_aware") tie = TiePolicy::TieAware;
      else if (value == "strict") tie = TiePolicy::Strict;
      else throw ConfigError("config: tie_policy must be tie_aware|strict");
    } else throw ConfigError("config: unknown key '" + dotted_key + "'");
  } else if (section == "paths") {
    if (key == "out_dir") out_dir = value;
    else if (key == "dataset") dataset_path = value;
    else if (key == "checkpoint") checkpoint_path = value;
    else throw ConfigError("config: unknown key '" + dotted_key + "'");
  } else {
    throw ConfigError("config: unknown section '" + section + "'");
  }
}

RunConfig RunConfig::from_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line, section;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed section header");
      section = t.substr(1, t.size() - 2);
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": key outside any section");
    try {
      cfg.set(section + "." + key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), path);
}

FeatureSchema RunConfig::resolve_schema() const {
  if (!schema_file.empty()) {
    std::ifstream in(schema_file);
    if (!in) throw ConfigError("config: cannot open schema file '" + schema_file + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return FeatureSchema::parse(buf.str());
  }
  if (has_inline_schema) return inline_schema;
  return Simulator::dataset_schema(simulator);
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os.precision(17);
  const auto& s = simulator;
  os << "[simulator]\n"
     << "n_users = " << s.n_users << "\n"
     << "n_items = " << s.n_items << "\n"
     << "sessions_per_user = " << s.n_sessions_per_user << "\n"
     << "exposures_per_session = " << s.exposures_per_session << "\n"
     << "base_click_prob = " << s.base_click_prob << "\n"
     << "cart_given_click_prob = " << s.cart_given_click_prob << "\n"
     << "purchase_given_cart_prob = " << s.purchase_given_cart_prob << "\n"
     << "deferred_purchase_rate = " << s.deferred_purchase_rate << "\n"
     << "global_domain_cart_rate = " << s.global_domain_cart_rate << "\n"
     << "affinity_dim = " << s.affinity_dim << "\n"
     << "affinity_scale = " << s.affinity_scale << "\n"
     << "seed = " << s.seed << "\n\n";

  os << "[schema]\n";
  if (!schema_file.empty()) os << "file = " << schema_file << "\n";
  if (has_inline_schema) {
    os << "fields =";
    for (const auto& f : inline_schema.fields)
      os << ' ' << f.name << ':' << f.vocab_size << ':' << f.embed_dim;
    os << "\n";
    os << "oov_policy = "
       << (inline_schema.oov_policy == OovPolicy::ReservedBucket ? "reserved" : "reject")
       << "\n";
  }
  os << "\n";

  const auto& m = training.model;
  os << "[model]\n"
     << "variant = " << variant_name(m.variant) << "\n"
     << "tower_hidden =";
  for (size_t d : m.tower_hidden) os << ' ' << d;
  os << "\n"
     << "expert_count = " << m.expert_count << "\n"
     << "expert_hidden =";
  for (size_t d : m.expert_hidden) os << ' ' << d;
  os << "\n"
     << "expert_dim = " << m.expert_dim << "\n"
     << "leaky_slope = " << m.leaky_slope << "\n"
     << "seed = " << m.seed << "\n\n";

  const auto& w = training.weights;
  os << "[weights]\n"
     << "w1 = " << w.w1 << "\n"
     << "w2 = " << w.w2 << "\n"
     << "w3 = " << w.w3 << "\n"
     << "w4 = " << w.w4 << "\n"
     << "w5 = " << w.w5 << "\n"
     << "kl_symmetric = " << (w.kl_symmetric ? "true" : "false") << "\n\n";

  const auto& t = training;
  os << "[training]\n"
     << "lr = " << t.lr << "\n"
     << "batch_size = " << t.batch_size << "\n"
     << "epochs = " << t.epochs << "\n"
     << "warmup_steps = " << t.warmup_steps << "\n"
     << "seed = " << t.seed << "\n"
     << "shuffle = " << (t.shuffle ? "true" : "false") << "\n"
     << "adagrad_decay = " << t.adagrad_decay << "\n"
     << "adagrad_epsilon = " << t.adagrad_epsilon << "\n"
     << "calibrate = " << (calibrate_samples ? "true" : "false") << "\n"
     << "split_fraction = " << split_fraction << "\n"
     << "split_boundary = " << split_boundary << "\n\n";

  os << "[evaluation]\n"
     << "tie_policy = " << (tie == TiePolicy::TieAware ? "tie_aware" : "strict") << "\n\n";

  os << "[paths]\n"
     << "out_dir = " << out_dir << "\n";
  if (!dataset_path.empty()) os << "dataset = " << dataset_path << "\n";
  if (!checkpoint_path.empty()) os << "checkpoint = " << checkpoint_path << "\n";
  return os.str();
}

}  // namespace esmc
