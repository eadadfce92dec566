#include "esmc/embedding.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace esmc {

size_t FeatureSchema::total_dim() const {
  size_t n = 0;
  for (const auto& f : fields) n += f.embed_dim;
  return n;
}

void FeatureSchema::validate() const {
  if (fields.empty()) throw ConfigError("schema: at least one feature field required");
  std::unordered_set<std::string> seen;
  for (const auto& f : fields) {
    if (f.name.empty() || f.name.find(' ') != std::string::npos)
      throw ConfigError("schema: bad field name '" + f.name + "'");
    if (!seen.insert(f.name).second)
      throw ConfigError("schema: duplicate field name '" + f.name + "'");
    if (f.vocab_size < 1) throw ConfigError("schema: vocab_size must be >= 1 for " + f.name);
    if (f.embed_dim < 1) throw ConfigError("schema: embed_dim must be >= 1 for " + f.name);
  }
}

uint64_t FeatureSchema::hash() const {
  std::ostringstream os;
  os << (oov_policy == OovPolicy::ReservedBucket ? "reserved" : "reject");
  for (const auto& f : fields) os << '|' << f.name << ':' << f.vocab_size << ':' << f.embed_dim;
  return fnv1a64(os.str());
}

std::string FeatureSchema::serialize() const {
  std::ostringstream os;
  os << "esmc-schema 1\n";
  os << "oov_policy " << (oov_policy == OovPolicy::ReservedBucket ? "reserved" : "reject")
     << "\n";
  for (const auto& f : fields)
    os << "field " << f.name << ' ' << f.vocab_size << ' ' << f.embed_dim << "\n";
  return os.str();
}

FeatureSchema FeatureSchema::parse(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  FeatureSchema schema;
  if (!std::getline(is, line) || line != "esmc-schema 1")
    throw InputError("schema: missing 'esmc-schema 1' header");
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "oov_policy") {
      std::string v;
      ls >> v;
      if (v == "reserved")
        schema.oov_policy = OovPolicy::ReservedBucket;
      else if (v == "reject")
        schema.oov_policy = OovPolicy::Reject;
      else
        throw InputError("schema: unknown oov_policy '" + v + "'");
    } else if (key == "field") {
      FeatureField f;
      if (!(ls >> f.name >> f.vocab_size >> f.embed_dim))
        throw InputError("schema: malformed field line '" + line + "'");
      schema.fields.push_back(std::move(f));
    } else {
      throw InputError("schema: unknown key '" + key + "'");
    }
  }
  schema.validate();
  return schema;
}

EmbeddingTables::EmbeddingTables(const FeatureSchema& schema, Rng& rng) : schema_(schema) {
  schema_.validate();
  tables_.reserve(schema_.fields.size());
  for (const auto& f : schema_.fields) {
    Matrix t(f.vocab_size, f.embed_dim);
    glorot_init(t, rng);
    tables_.push_back(std::move(t));
  }
}

size_t EmbeddingTables::resolve_row(size_t field, long id) const {
  const auto& f = schema_.fields[field];
  if (id >= 0 && static_cast<size_t>(id) < f.vocab_size) return static_cast<size_t>(id);
  if (schema_.oov_policy == OovPolicy::ReservedBucket) return 0;
  throw InputError("embedding: id " + std::to_string(id) + " out of range for field '" +
                   f.name + "' (vocab " + std::to_string(f.vocab_size) + ")");
}

Vec EmbeddingTables::embed(std::span<const long> field_ids) const {
  if (field_ids.size() != tables_.size())
    throw InputError("embedding: sample has " + std::to_string(field_ids.size()) +
                     " feature ids, schema has " + std::to_string(tables_.size()) + " fields");
  Vec out;
  out.reserve(schema_.total_dim());
  for (size_t f = 0; f < tables_.size(); ++f) {
    const size_t row = resolve_row(f, field_ids[f]);
    const Matrix& t = tables_[f];
    const double* src = t.data.data() + row * t.cols;
    out.insert(out.end(), src, src + t.cols);
  }
  return out;
}

EmbeddingTables::SparseGrad EmbeddingTables::zero_grad() const {
  SparseGrad g;
  g.rows.resize(tables_.size());
  g.grads.resize(tables_.size());
  g.slot_of.resize(tables_.size());
  return g;
}

void EmbeddingTables::accumulate_grad(std::span<const long> field_ids, const Vec& upstream,
                                      SparseGrad& g) const {
  if (upstream.size() != schema_.total_dim())
    throw UsageError("embedding: upstream gradient length mismatch");
  size_t off = 0;
  for (size_t f = 0; f < tables_.size(); ++f) {
    const size_t row = resolve_row(f, field_ids[f]);
    const size_t dim = tables_[f].cols;
    auto& rows = g.rows[f];
    auto& grads = g.grads[f];
    auto [it, inserted] = g.slot_of[f].try_emplace(row, rows.size());
    const size_t slot = it->second;
    if (inserted) {
      rows.push_back(row);
      grads.resize(grads.size() + dim, 0.0);
    }
    for (size_t c = 0; c < dim; ++c) grads[slot * dim + c] += upstream[off + c];
    off += dim;
  }
}

void EmbeddingTables::apply(const SparseGrad& g, std::vector<AdagradState>& states,
                            const LrSchedule& schedule) {
  if (states.size() != tables_.size())
    throw UsageError("embedding: optimizer state count mismatch");
  for (size_t f = 0; f < tables_.size(); ++f) {
    adagrad_step_rows(std::span<double>(tables_[f].data), std::span<const double>(g.grads[f]),
                      std::span<const size_t>(g.rows[f]), tables_[f].cols, states[f], schedule,
                      "embedding/" + schema_.fields[f].name);
  }
}

std::vector<AdagradState> EmbeddingTables::make_states(double decay, double epsilon) const {
  std::vector<AdagradState> states;
  states.reserve(tables_.size());
  for (const auto& t : tables_) states.emplace_back(t.size(), decay, epsilon);
  return states;
}

}  // namespace esmc
