#include "esmc/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace esmc {

const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::SharedBottom: return "SharedBottom";
    case ModelVariant::ESMM: return "ESMM";
    case ModelVariant::MMoE: return "MMoE";
    case ModelVariant::ESMM2: return "ESMM2";
    case ModelVariant::ESMC: return "ESMC";
    case ModelVariant::ESMS: return "ESMS";
    case ModelVariant::ESMC2: return "ESMC2";
    case ModelVariant::ESMS2: return "ESMS2";
  }
  return "?";
}

ModelVariant parse_variant(const std::string& name) {
  for (ModelVariant v :
       {ModelVariant::SharedBottom, ModelVariant::ESMM, ModelVariant::MMoE, ModelVariant::ESMM2,
        ModelVariant::ESMC, ModelVariant::ESMS, ModelVariant::ESMC2, ModelVariant::ESMS2})
    if (name == variant_name(v)) return v;
  throw ConfigError("unknown model variant '" + name + "'");
}

void LossWeights::validate(ModelVariant variant) const {
  for (double w : {w1, w2, w3, w4, w5})
    if (!(w >= 0.0)) throw ConfigError("loss weights must be nonnegative");
  if (variant == ModelVariant::ESMS2 && w5 != 0.0)
    throw ConfigError("w5 (KL) must be 0 for ESMS2");
}

void ModelConfig::validate() const {
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0))
    throw ConfigError("leaky_slope must lie in (0, 1)");
  for (size_t d : tower_hidden)
    if (d < 1) throw ConfigError("tower hidden dims must be >= 1");
  if (variant == ModelVariant::MMoE && expert_count < 1)
    throw ConfigError("MMoE needs at least one expert");
  if ((variant == ModelVariant::MMoE || variant == ModelVariant::SharedBottom) && expert_dim < 1)
    throw ConfigError("expert_dim must be >= 1");
  weights.validate(variant);
}

namespace {

void softmax_inplace(Vec& v) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

}  // namespace

Model::Model(const ModelConfig& cfg, const FeatureSchema& schema) : cfg_(cfg) {
  cfg_.validate();
  schema.validate();
  Rng rng(cfg_.seed);
  tables_ = EmbeddingTables(schema, rng);
  build_towers(rng);
}

void Model::build_towers(Rng& rng) {
  const size_t embed_dim = tables_.schema().total_dim();
  const double slope = cfg_.leaky_slope;

  auto tower_dims = [&](size_t in) {
    std::vector<size_t> dims{in};
    dims.insert(dims.end(), cfg_.tower_hidden.begin(), cfg_.tower_hidden.end());
    dims.push_back(1);
    return dims;
  };
  auto bottom_dims = [&] {
    std::vector<size_t> dims{embed_dim};
    dims.insert(dims.end(), cfg_.expert_hidden.begin(), cfg_.expert_hidden.end());
    dims.push_back(cfg_.expert_dim);
    return dims;
  };
  auto add = [&](const std::string& name, Mlp net) {
    tower_names_.push_back(name);
    towers_.push_back(std::move(net));
  };
  auto sigmoid_tower = [&](size_t in) {
    return Mlp::build(tower_dims(in), Activation::LeakyRelu, Activation::Sigmoid, slope, rng);
  };

  switch (cfg_.variant) {
    case ModelVariant::ESMM:
      add("ctr", sigmoid_tower(embed_dim));
      add("cvr", sigmoid_tower(embed_dim));
      break;
    case ModelVariant::ESMM2:
    case ModelVariant::ESMC:
    case ModelVariant::ESMC2:
      add("ctr", sigmoid_tower(embed_dim));
      add("car", sigmoid_tower(embed_dim));
      add("cvr", sigmoid_tower(embed_dim));
      break;
    case ModelVariant::ESMS:
    case ModelVariant::ESMS2:
      add("ctr", sigmoid_tower(embed_dim));
      add("cond", sigmoid_tower(embed_dim));
      break;
    case ModelVariant::SharedBottom:
      add("bottom", Mlp::build(bottom_dims(), Activation::LeakyRelu, Activation::LeakyRelu,
                               slope, rng));
      add("ctr_head", sigmoid_tower(cfg_.expert_dim));
      add("cvr_head", sigmoid_tower(cfg_.expert_dim));
      break;
    case ModelVariant::MMoE:
      for (size_t e = 0; e < cfg_.expert_count; ++e)
        add("expert_" + std::to_string(e),
            Mlp::build(bottom_dims(), Activation::LeakyRelu, Activation::LeakyRelu, slope, rng));
      add("gate_ctr", Mlp::build({embed_dim, cfg_.expert_count}, Activation::Identity,
                                 Activation::Identity, slope, rng));
      add("gate_cvr", Mlp::build({embed_dim, cfg_.expert_count}, Activation::Identity,
                                 Activation::Identity, slope, rng));
      add("ctr_head", sigmoid_tower(cfg_.expert_dim));
      add("cvr_head", sigmoid_tower(cfg_.expert_dim));
      break;
  }
}

int Model::tower_index(const std::string& name) const {
  for (size_t i = 0; i < tower_names_.size(); ++i)
    if (tower_names_[i] == name) return static_cast<int>(i);
  return -1;
}

int Model::car_tower_index() const {
  int i = tower_index("car");
  if (i < 0) throw ConfigError(std::string(variant_name(cfg_.variant)) + " has no CTCAR tower");
  return i;
}

int Model::cvr_tower_index() const {
  int i = tower_index("cvr");
  if (i < 0) throw ConfigError(std::string(variant_name(cfg_.variant)) + " has no CTCVR tower");
  return i;
}

const Mlp& Model::car_tower() const { return towers_[static_cast<size_t>(car_tower_index())]; }
const Mlp& Model::cvr_tower() const { return towers_[static_cast<size_t>(cvr_tower_index())]; }

PredictionBundle Model::forward_one(const InteractionSample& s, SampleCache* cache) const {
  if (cache) {
    cache->tower.resize(towers_.size());
    cache->embedding = tables_.embed(s.feature_ids);
  }
  const Vec e = cache ? cache->embedding : tables_.embed(s.feature_ids);

  auto run_scalar = [&](int ti) {
    const Mlp& net = towers_[static_cast<size_t>(ti)];
    Vec out = cache ? net.forward(e, cache->tower[static_cast<size_t>(ti)]) : net.forward(e);
    return out[0];
  };

  PredictionBundle b;
  switch (cfg_.variant) {
    case ModelVariant::ESMM: {
      double rc = run_scalar(0), rv = run_scalar(1);
      if (cache) cache->raw_pctr = rc, cache->raw_pcvr = rv;
      b.pctr = clip_prob(rc);
      b.pcvr = clip_prob(rv);
      b.pctcvr = b.pctr * b.pcvr;
      break;
    }
    case ModelVariant::ESMM2: {
      double rc = run_scalar(0), ra = run_scalar(1), rv = run_scalar(2);
      if (cache) cache->raw_pctr = rc, cache->raw_pcar = ra, cache->raw_pcvr = rv;
      b.pctr = clip_prob(rc);
      b.pcar = clip_prob(ra);
      b.pcvr = clip_prob(rv);
      b.pctcar = b.pctr * b.pcar;
      b.pctcvr = b.pctr * b.pcar * b.pcvr;
      b.has_car = true;
      b.three_factor = true;
      break;
    }
    case ModelVariant::ESMC:
    case ModelVariant::ESMC2: {
      double rc = run_scalar(0), ra = run_scalar(1), rv = run_scalar(2);
      if (cache) cache->raw_pctr = rc, cache->raw_pcar = ra, cache->raw_pcvr = rv;
      b.pctr = clip_prob(rc);
      b.pcar = clip_prob(ra);
      b.pcvr = clip_prob(rv);
      b.pctcar = b.pctr * b.pcar;
      b.pctcvr = b.pctr * b.pcvr;
      b.has_car = true;
      break;
    }
    case ModelVariant::ESMS:
    case ModelVariant::ESMS2: {
      double rc = run_scalar(0), rcond = run_scalar(1);
      if (cache) cache->raw_pctr = rc, cache->raw_pcar = rcond, cache->raw_pcvr = rcond;
      b.pctr = clip_prob(rc);
      b.pcar = clip_prob(rcond);
      b.pcvr = b.pcar;  // one tower, one forward: bit-identical by construction
      b.pctcar = b.pctr * b.pcar;
      b.pctcvr = b.pctr * b.pcvr;
      b.has_car = true;
      break;
    }
    case ModelVariant::SharedBottom: {
      const Mlp& bottom = towers_[0];
      Vec h = cache ? bottom.forward(e, cache->tower[0]) : bottom.forward(e);
      if (cache) cache->mix_ctr = h;
      auto head = [&](int ti) {
        const Mlp& net = towers_[static_cast<size_t>(ti)];
        Vec out = cache ? net.forward(h, cache->tower[static_cast<size_t>(ti)]) : net.forward(h);
        return out[0];
      };
      double rc = head(1), rv = head(2);
      if (cache) cache->raw_pctr = rc, cache->raw_pcvr = rv;
      b.pctr = clip_prob(rc);
      b.pcvr = clip_prob(rv);
      b.pctcvr = b.pctr * b.pcvr;
      break;
    }
    case ModelVariant::MMoE: {
      const size_t E = cfg_.expert_count;
      std::vector<Vec> experts(E);
      for (size_t ei = 0; ei < E; ++ei) {
        const Mlp& net = towers_[ei];
        experts[ei] = cache ? net.forward(e, cache->tower[ei]) : net.forward(e);
      }
      const int gc = static_cast<int>(E), gv = static_cast<int>(E) + 1;
      const int hc = static_cast<int>(E) + 2, hv = static_cast<int>(E) + 3;
      auto gate_probs = [&](int ti) {
        const Mlp& net = towers_[static_cast<size_t>(ti)];
        Vec logits =
            cache ? net.forward(e, cache->tower[static_cast<size_t>(ti)]) : net.forward(e);
        softmax_inplace(logits);
        return logits;
      };
      Vec g_ctr = gate_probs(gc), g_cvr = gate_probs(gv);
      Vec mix_ctr(cfg_.expert_dim, 0.0), mix_cvr(cfg_.expert_dim, 0.0);
      for (size_t ei = 0; ei < E; ++ei) {
        add_scaled(mix_ctr, experts[ei], g_ctr[ei]);
        add_scaled(mix_cvr, experts[ei], g_cvr[ei]);
      }
      auto head = [&](int ti, const Vec& in) {
        const Mlp& net = towers_[static_cast<size_t>(ti)];
        Vec out = cache ? net.forward(in, cache->tower[static_cast<size_t>(ti)]) : net.forward(in);
        return out[0];
      };
      double rc = head(hc, mix_ctr), rv = head(hv, mix_cvr);
      if (cache) {
        cache->expert_out = experts;
        cache->gate_ctr = g_ctr;
        cache->gate_cvr = g_cvr;
        cache->mix_ctr = mix_ctr;
        cache->mix_cvr = mix_cvr;
        cache->raw_pctr = rc;
        cache->raw_pcvr = rv;
      }
      b.pctr = clip_prob(rc);
      b.pcvr = clip_prob(rv);
      b.pctcvr = b.pctr * b.pcvr;
      break;
    }
  }
  return b;
}

Model::ForwardBatch Model::forward_batch(std::span<const InteractionSample> batch) const {
  ForwardBatch fwd;
  fwd.caches.resize(batch.size());
  fwd.bundles.resize(batch.size());
  for (size_t i = 0; i < batch.size(); ++i)
    fwd.bundles[i] = forward_one(batch[i], &fwd.caches[i]);
  return fwd;
}

std::vector<PredictionBundle> Model::predict(std::span<const InteractionSample> batch) const {
  std::vector<PredictionBundle> out(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) out[i] = forward_one(batch[i], nullptr);
  return out;
}

PredictionBundle Model::predict_one(const InteractionSample& s) const {
  return forward_one(s, nullptr);
}

Model::Gradients Model::zero_grads() const {
  Gradients g;
  g.emb = tables_.zero_grad();
  g.towers.reserve(towers_.size());
  for (const auto& t : towers_) g.towers.push_back(t.zero_grads());
  return g;
}

void Model::backward_batch(std::span<const InteractionSample> batch, const ForwardBatch& fwd,
                           std::span<const BundleGrad> bundle_grads, Gradients& grads) const {
  if (fwd.caches.size() != batch.size() || bundle_grads.size() != batch.size())
    throw UsageError("backward_batch: batch/cache/gradient sizes disagree");

  for (size_t i = 0; i < batch.size(); ++i) {
    const SampleCache& cache = fwd.caches[i];
    const BundleGrad& bg = bundle_grads[i];
    Vec demb(cache.embedding.size(), 0.0);

    auto tower_back = [&](int ti, double out_grad, Vec* input_grad) {
      if (out_grad == 0.0) return;
      Vec og{out_grad};
      towers_[static_cast<size_t>(ti)].backward(cache.tower[static_cast<size_t>(ti)], og,
                                                grads.towers[static_cast<size_t>(ti)],
                                                input_grad);
    };

    switch (cfg_.variant) {
      case ModelVariant::ESMM:
        tower_back(0, bg.dpctr * clip_gate(cache.raw_pctr), &demb);
        tower_back(1, bg.dpcvr * clip_gate(cache.raw_pcvr), &demb);
        break;
      case ModelVariant::ESMM2:
      case ModelVariant::ESMC:
      case ModelVariant::ESMC2:
        tower_back(0, bg.dpctr * clip_gate(cache.raw_pctr), &demb);
        tower_back(1, bg.dpcar * clip_gate(cache.raw_pcar), &demb);
        tower_back(2, bg.dpcvr * clip_gate(cache.raw_pcvr), &demb);
        break;
      case ModelVariant::ESMS:
      case ModelVariant::ESMS2:
        tower_back(0, bg.dpctr * clip_gate(cache.raw_pctr), &demb);
        // shared conditional tower: both task contributions add up
        tower_back(1, (bg.dpcar + bg.dpcvr) * clip_gate(cache.raw_pcar), &demb);
        break;
      case ModelVariant::SharedBottom: {
        Vec dh(cfg_.expert_dim, 0.0);
        tower_back(1, bg.dpctr * clip_gate(cache.raw_pctr), &dh);
        tower_back(2, bg.dpcvr * clip_gate(cache.raw_pcvr), &dh);
        bool any = false;
        for (double v : dh) any |= v != 0.0;
        if (any) towers_[0].backward(cache.tower[0], dh, grads.towers[0], &demb);
        break;
      }
      case ModelVariant::MMoE: {
        const size_t E = cfg_.expert_count;
        const int gc = static_cast<int>(E), gv = static_cast<int>(E) + 1;
        const int hc = static_cast<int>(E) + 2, hv = static_cast<int>(E) + 3;

        Vec dmix_ctr(cfg_.expert_dim, 0.0), dmix_cvr(cfg_.expert_dim, 0.0);
        tower_back(hc, bg.dpctr * clip_gate(cache.raw_pctr), &dmix_ctr);
        tower_back(hv, bg.dpcvr * clip_gate(cache.raw_pcvr), &dmix_cvr);

        std::vector<Vec> dexpert(E, Vec(cfg_.expert_dim, 0.0));
        auto task_back = [&](const Vec& gate, const Vec& dmix, int gate_ti) {
          bool any = false;
          for (double v : dmix) any |= v != 0.0;
          if (!any) return;
          Vec dgate(E, 0.0);
          for (size_t ei = 0; ei < E; ++ei) {
            add_scaled(dexpert[ei], dmix, gate[ei]);
            double dot = 0.0;
            for (size_t k = 0; k < dmix.size(); ++k) dot += cache.expert_out[ei][k] * dmix[k];
            dgate[ei] = dot;
          }
          // softmax backward
          double inner = 0.0;
          for (size_t ei = 0; ei < E; ++ei) inner += dgate[ei] * gate[ei];
          Vec dlogits(E);
          for (size_t ei = 0; ei < E; ++ei) dlogits[ei] = gate[ei] * (dgate[ei] - inner);
          towers_[static_cast<size_t>(gate_ti)].backward(
              cache.tower[static_cast<size_t>(gate_ti)], dlogits,
              grads.towers[static_cast<size_t>(gate_ti)], &demb);
        };
        task_back(cache.gate_ctr, dmix_ctr, gc);
        task_back(cache.gate_cvr, dmix_cvr, gv);
        for (size_t ei = 0; ei < E; ++ei) {
          bool any = false;
          for (double v : dexpert[ei]) any |= v != 0.0;
          if (any) towers_[ei].backward(cache.tower[ei], dexpert[ei], grads.towers[ei], &demb);
        }
        break;
      }
    }

    bool any = false;
    for (double v : demb) any |= v != 0.0;
    if (any) tables_.accumulate_grad(batch[i].feature_ids, demb, grads.emb);
  }
}

std::vector<Model::ParamGroup> Model::param_groups() {
  std::vector<ParamGroup> groups;
  for (size_t f = 0; f < tables_.field_count(); ++f)
    groups.push_back({"emb/" + tables_.schema().fields[f].name,
                      std::span<double>(tables_.table(f).data)});
  for (size_t ti = 0; ti < towers_.size(); ++ti) {
    auto& layers = towers_[ti].layers();
    for (size_t li = 0; li < layers.size(); ++li) {
      const std::string base = "tower/" + tower_names_[ti] + "/" + std::to_string(li);
      groups.push_back({base + "/weight", std::span<double>(layers[li].weight.data)});
      groups.push_back({base + "/bias", std::span<double>(layers[li].bias)});
    }
  }
  return groups;
}

std::vector<Model::ConstParamGroup> Model::param_groups() const {
  std::vector<ConstParamGroup> groups;
  for (size_t f = 0; f < tables_.field_count(); ++f)
    groups.push_back({"emb/" + tables_.schema().fields[f].name,
                      std::span<const double>(tables_.table(f).data)});
  for (size_t ti = 0; ti < towers_.size(); ++ti) {
    const auto& layers = towers_[ti].layers();
    for (size_t li = 0; li < layers.size(); ++li) {
      const std::string base = "tower/" + tower_names_[ti] + "/" + std::to_string(li);
      groups.push_back({base + "/weight", std::span<const double>(layers[li].weight.data)});
      groups.push_back({base + "/bias", std::span<const double>(layers[li].bias)});
    }
  }
  return groups;
}

Vec dense_table_grad(const Model& model, const Model::Gradients& grads, size_t field) {
  const Matrix& table = model.tables().table(field);
  Vec dense(table.size(), 0.0);
  const auto& rows = grads.emb.rows[field];
  const auto& g = grads.emb.grads[field];
  for (size_t ri = 0; ri < rows.size(); ++ri)
    for (size_t c = 0; c < table.cols; ++c) dense[rows[ri] * table.cols + c] = g[ri * table.cols + c];
  return dense;
}

// --- checkpointing ---------------------------------------------------------

namespace {

void write_size_list(std::ostream& os, const char* key, const std::vector<size_t>& v) {
  os << key;
  for (size_t d : v) os << ' ' << d;
  os << '\n';
}

std::vector<size_t> parse_size_list(std::istringstream& ls) {
  std::vector<size_t> v;
  size_t d;
  while (ls >> d) v.push_back(d);
  return v;
}

}  // namespace

void Model::save_checkpoint(const std::string& path) const {
  std::ostringstream os;
  os << "esmc-checkpoint 1\n";
  os << "variant " << variant_name(cfg_.variant) << '\n';
  os << "seed " << cfg_.seed << '\n';
  os << "leaky_slope " << double_to_hex(cfg_.leaky_slope) << '\n';
  write_size_list(os, "tower_hidden", cfg_.tower_hidden);
  os << "expert_count " << cfg_.expert_count << '\n';
  write_size_list(os, "expert_hidden", cfg_.expert_hidden);
  os << "expert_dim " << cfg_.expert_dim << '\n';
  const LossWeights& w = cfg_.weights;
  os << "weights " << double_to_hex(w.w1) << ' ' << double_to_hex(w.w2) << ' '
     << double_to_hex(w.w3) << ' ' << double_to_hex(w.w4) << ' ' << double_to_hex(w.w5) << ' '
     << (w.kl_symmetric ? 1 : 0) << '\n';
  os << "schema_hash " << to_hex16(tables_.schema().hash()) << '\n';
  const std::string schema_text = tables_.schema().serialize();
  size_t schema_lines = std::count(schema_text.begin(), schema_text.end(), '\n');
  os << "schema_lines " << schema_lines << '\n' << schema_text;

  const auto groups = param_groups();
  for (const auto& g : groups) {
    os << "param " << g.name << ' ' << g.data.size() << '\n';
    for (size_t i = 0; i < g.data.size(); ++i)
      os << double_to_hex(g.data[i]) << (i + 1 == g.data.size() ? '\n' : ' ');
  }
  os << "end\n";

  std::string body = os.str();
  uint64_t checksum = fnv1a64(body);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("save_checkpoint: cannot open '" + path + "'");
  out << body << "checksum " << to_hex16(checksum) << '\n';
  if (!out) throw InputError("save_checkpoint: write failed for '" + path + "'");
}

Model Model::load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("load_checkpoint: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string content = buf.str();

  const std::string marker = "checksum ";
  size_t pos = content.rfind(marker);
  if (pos == std::string::npos || (pos > 0 && content[pos - 1] != '\n'))
    throw InputError("load_checkpoint: missing checksum (truncated file?)");
  std::string body = content.substr(0, pos);
  std::string tail = content.substr(pos + marker.size());
  while (!tail.empty() && (tail.back() == '\n' || tail.back() == '\r')) tail.pop_back();
  if (fnv1a64(body) != from_hex(tail))
    throw InputError("load_checkpoint: checksum mismatch (corrupt or truncated file)");

  std::istringstream is(body);
  std::string line;
  if (!std::getline(is, line) || line != "esmc-checkpoint 1")
    throw InputError("load_checkpoint: unsupported format/version");

  ModelConfig cfg;
  FeatureSchema schema;
  uint64_t declared_hash = 0;
  bool have_schema = false;
  std::optional<Model> model;
  std::vector<Model::ParamGroup> groups;
  size_t filled = 0;
  bool saw_end = false;

  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "end") {
      saw_end = true;
      break;
    }
    if (key == "param") {
      if (!model) {
        if (!have_schema) throw InputError("load_checkpoint: missing schema block");
        if (schema.hash() != declared_hash)
          throw InputError("load_checkpoint: schema hash mismatch");
        model.emplace(cfg, schema);
        groups = model->param_groups();
      }
      std::string name;
      size_t n = 0;
      if (!(ls >> name >> n))
        throw InputError("load_checkpoint: malformed param line '" + line + "'");
      Model::ParamGroup* group = nullptr;
      for (auto& g : groups)
        if (g.name == name) group = &g;
      if (!group) throw InputError("load_checkpoint: unknown parameter group '" + name + "'");
      if (group->data.size() != n)
        throw InputError("load_checkpoint: size mismatch for group '" + name + "'");
      if (!std::getline(is, line))
        throw InputError("load_checkpoint: truncated values for group '" + name + "'");
      std::istringstream vs(line);
      std::string hex;
      for (size_t i = 0; i < n; ++i) {
        if (!(vs >> hex))
          throw InputError("load_checkpoint: too few values for group '" + name + "'");
        group->data[i] = double_from_hex(hex);
      }
      ++filled;
    } else if (key == "variant") {
      std::string v;
      ls >> v;
      cfg.variant = parse_variant(v);
    } else if (key == "seed") {
      ls >> cfg.seed;
    } else if (key == "leaky_slope") {
      std::string h;
      ls >> h;
      cfg.leaky_slope = double_from_hex(h);
    } else if (key == "tower_hidden") {
      cfg.tower_hidden = parse_size_list(ls);
    } else if (key == "expert_count") {
      ls >> cfg.expert_count;
    } else if (key == "expert_hidden") {
      cfg.expert_hidden = parse_size_list(ls);
    } else if (key == "expert_dim") {
      ls >> cfg.expert_dim;
    } else if (key == "weights") {
      std::string h1, h2, h3, h4, h5;
      int sym = 0;
      ls >> h1 >> h2 >> h3 >> h4 >> h5 >> sym;
      cfg.weights.w1 = double_from_hex(h1);
      cfg.weights.w2 = double_from_hex(h2);
      cfg.weights.w3 = double_from_hex(h3);
      cfg.weights.w4 = double_from_hex(h4);
      cfg.weights.w5 = double_from_hex(h5);
      cfg.weights.kl_symmetric = sym != 0;
    } else if (key == "schema_hash") {
      std::string h;
      ls >> h;
      declared_hash = from_hex(h);
    } else if (key == "schema_lines") {
      size_t n = 0;
      ls >> n;
      std::string schema_text;
      for (size_t i = 0; i < n; ++i) {
        if (!std::getline(is, line)) throw InputError("load_checkpoint: truncated schema block");
        schema_text += line;
        schema_text += '\n';
      }
      schema = FeatureSchema::parse(schema_text);
      have_schema = true;
    } else {
      throw InputError("load_checkpoint: unknown header key '" + key + "'");
    }
  }

  if (!saw_end || !model) throw InputError("load_checkpoint: incomplete checkpoint");
  if (filled != groups.size())
    throw InputError("load_checkpoint: parameter groups missing from file");
  return std::move(*model);
}

}  // namespace esmc
