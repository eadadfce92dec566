#include "esmc/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace esmc {

double cross_entropy(double label, double p) {
  p = clip_prob(p);
  return -label * std::log(p) - (1.0 - label) * std::log(1.0 - p);
}

double cross_entropy_grad(double label, double p) {
  if (p < kProbEps || p > 1.0 - kProbEps) return 0.0;  // clamp saturated
  return (p - label) / (p * (1.0 - p));
}

Vec softmax(const Vec& logits) {
  if (logits.empty()) throw UsageError("softmax: empty input");
  double mx = logits[0];
  for (double x : logits) mx = std::max(mx, x);
  Vec out(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

double parameter_kl_flat(const Vec& a_flat, const Vec& b_flat) {
  return parameter_kl_grads(a_flat, b_flat, nullptr, nullptr);
}

double parameter_kl(const Mlp& tower_a, const Mlp& tower_b) {
  if (!tower_a.same_shape(tower_b))
    throw ConfigError("parameter_kl: tower shapes disagree (twin towers must be congruent)");
  return parameter_kl_flat(tower_a.flatten(), tower_b.flatten());
}

double parameter_kl_grads(const Vec& a_flat, const Vec& b_flat, Vec* da, Vec* db) {
  if (a_flat.size() != b_flat.size())
    throw ConfigError("parameter_kl: flattened parameter lengths disagree");
  const Vec pa = softmax(a_flat);
  const Vec pb = softmax(b_flat);
  double kl = 0.0;
  for (size_t i = 0; i < pa.size(); ++i) kl += pa[i] * std::log(pa[i] / pb[i]);
  kl = std::max(kl, 0.0);  // guard tiny negative round-off
  if (db) {
    db->resize(pb.size());
    for (size_t i = 0; i < pb.size(); ++i) (*db)[i] = pb[i] - pa[i];
  }
  if (da) {
    da->resize(pa.size());
    for (size_t i = 0; i < pa.size(); ++i)
      (*da)[i] = pa[i] * (std::log(pa[i] / pb[i]) - kl);
  }
  return kl;
}

namespace {

void check_hierarchy(std::span<const InteractionSample> samples) {
  for (const auto& s : samples) {
    if (s.o > s.a || s.a > s.c) {
      std::ostringstream msg;
      msg << "label hierarchy violated (c=" << s.c << ", a=" << s.a << ", o=" << s.o
          << ") at user " << s.user_id << " item " << s.item_id << " session " << s.session_id;
      throw InputError(msg.str());
    }
  }
}

}  // namespace

TaskLosses task_losses(std::span<const PredictionBundle> bundles,
                       std::span<const InteractionSample> samples) {
  if (samples.empty()) throw UsageError("task_losses: empty batch");
  if (bundles.size() != samples.size())
    throw UsageError("task_losses: bundle/sample counts disagree");
  check_hierarchy(samples);
  TaskLosses out;
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto& b = bundles[i];
    out.l_ctr += cross_entropy(s.c, b.pctr);
    if (b.has_car) out.l_ctcar += cross_entropy(s.c * s.a, b.pctcar);
    out.l_ctcvr += cross_entropy(s.c * s.o, b.pctcvr);
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  out.l_ctr *= inv;
  out.l_ctcar *= inv;
  out.l_ctcvr *= inv;
  return out;
}

ObjectiveResult compute_objective(const Model& model, std::span<const InteractionSample> batch,
                                  const LossWeights& w, const ObjectiveOptions& opts,
                                  Model::Gradients* grads) {
  const ModelVariant variant = model.config().variant;
  w.validate(variant);
  if (batch.empty()) throw UsageError("objective: empty batch");
  if (opts.enforce_hierarchy) check_hierarchy(batch);

  Model::ForwardBatch fwd;
  std::vector<PredictionBundle> bundles;
  if (grads) {
    fwd = model.forward_batch(batch);
    bundles = fwd.bundles;
  } else {
    bundles = model.predict(batch);
  }

  const size_t n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<BundleGrad> bg(grads ? n : 0);

  ObjectiveResult res;

  const bool esm_family = variant == ModelVariant::ESMC || variant == ModelVariant::ESMS ||
                          variant == ModelVariant::ESMC2 || variant == ModelVariant::ESMS2;
  const bool baseline =
      variant == ModelVariant::SharedBottom || variant == ModelVariant::MMoE;

  if (baseline) {
    // CTR over the exposure space; CVR head supervised on the clicked
    // subsample only (the classic SSB-afflicted setup).
    size_t n_clicked = 0;
    for (const auto& s : batch) n_clicked += s.c;
    const double inv_clicked = n_clicked ? 1.0 / static_cast<double>(n_clicked) : 0.0;
    for (size_t i = 0; i < n; ++i) {
      const auto& s = batch[i];
      const auto& b = bundles[i];
      res.l_ctr += inv_n * cross_entropy(s.c, b.pctr);
      if (s.c == 1) res.l_ctcvr += inv_clicked * cross_entropy(s.o, b.pcvr);
      if (grads) {
        if (w.w1 != 0.0) bg[i].dpctr += w.w1 * inv_n * cross_entropy_grad(s.c, b.pctr);
        if (w.w2 != 0.0 && s.c == 1)
          bg[i].dpcvr += w.w2 * inv_clicked * cross_entropy_grad(s.o, b.pcvr);
      }
    }
    res.total = w.w1 * res.l_ctr + w.w2 * res.l_ctcvr;
  } else if (variant == ModelVariant::ESMM) {
    for (size_t i = 0; i < n; ++i) {
      const auto& s = batch[i];
      const auto& b = bundles[i];
      const double y2 = static_cast<double>(s.c * s.o);
      res.l_ctr += inv_n * cross_entropy(s.c, b.pctr);
      res.l_ctcvr += inv_n * cross_entropy(y2, b.pctcvr);
      if (grads) {
        if (w.w1 != 0.0) bg[i].dpctr += w.w1 * inv_n * cross_entropy_grad(s.c, b.pctr);
        if (w.w2 != 0.0) {
          const double g2 = w.w2 * inv_n * cross_entropy_grad(y2, b.pctcvr);
          bg[i].dpctr += g2 * b.pcvr;
          bg[i].dpcvr += g2 * b.pctr;
        }
      }
    }
    res.total = w.w1 * res.l_ctr + w.w2 * res.l_ctcvr;
  } else if (variant == ModelVariant::ESMM2) {
    for (size_t i = 0; i < n; ++i) {
      const auto& s = batch[i];
      const auto& b = bundles[i];
      const double y2 = static_cast<double>(s.c * s.o);
      const double y3 = static_cast<double>(s.c * s.a);
      res.l_ctr += inv_n * cross_entropy(s.c, b.pctr);
      res.l_ctcvr += inv_n * cross_entropy(y2, b.pctcvr);
      res.l_ctcar += inv_n * cross_entropy(y3, b.pctcar);
      if (grads) {
        if (w.w1 != 0.0) bg[i].dpctr += w.w1 * inv_n * cross_entropy_grad(s.c, b.pctr);
        if (w.w2 != 0.0) {
          const double g2 = w.w2 * inv_n * cross_entropy_grad(y2, b.pctcvr);
          bg[i].dpctr += g2 * b.pcar * b.pcvr;
          bg[i].dpcar += g2 * b.pctr * b.pcvr;
          bg[i].dpcvr += g2 * b.pctr * b.pcar;
        }
        if (w.w3 != 0.0) {
          const double g3 = w.w3 * inv_n * cross_entropy_grad(y3, b.pctcar);
          bg[i].dpctr += g3 * b.pcar;
          bg[i].dpcar += g3 * b.pctr;
        }
      }
    }
    res.total = w.w1 * res.l_ctr + w.w2 * res.l_ctcvr + w.w3 * res.l_ctcar;
  } else if (esm_family) {
    const bool global_domain = is_esmg(variant);
    size_t n_rec = 0, n_glob = 0;
    for (const auto& s : batch) (s.domain == Domain::Rec ? n_rec : n_glob) += 1;
    const double inv_rec = n_rec ? 1.0 / static_cast<double>(n_rec) : 0.0;
    const double inv_glob = n_glob ? 1.0 / static_cast<double>(n_glob) : 0.0;
    const double w_glob = global_domain ? w.w4 : 0.0;

    for (size_t i = 0; i < n; ++i) {
      const auto& s = batch[i];
      const auto& b = bundles[i];
      const double y2 = static_cast<double>(s.c * s.o);
      const double y3 = static_cast<double>(s.c * s.a);
      const bool rec = s.domain == Domain::Rec;
      res.l_ctr += inv_n * cross_entropy(s.c, b.pctr);
      res.l_ctcvr += inv_n * cross_entropy(y2, b.pctcvr);
      if (rec)
        res.l_ctcar += inv_rec * cross_entropy(y3, b.pctcar);
      else if (global_domain)
        res.l_ctcar_global += inv_glob * cross_entropy(y3, b.pctcar);
      if (grads) {
        if (w.w1 != 0.0) bg[i].dpctr += w.w1 * inv_n * cross_entropy_grad(s.c, b.pctr);
        if (w.w2 != 0.0) {
          const double g2 = w.w2 * inv_n * cross_entropy_grad(y2, b.pctcvr);
          bg[i].dpctr += g2 * b.pcvr;
          bg[i].dpcvr += g2 * b.pctr;
        }
        const double car_w = rec ? w.w3 * inv_rec : w_glob * inv_glob;
        if (car_w != 0.0) {
          const double g3 = car_w * cross_entropy_grad(y3, b.pctcar);
          bg[i].dpctr += g3 * b.pcar;
          bg[i].dpcar += g3 * b.pctr;
        }
      }
    }
    res.total = w.w1 * res.l_ctr + w.w2 * res.l_ctcvr + w.w3 * res.l_ctcar +
                w_glob * res.l_ctcar_global;

    // Parameter constraint between the twin towers. Skipped entirely (not
    // just zero-weighted) when the coefficient is 0, so a run without the
    // constraint is bit-identical to an unconstrained twin-tower model.
    const double kl_w = variant == ModelVariant::ESMC   ? w.w4
                        : variant == ModelVariant::ESMC2 ? w.w5
                                                         : 0.0;
    if (kl_w != 0.0) {
      const Mlp& car = model.car_tower();
      const Mlp& cvr = model.cvr_tower();
      if (!car.same_shape(cvr))
        throw ConfigError("twin towers must have congruent shapes for the KL constraint");
      const Vec teacher = opts.kl_teacher_override ? *opts.kl_teacher_override : car.flatten();
      const Vec student = cvr.flatten();
      if (grads) {
        Vec da, db;
        res.l_kl = parameter_kl_grads(teacher, student,
                                      w.kl_symmetric && !opts.kl_teacher_override ? &da : nullptr,
                                      &db);
        for (double& v : db) v *= kl_w;
        cvr.add_flat_grad(db, grads->towers[static_cast<size_t>(model.cvr_tower_index())]);
        if (w.kl_symmetric && !opts.kl_teacher_override) {
          for (double& v : da) v *= kl_w;
          car.add_flat_grad(da, grads->towers[static_cast<size_t>(model.car_tower_index())]);
        }
      } else {
        res.l_kl = parameter_kl_flat(teacher, student);
      }
      res.total += kl_w * res.l_kl;
    }
  }

  if (grads) model.backward_batch(batch, fwd, bg, *grads);
  return res;
}

namespace {

void require_variant(const Model& model, std::initializer_list<ModelVariant> allowed,
                     const char* op) {
  for (ModelVariant v : allowed)
    if (model.config().variant == v) return;
  throw ConfigError(std::string(op) + ": wrong model variant " +
                    variant_name(model.config().variant));
}

}  // namespace

ObjectiveResult esmc_objective(const Model& model, std::span<const InteractionSample> batch,
                               const LossWeights& w, const ObjectiveOptions& opts,
                               Model::Gradients* grads) {
  require_variant(model, {ModelVariant::ESMC}, "esmc_objective");
  return compute_objective(model, batch, w, opts, grads);
}

ObjectiveResult esms_objective(const Model& model, std::span<const InteractionSample> batch,
                               const LossWeights& w, const ObjectiveOptions& opts,
                               Model::Gradients* grads) {
  require_variant(model, {ModelVariant::ESMS}, "esms_objective");
  return compute_objective(model, batch, w, opts, grads);
}

ObjectiveResult esmg_objective(const Model& model, std::span<const InteractionSample> batch,
                               const LossWeights& w, const ObjectiveOptions& opts,
                               Model::Gradients* grads) {
  require_variant(model, {ModelVariant::ESMC2, ModelVariant::ESMS2}, "esmg_objective");
  return compute_objective(model, batch, w, opts, grads);
}

}  // namespace esmc
