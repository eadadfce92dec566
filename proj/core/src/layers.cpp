#include "esmc/layers.hpp"

#include <cmath>

namespace esmc {

double apply_activation(Activation act, double x, double slope) {
  switch (act) {
    case Activation::Identity:
      return x;
    case Activation::LeakyRelu:
      return x >= 0.0 ? x : slope * x;
    case Activation::Sigmoid:
      return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return x;
}

double activation_grad(Activation act, double preact, double slope) {
  switch (act) {
    case Activation::Identity:
      return 1.0;
    case Activation::LeakyRelu:
      return preact >= 0.0 ? 1.0 : slope;
    case Activation::Sigmoid: {
      double s = apply_activation(Activation::Sigmoid, preact, slope);
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

DenseLayer::DenseLayer(size_t in_dim, size_t out_dim, Activation a, double leaky_slope)
    : weight(out_dim, in_dim), bias(out_dim, 0.0), act(a), slope(leaky_slope) {
  validate();
}

void DenseLayer::validate() const {
  if (weight.rows != bias.size())
    throw ConfigError("DenseLayer: weight rows and bias length disagree");
  if (act == Activation::LeakyRelu && !(slope > 0.0 && slope < 1.0))
    throw ConfigError("DenseLayer: LeakyRelu slope must lie in (0, 1)");
}

Vec dense_forward(const DenseLayer& layer, const Vec& input) {
  if (input.size() != layer.in_dim())
    throw ConfigError("dense_forward: input length does not match layer in-dim");
  Vec out;
  matvec(layer.weight, input, out);
  for (size_t r = 0; r < out.size(); ++r)
    out[r] = apply_activation(layer.act, out[r] + layer.bias[r], layer.slope);
  return out;
}

void glorot_init(Matrix& w, Rng& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
  for (double& v : w.data) v = rng.uniform(-bound, bound);
}

Mlp Mlp::build(const std::vector<size_t>& dims, Activation hidden, Activation last,
               double slope, Rng& rng) {
  if (dims.size() < 2) throw ConfigError("Mlp::build: need at least input and output dims");
  Mlp mlp;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    bool is_last = (i + 2 == dims.size());
    DenseLayer layer(dims[i], dims[i + 1], is_last ? last : hidden, slope);
    glorot_init(layer.weight, rng);
    mlp.layers_.push_back(std::move(layer));
  }
  return mlp;
}

size_t Mlp::param_count() const {
  size_t n = 0;
  for (const auto& l : layers_) n += l.param_count();
  return n;
}

Vec Mlp::forward(const Vec& input) const {
  Vec x = input;
  for (const auto& layer : layers_) x = dense_forward(layer, x);
  return x;
}

Vec Mlp::forward(const Vec& input, MlpCache& cache) const {
  cache.clear();
  cache.reserve(layers_.size());
  Vec x = input;
  for (const auto& layer : layers_) {
    LayerCache lc;
    lc.input = x;
    matvec(layer.weight, x, lc.preact);
    for (size_t r = 0; r < lc.preact.size(); ++r) lc.preact[r] += layer.bias[r];
    Vec out(lc.preact.size());
    for (size_t r = 0; r < out.size(); ++r)
      out[r] = apply_activation(layer.act, lc.preact[r], layer.slope);
    cache.push_back(std::move(lc));
    x = std::move(out);
  }
  return x;
}

void Mlp::backward(const MlpCache& cache, const Vec& output_grad, MlpGrads& grads,
                   Vec* input_grad) const {
  if (cache.size() != layers_.size())
    throw UsageError("Mlp::backward: no cached forward pass for this input");
  Vec g = output_grad;
  for (size_t li = layers_.size(); li-- > 0;) {
    const DenseLayer& layer = layers_[li];
    const LayerCache& lc = cache[li];
    if (g.size() != layer.out_dim())
      throw UsageError("Mlp::backward: output gradient length mismatch");
    // through the activation
    for (size_t r = 0; r < g.size(); ++r)
      g[r] *= activation_grad(layer.act, lc.preact[r], layer.slope);
    add_outer(grads.dweight[li], g, lc.input);
    for (size_t r = 0; r < g.size(); ++r) grads.dbias[li][r] += g[r];
    if (li > 0 || input_grad != nullptr) {
      Vec gin;
      matvec_transposed(layer.weight, g, gin);
      if (li == 0) {
        if (input_grad->empty()) input_grad->assign(gin.size(), 0.0);
        if (input_grad->size() != gin.size())
          throw UsageError("Mlp::backward: input gradient length mismatch");
        for (size_t c = 0; c < gin.size(); ++c) (*input_grad)[c] += gin[c];
        return;
      }
      g = std::move(gin);
    }
  }
}

MlpGrads Mlp::zero_grads() const {
  MlpGrads g;
  g.dweight.reserve(layers_.size());
  g.dbias.reserve(layers_.size());
  for (const auto& l : layers_) {
    g.dweight.emplace_back(l.weight.rows, l.weight.cols);
    g.dbias.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

void MlpGrads::add_scaled(const MlpGrads& other, double s) {
  for (size_t i = 0; i < dweight.size(); ++i) {
    for (size_t k = 0; k < dweight[i].data.size(); ++k)
      dweight[i].data[k] += s * other.dweight[i].data[k];
    for (size_t k = 0; k < dbias[i].size(); ++k) dbias[i][k] += s * other.dbias[i][k];
  }
}

void MlpGrads::scale(double s) {
  for (auto& w : dweight)
    for (double& v : w.data) v *= s;
  for (auto& b : dbias)
    for (double& v : b) v *= s;
}

Vec Mlp::flatten() const {
  Vec flat;
  flat.reserve(param_count());
  for (const auto& l : layers_) {
    flat.insert(flat.end(), l.weight.data.begin(), l.weight.data.end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  return flat;
}

void Mlp::unflatten(const Vec& flat) {
  if (flat.size() != param_count())
    throw UsageError("Mlp::unflatten: flat vector length mismatch");
  size_t off = 0;
  for (auto& l : layers_) {
    std::copy(flat.begin() + off, flat.begin() + off + l.weight.size(), l.weight.data.begin());
    off += l.weight.size();
    std::copy(flat.begin() + off, flat.begin() + off + l.bias.size(), l.bias.begin());
    off += l.bias.size();
  }
}

void Mlp::add_flat_grad(const Vec& flat_grad, MlpGrads& grads) const {
  if (flat_grad.size() != param_count())
    throw UsageError("Mlp::add_flat_grad: flat vector length mismatch");
  size_t off = 0;
  for (size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    for (size_t k = 0; k < l.weight.size(); ++k) grads.dweight[li].data[k] += flat_grad[off + k];
    off += l.weight.size();
    for (size_t k = 0; k < l.bias.size(); ++k) grads.dbias[li][k] += flat_grad[off + k];
    off += l.bias.size();
  }
}

bool Mlp::same_shape(const Mlp& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].weight.rows != other.layers_[i].weight.rows ||
        layers_[i].weight.cols != other.layers_[i].weight.cols)
      return false;
  }
  return true;
}

}  // namespace esmc
