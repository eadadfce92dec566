#pragma once

#include <string>
#include <vector>

#include "esmc/linalg.hpp"

namespace esmc {

enum class Activation { Identity, LeakyRelu, Sigmoid };

double apply_activation(Activation act, double x, double slope);
double activation_grad(Activation act, double preact, double slope);

// One fully connected layer: out = act(W x + b).
struct DenseLayer {
  Matrix weight;  // [out x in]
  Vec bias;       // [out]
  Activation act = Activation::Identity;
  double slope = 0.01;  // LeakyRelu negative slope, must stay in (0, 1)

  DenseLayer() = default;
  DenseLayer(size_t in_dim, size_t out_dim, Activation a, double leaky_slope = 0.01);

  size_t in_dim() const { return weight.cols; }
  size_t out_dim() const { return weight.rows; }
  size_t param_count() const { return weight.size() + bias.size(); }

  void validate() const;
};

Vec dense_forward(const DenseLayer& layer, const Vec& input);

// Cached activations for one sample, needed by the backward pass.
struct LayerCache {
  Vec input;
  Vec preact;
};
using MlpCache = std::vector<LayerCache>;

struct MlpGrads {
  std::vector<Matrix> dweight;
  std::vector<Vec> dbias;

  void add_scaled(const MlpGrads& other, double s);
  void scale(double s);
};

// A stack of dense layers. Towers in this library are Mlps whose last layer
// is a single Sigmoid unit; expert networks and shared bottoms reuse the
// same type with Identity or LeakyRelu tails.
class Mlp {
 public:
  Mlp() = default;

  // dims = {in, h1, ..., out}; hidden layers get `hidden`, last gets `last`.
  static Mlp build(const std::vector<size_t>& dims, Activation hidden, Activation last,
                   double slope, Rng& rng);

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  size_t in_dim() const { return layers_.front().in_dim(); }
  size_t out_dim() const { return layers_.back().out_dim(); }
  size_t param_count() const;

  Vec forward(const Vec& input) const;
  Vec forward(const Vec& input, MlpCache& cache) const;

  // Reverse-mode gradients of the composed map. Requires the cache produced
  // by forward() on the same input; accumulates into `grads`, and adds the
  // gradient w.r.t. the input into `input_grad` when non-null.
  void backward(const MlpCache& cache, const Vec& output_grad, MlpGrads& grads,
                Vec* input_grad) const;

  MlpGrads zero_grads() const;

  // Canonical flattening order: per layer, weight row-major then bias.
  Vec flatten() const;
  void unflatten(const Vec& flat);

  // Spreads a gradient expressed on the flattened vector back onto grads.
  void add_flat_grad(const Vec& flat_grad, MlpGrads& grads) const;

  bool same_shape(const Mlp& other) const;

 private:
  std::vector<DenseLayer> layers_;
};

// Seeded uniform init in [-sqrt(6/(in+out)), +sqrt(6/(in+out))].
void glorot_init(Matrix& w, Rng& rng);

}  // namespace esmc
