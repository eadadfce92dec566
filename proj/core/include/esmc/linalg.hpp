#pragma once

#include <cstddef>
#include <vector>

#include "esmc/common.hpp"

namespace esmc {

// Dense row-major matrix. Deliberately minimal: the towers in this library
// never need more than matvec, outer-product accumulation and flattening.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  Vec data;

  Matrix() = default;
  Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(size_t r, size_t c) { return data[r * cols + c]; }
  double operator()(size_t r, size_t c) const { return data[r * cols + c]; }

  size_t size() const { return data.size(); }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

// y = M x
inline void matvec(const Matrix& m, const Vec& x, Vec& y) {
  if (x.size() != m.cols) throw ConfigError("matvec: dimension mismatch");
  y.assign(m.rows, 0.0);
  for (size_t r = 0; r < m.rows; ++r) {
    const double* row = m.data.data() + r * m.cols;
    double acc = 0.0;
    for (size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

// acc += g * x^T  (outer product accumulation for weight gradients)
inline void add_outer(Matrix& acc, const Vec& g, const Vec& x) {
  if (acc.rows != g.size() || acc.cols != x.size())
    throw ConfigError("add_outer: dimension mismatch");
  for (size_t r = 0; r < acc.rows; ++r) {
    double* row = acc.data.data() + r * acc.cols;
    const double gr = g[r];
    for (size_t c = 0; c < acc.cols; ++c) row[c] += gr * x[c];
  }
}

// y = M^T g
inline void matvec_transposed(const Matrix& m, const Vec& g, Vec& y) {
  if (g.size() != m.rows) throw ConfigError("matvec_transposed: dimension mismatch");
  y.assign(m.cols, 0.0);
  for (size_t r = 0; r < m.rows; ++r) {
    const double* row = m.data.data() + r * m.cols;
    const double gr = g[r];
    for (size_t c = 0; c < m.cols; ++c) y[c] += row[c] * gr;
  }
}

inline void add_scaled(Vec& dst, const Vec& src, double s) {
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
}

inline double l2_distance(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace esmc
