#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "meshparts/dense_matrix.hpp"
#include "meshparts/errors.hpp"
#include "meshparts/rng.hpp"
#include "meshparts/sparse_matrix.hpp"
#include "meshparts/tape.hpp"

namespace meshparts {

/// Spectral graph convolution filtered by a Chebyshev polynomial of the
/// scaled Laplacian: Y = sum_k T_k(L~) X theta_k + bias. theta[k] holds the
/// order-k coefficients for every (input, output) feature pair.
struct ChebLayer {
  std::vector<DenseMatrix> theta;  // order K matrices, each f_in x f_out
  DenseMatrix bias;                // 1 x f_out

  std::size_t order() const { return theta.size(); }
  std::size_t f_in() const { return theta.empty() ? 0 : theta.front().rows; }
  std::size_t f_out() const { return theta.empty() ? 0 : theta.front().cols; }

  static ChebLayer glorot(std::size_t order, std::size_t f_in, std::size_t f_out, Rng& rng) {
    require(order >= 1, "ChebLayer: order must be >= 1");
    ChebLayer layer;
    const double limit = std::sqrt(6.0 / static_cast<double>(f_in + f_out));
    layer.theta.reserve(order);
    for (std::size_t k = 0; k < order; ++k) {
      DenseMatrix m(f_in, f_out);
      for (double& x : m.values) x = rng.uniform(-limit, limit);
      layer.theta.push_back(std::move(m));
    }
    layer.bias = DenseMatrix(1, f_out);
    return layer;
  }
};

/// [T_0(L~)x, ..., T_{K-1}(L~)x] via the three-term recurrence
/// T_k = 2 L~ T_{k-1} - T_{k-2}, with T_0 x = x and T_1 x = L~ x.
inline std::vector<DenseMatrix> cheb_basis(const SparseMatrix& scaled, const DenseMatrix& x,
                                           std::size_t order) {
  require(order >= 1, "cheb_basis: order must be >= 1");
  require(scaled.rows() == scaled.cols(), "cheb_basis: scaled Laplacian must be square");
  require(scaled.rows() == x.rows, "cheb_basis: vertex count mismatch");

  std::vector<DenseMatrix> basis;
  basis.reserve(order);
  basis.push_back(x);
  if (order == 1) return basis;
  basis.push_back(scaled.multiply(x));
  for (std::size_t k = 2; k < order; ++k) {
    DenseMatrix t = scaled.multiply(basis[k - 1]);
    for (std::size_t i = 0; i < t.values.size(); ++i)
      t.values[i] = 2.0 * t.values[i] - basis[k - 2].values[i];
    basis.push_back(std::move(t));
  }
  return basis;
}

/// Pre-activation convolution output (bias included, no ReLU).
inline DenseMatrix cheb_conv(const ChebLayer& layer, const SparseMatrix& scaled,
                             const DenseMatrix& x) {
  require(x.cols == layer.f_in(), "cheb_conv: input feature width mismatch");
  const auto basis = cheb_basis(scaled, x, layer.order());
  DenseMatrix out(x.rows, layer.f_out());
  DenseMatrix term(x.rows, layer.f_out());
  for (std::size_t k = 0; k < layer.order(); ++k) {
    matmul_into(basis[k], layer.theta[k], term);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += term.values[i];
  }
  for (std::size_t i = 0; i < out.rows; ++i) {
    double* row = out.row(i);
    for (std::size_t j = 0; j < out.cols; ++j) row[j] += layer.bias.values[j];
  }
  if (!out.all_finite()) throw NumericError("cheb_conv produced non-finite output");
  return out;
}

/// Parameter leaves of one convolution layer inside a tape.
struct ChebLayerNodes {
  std::vector<int> theta;  // order leaves, each f_in x f_out
  int bias = -1;
};

inline ChebLayerNodes tape_cheb_layer(Tape& tape, std::size_t order, std::size_t f_in,
                                      std::size_t f_out) {
  ChebLayerNodes nodes;
  for (std::size_t k = 0; k < order; ++k) nodes.theta.push_back(tape.leaf(f_in, f_out));
  nodes.bias = tape.leaf(1, f_out);
  return nodes;
}

/// Emits the convolution onto a tape; returns the pre-activation node.
inline int tape_cheb_conv(Tape& tape, const SparseMatrix& scaled, int x,
                          const ChebLayerNodes& layer) {
  const std::size_t order = layer.theta.size();
  std::vector<int> basis;
  basis.reserve(order);
  basis.push_back(x);
  if (order >= 2) basis.push_back(tape.sparse_product(scaled, x));
  for (std::size_t k = 2; k < order; ++k) {
    const int twice = tape.scale(tape.sparse_product(scaled, basis[k - 1]), 2.0);
    basis.push_back(tape.add(twice, tape.scale(basis[k - 2], -1.0)));
  }
  int out = tape.mat_product(basis[0], layer.theta[0]);
  for (std::size_t k = 1; k < order; ++k)
    out = tape.add(out, tape.mat_product(basis[k], layer.theta[k]));
  return tape.bias_add(out, layer.bias);
}

}  // namespace meshparts
