#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "meshparts/dense_matrix.hpp"
#include "meshparts/errors.hpp"
#include "meshparts/rng.hpp"

namespace meshparts {

namespace detail {

// Dominant eigenpair of a symmetric PSD dense matrix via power iteration
// with a seeded start; stops on a small relative residual.
struct EigenPair {
  double value = 0.0;
  std::vector<double> vector;
};

inline EigenPair dominant_eigenpair(const DenseMatrix& a, std::uint64_t seed) {
  const std::size_t n = a.rows;
  EigenPair pair;
  pair.vector.assign(n, 0.0);
  Rng rng(seed);
  std::vector<double> q(n), z(n);
  for (double& x : q) x = rng.uniform(-1.0, 1.0);

  double lambda = 0.0;
  for (std::size_t iter = 0; iter < 200000; ++iter) {
    double norm = 0.0;
    for (double x : q) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return pair;
    for (double& x : q) x /= norm;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      const double* row = a.row(i);
      for (std::size_t j = 0; j < n; ++j) s += row[j] * q[j];
      z[i] = s;
    }
    lambda = 0.0;
    for (std::size_t i = 0; i < n; ++i) lambda += q[i] * z[i];
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = z[i] - lambda * q[i];
      residual += r * r;
    }
    if (std::sqrt(residual) <= 1e-13 * std::max(1.0, std::abs(lambda))) break;
    q.swap(z);
  }
  pair.value = lambda;
  pair.vector = q;
  return pair;
}

}  // namespace detail

/// Projects M x Z rows onto the top two principal axes. Axes come in
/// descending eigenvalue order with each eigenvector's largest-magnitude
/// component made positive; rank-deficient directions yield zero coordinates.
inline DenseMatrix pca_embed(const DenseMatrix& data) {
  require(data.rows >= 2, "pca_embed: need at least 2 rows");
  const std::size_t m = data.rows, z = data.cols;

  DenseMatrix centered = data;
  for (std::size_t j = 0; j < z; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += centered(i, j);
    mean /= static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) centered(i, j) -= mean;
  }

  DenseMatrix cov(z, z);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = centered.row(i);
    for (std::size_t a = 0; a < z; ++a) {
      const double ra = row[a];
      if (ra == 0.0) continue;
      double* cov_row = cov.row(a);
      for (std::size_t b = 0; b < z; ++b) cov_row[b] += ra * row[b];
    }
  }
  const double inv = 1.0 / static_cast<double>(m - 1);
  for (double& x : cov.values) x *= inv;

  double trace = 0.0;
  for (std::size_t a = 0; a < z; ++a) trace += cov(a, a);
  const double negligible = std::max(trace, 1.0) * 1e-14;

  DenseMatrix coords(m, 2);
  DenseMatrix deflated = cov;
  for (std::size_t axis = 0; axis < 2; ++axis) {
    const auto pair = detail::dominant_eigenpair(deflated, 0xacce5 + axis);
    if (pair.value <= negligible) break;  // rank exhausted; coordinates stay 0

    // deterministic sign: largest-magnitude component positive
    std::size_t arg = 0;
    for (std::size_t j = 1; j < z; ++j)
      if (std::abs(pair.vector[j]) > std::abs(pair.vector[arg])) arg = j;
    const double sign = pair.vector[arg] < 0.0 ? -1.0 : 1.0;

    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      const double* row = centered.row(i);
      for (std::size_t j = 0; j < z; ++j) s += row[j] * pair.vector[j];
      coords(i, axis) = sign * s;
    }
    for (std::size_t a = 0; a < z; ++a)
      for (std::size_t b = 0; b < z; ++b)
        deflated(a, b) -= pair.value * pair.vector[a] * pair.vector[b];
  }
  return coords;
}

}  // namespace meshparts
