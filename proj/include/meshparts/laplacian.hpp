#pragma once

#include <cmath>
#include <cstdio>
#include <vector>

#include "meshparts/errors.hpp"
#include "meshparts/mesh.hpp"
#include "meshparts/rng.hpp"
#include "meshparts/sparse_matrix.hpp"

namespace meshparts {

/// Combinatorial Laplacian of a mesh graph together with its dominant
/// eigenvalue and the scaled form 2L/lambda_max - I whose spectrum lies
/// in [-1, 1], as required by the Chebyshev recurrence.
struct LaplacianBundle {
  SparseMatrix adjacency;
  SparseMatrix laplacian;
  SparseMatrix scaled;
  double lambda_max = 0.0;
  bool lambda_from_fallback = false;  // true when power iteration did not converge
};

/// Binary symmetric adjacency from shared face edges, zero diagonal.
inline SparseMatrix adjacency_from_faces(const Mesh& mesh) {
  const std::size_t n = mesh.vertex_count();
  std::vector<Triplet> triplets;
  std::vector<std::vector<std::uint32_t>> neighbors(n);
  auto link = [&](std::uint32_t a, std::uint32_t b) {
    for (std::uint32_t x : neighbors[a])
      if (x == b) return;
    neighbors[a].push_back(b);
    neighbors[b].push_back(a);
    triplets.push_back({a, b, 1.0});
    triplets.push_back({b, a, 1.0});
  };
  for (const auto& f : mesh.faces) {
    link(f[0], f[1]);
    link(f[1], f[2]);
    link(f[0], f[2]);
  }
  return SparseMatrix::from_triplets(n, n, std::move(triplets));
}

inline bool graph_connected(const SparseMatrix& adjacency) {
  const std::size_t n = adjacency.rows();
  if (n == 0) return true;
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t visited = 1;
  // adjacency entries are sorted by row; walk rows via binary search bounds
  const auto& entries = adjacency.entries();
  std::vector<std::size_t> row_begin(n + 1, entries.size());
  for (std::size_t e = entries.size(); e-- > 0;) row_begin[entries[e].row] = e;
  for (std::size_t i = n; i-- > 0;)
    if (row_begin[i] == entries.size()) row_begin[i] = row_begin[i + 1];
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t e = row_begin[v]; e < row_begin[v + 1]; ++e) {
      const std::size_t w = entries[e].col;
      if (!seen[w]) {
        seen[w] = 1;
        ++visited;
        stack.push_back(w);
      }
    }
  }
  return visited == n;
}

struct PowerIterationResult {
  double value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Dominant eigenvalue of a symmetric PSD matrix by power iteration with a
/// seeded start vector. Stops when the residual ||Ax - lambda x|| drops below
/// tolerance * max(1, lambda), which bounds the eigenvalue error directly.
inline PowerIterationResult power_iteration_lambda_max(const SparseMatrix& a,
                                                       double tolerance = 1e-9,
                                                       std::size_t max_iterations = 10000,
                                                       std::uint64_t seed = 0x5eed1a9ull) {
  const std::size_t n = a.rows();
  require(n == a.cols(), "power iteration needs a square matrix");
  Rng rng(seed);
  DenseMatrix q(n, 1), z(n, 1);
  for (double& x : q.values) x = rng.uniform(-1.0, 1.0);

  PowerIterationResult result;
  double lambda = 0.0;
  for (std::size_t iter = 1; iter <= max_iterations; ++iter) {
    double norm = 0.0;
    for (double x : q.values) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    for (double& x : q.values) x /= norm;
    a.multiply_into(q, z);
    lambda = 0.0;
    for (std::size_t i = 0; i < n; ++i) lambda += q.values[i] * z.values[i];
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = z.values[i] - lambda * q.values[i];
      residual += r * r;
    }
    result.iterations = iter;
    if (std::sqrt(residual) <= tolerance * std::max(1.0, std::abs(lambda))) {
      result.converged = true;
      break;
    }
    q.values.swap(z.values);
  }
  result.value = lambda;
  return result;
}

inline LaplacianBundle bundle_from_adjacency(const SparseMatrix& adjacency) {
  const std::size_t n = adjacency.rows();
  std::vector<double> degree(n, 0.0);
  for (const Triplet& t : adjacency.entries()) degree[t.row] += t.value;

  std::vector<Triplet> lap;
  lap.reserve(adjacency.nnz() + n);
  for (std::size_t i = 0; i < n; ++i)
    if (degree[i] != 0.0) lap.push_back({i, i, degree[i]});
  for (const Triplet& t : adjacency.entries()) lap.push_back({t.row, t.col, -t.value});

  LaplacianBundle bundle;
  bundle.adjacency = adjacency;
  bundle.laplacian = SparseMatrix::from_triplets(n, n, std::move(lap));

  const PowerIterationResult pi = power_iteration_lambda_max(bundle.laplacian);
  if (pi.converged && pi.value > 0.0) {
    bundle.lambda_max = pi.value;
  } else {
    double max_degree = 0.0;
    for (double d : degree) max_degree = std::max(max_degree, d);
    bundle.lambda_max = std::max(2.0 * max_degree, 1.0);
    bundle.lambda_from_fallback = true;
    std::fprintf(stderr,
                 "warning: power iteration did not converge in %zu iterations; "
                 "using lambda_max upper bound %.17g\n",
                 pi.iterations, bundle.lambda_max);
  }

  // scaled = 2L/lambda - I; keep explicit -1 diagonal for isolated vertices
  std::vector<Triplet> scaled;
  scaled.reserve(bundle.laplacian.nnz() + n);
  const double s = 2.0 / bundle.lambda_max;
  std::vector<char> has_diag(n, 0);
  for (const Triplet& t : bundle.laplacian.entries()) {
    double v = s * t.value;
    if (t.row == t.col) {
      v -= 1.0;
      has_diag[t.row] = 1;
    }
    scaled.push_back({t.row, t.col, v});
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!has_diag[i]) scaled.push_back({i, i, -1.0});
  bundle.scaled = SparseMatrix::from_triplets(n, n, std::move(scaled));
  return bundle;
}

/// Adjacency, Laplacian L = D - A and scaled Laplacian for a mesh. Warns on
/// a disconnected graph and proceeds.
inline LaplacianBundle laplacian_bundle(const Mesh& mesh) {
  mesh.validate();
  SparseMatrix adjacency = adjacency_from_faces(mesh);
  if (!graph_connected(adjacency))
    std::fprintf(stderr, "warning: mesh graph is not connected (%zu vertices)\n",
                 mesh.vertex_count());
  return bundle_from_adjacency(adjacency);
}

}  // namespace meshparts
