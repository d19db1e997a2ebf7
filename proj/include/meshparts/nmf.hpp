#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "meshparts/dense_matrix.hpp"
#include "meshparts/errors.hpp"
#include "meshparts/rng.hpp"

namespace meshparts {

/// One multiplicative-update factorization V ~ W H with an L1 penalty on H.
struct NmfRun {
  DenseMatrix w;  // P x K, non-negative
  DenseMatrix h;  // K x M, non-negative
  std::vector<double> objective_trace;  // ||V - WH||_F^2 + lambda * sum|H|, per iteration
  std::uint64_t seed = 0;
  double lambda = 0.0;
};

struct LocalWeightsProvenance {
  std::uint64_t seed = 0;
  double lambda = 0.0;
  std::size_t iterations = 0;
  double final_objective = 0.0;
};

/// Non-negative P x K basis whose k-th column scores each vertex's influence
/// on part k; columns are normalized to a maximum of 1.
struct LocalWeights {
  DenseMatrix w;
  LocalWeightsProvenance provenance;

  std::size_t vertex_count() const { return w.rows; }
  std::size_t parts() const { return w.cols; }
};

/// Per-column affine map to [0, 1]; constant columns map to all zeros.
inline DenseMatrix nonneg_embed(const DenseMatrix& vertices) {
  require(vertices.rows >= 1, "nonneg_embed: empty input");
  if (!vertices.all_finite()) throw ContractViolation("nonneg_embed: non-finite input");
  DenseMatrix out(vertices.rows, vertices.cols);
  for (std::size_t j = 0; j < vertices.cols; ++j) {
    double lo = vertices(0, j), hi = vertices(0, j);
    for (std::size_t i = 1; i < vertices.rows; ++i) {
      lo = std::min(lo, vertices(i, j));
      hi = std::max(hi, vertices(i, j));
    }
    const double span = hi - lo;
    if (span == 0.0) continue;  // constant column stays zero
    for (std::size_t i = 0; i < vertices.rows; ++i)
      out(i, j) = (vertices(i, j) - lo) / span;
  }
  return out;
}

namespace detail {

inline double nmf_objective(const DenseMatrix& v, const DenseMatrix& w, const DenseMatrix& h,
                            double lambda) {
  double frob = 0.0;
  for (std::size_t i = 0; i < v.rows; ++i) {
    for (std::size_t j = 0; j < v.cols; ++j) {
      double r = v(i, j);
      for (std::size_t k = 0; k < w.cols; ++k) r -= w(i, k) * h(k, j);
      frob += r * r;
    }
  }
  double l1 = 0.0;
  for (double x : h.values) l1 += x;
  return frob + lambda * l1;
}

}  // namespace detail

/// Multiplicative updates for min ||V - WH||_F^2 + lambda * sum|H|, H and W
/// kept strictly positive by a 1e-12 floor so no entry becomes absorbing.
/// Bitwise deterministic for fixed inputs and seed.
inline NmfRun sparse_nmf(const DenseMatrix& v, std::size_t k, double lambda,
                         std::size_t iterations, std::uint64_t seed) {
  require(k >= 1, "sparse_nmf: k must be >= 1");
  require(lambda >= 0.0, "sparse_nmf: lambda must be non-negative");
  require(iterations >= 1, "sparse_nmf: iterations must be >= 1");
  for (double x : v.values)
    if (!(x >= 0.0)) throw ContractViolation("sparse_nmf: V must be non-negative and finite");

  constexpr double kFloor = 1e-12;
  const std::size_t p = v.rows, m = v.cols;

  NmfRun run;
  run.seed = seed;
  run.lambda = lambda;
  run.w = DenseMatrix(p, k);
  run.h = DenseMatrix(k, m);
  Rng rng(seed);
  for (double& x : run.w.values) x = std::max(rng.uniform(), kFloor);
  for (double& x : run.h.values) x = std::max(rng.uniform(), kFloor);

  DenseMatrix wh(p, m), num_w(p, k), den_w(p, k), hh(k, k);
  DenseMatrix num_h(k, m), den_h(k, m), ww(k, k);
  run.objective_trace.reserve(iterations);

  for (std::size_t iter = 0; iter < iterations; ++iter) {
    // W <- W * (V H^T) / (W H H^T)
    matmul_into(run.h, transpose(run.h), hh);
    matmul_into(v, transpose(run.h), num_w);
    matmul_into(run.w, hh, den_w);
    for (std::size_t i = 0; i < run.w.values.size(); ++i) {
      const double updated = run.w.values[i] * num_w.values[i] / (den_w.values[i] + kFloor);
      run.w.values[i] = std::max(updated, kFloor);
    }
    // H <- H * (W^T V) / (W^T W H + lambda/2); the objective uses the
    // unhalved Frobenius norm, hence the halved penalty in the denominator
    matmul_into(transpose(run.w), run.w, ww);
    matmul_into(transpose(run.w), v, num_h);
    matmul_into(ww, run.h, den_h);
    for (std::size_t i = 0; i < run.h.values.size(); ++i) {
      const double updated =
          run.h.values[i] * num_h.values[i] / (den_h.values[i] + 0.5 * lambda + kFloor);
      run.h.values[i] = std::max(updated, kFloor);
    }
    run.objective_trace.push_back(detail::nmf_objective(v, run.w, run.h, lambda));
  }
  return run;
}

/// Picks the restart whose basis columns are most mutually disjoint (mean
/// pairwise cosine distance), then normalizes each column to max 1. Runs with
/// an effectively zero column are excluded.
inline LocalWeights select_local_weights(const std::vector<NmfRun>& runs) {
  require(!runs.empty(), "select_local_weights: no runs given");
  constexpr double kZeroColumn = 1e-9;

  double best_score = -1.0;
  const NmfRun* best = nullptr;
  for (const NmfRun& run : runs) {
    require(run.w.rows == runs.front().w.rows && run.w.cols == runs.front().w.cols,
            "select_local_weights: runs disagree on shape");
    const std::size_t k = run.w.cols;
    std::vector<double> norms(k, 0.0);
    bool usable = true;
    std::vector<double> col_max(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < run.w.rows; ++i) {
        norms[j] += run.w(i, j) * run.w(i, j);
        col_max[j] = std::max(col_max[j], run.w(i, j));
      }
      norms[j] = std::sqrt(norms[j]);
      if (col_max[j] < kZeroColumn) usable = false;
    }
    if (!usable) continue;

    double score = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        double dot = 0.0;
        for (std::size_t i = 0; i < run.w.rows; ++i) dot += run.w(i, a) * run.w(i, b);
        score += 1.0 - dot / (norms[a] * norms[b]);
        ++pairs;
      }
    }
    score = pairs ? score / static_cast<double>(pairs) : 0.0;
    if (score > best_score) {
      best_score = score;
      best = &run;
    }
  }
  if (!best) throw DataError("select_local_weights: every run has an all-zero column");

  LocalWeights weights;
  weights.w = best->w;
  for (std::size_t j = 0; j < weights.w.cols; ++j) {
    double peak = 0.0;
    for (std::size_t i = 0; i < weights.w.rows; ++i) peak = std::max(peak, weights.w(i, j));
    for (std::size_t i = 0; i < weights.w.rows; ++i) weights.w(i, j) /= peak;
  }
  weights.provenance.seed = best->seed;
  weights.provenance.lambda = best->lambda;
  weights.provenance.iterations = best->objective_trace.size();
  weights.provenance.final_objective =
      best->objective_trace.empty() ? 0.0 : best->objective_trace.back();
  return weights;
}

}  // namespace meshparts
