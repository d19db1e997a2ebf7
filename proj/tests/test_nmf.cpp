#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "meshparts/nmf.hpp"
#include "meshparts/rng.hpp"
#include "support/test_support.hpp"

using namespace meshparts;

TEST_CASE("nonneg embed") {
  SECTION("affine map endpoints") {
    const DenseMatrix v = DenseMatrix::from_rows({{-1.0}, {0.0}, {1.0}});
    const DenseMatrix e = nonneg_embed(v);
    REQUIRE(e(0, 0) == 0.0);
    REQUIRE(e(1, 0) == 0.5);
    REQUIRE(e(2, 0) == 1.0);
  }
  SECTION("already normalized data is unchanged") {
    const DenseMatrix v = DenseMatrix::from_rows({{0.0, 0.25}, {0.5, 1.0}, {1.0, 0.0}});
    REQUIRE(max_abs_diff(nonneg_embed(v), v) == 0.0);
  }
  SECTION("constant columns map to zero") {
    const DenseMatrix v = DenseMatrix::from_rows({{2.0, 1.0}, {2.0, 3.0}});
    const DenseMatrix e = nonneg_embed(v);
    REQUIRE(e(0, 0) == 0.0);
    REQUIRE(e(1, 0) == 0.0);
  }
  SECTION("columns scan to min 0 and max 1 on random input") {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
      DenseMatrix v(4 + rng.index(60), 3);
      for (double& x : v.values) x = rng.uniform(-5.0, 5.0);
      const DenseMatrix e = nonneg_embed(v);
      for (std::size_t j = 0; j < 3; ++j) {
        double lo = 1e9, hi = -1e9;
        for (std::size_t i = 0; i < e.rows; ++i) {
          lo = std::min(lo, e(i, j));
          hi = std::max(hi, e(i, j));
        }
        REQUIRE(lo == 0.0);
        REQUIRE((hi == 1.0 || hi == 0.0));
      }
    }
  }
  SECTION("non-finite input is rejected") {
    DenseMatrix v(2, 1);
    v(0, 0) = NAN;
    REQUIRE_THROWS_AS(nonneg_embed(v), ContractViolation);
  }
}

TEST_CASE("sparse nmf rejects negative input") {
  DenseMatrix v(2, 2);
  v(0, 0) = -0.5;
  REQUIRE_THROWS_AS(sparse_nmf(v, 2, 0.0, 10, 1), ContractViolation);
}

TEST_CASE("planted rank-1 factorization is recovered") {
  Rng rng(4);
  DenseMatrix w(30, 1), h(1, 3);
  for (double& x : w.values) x = 0.2 + rng.uniform();
  for (double& x : h.values) x = 0.2 + rng.uniform();
  const DenseMatrix v = matmul(w, h);

  const NmfRun run = sparse_nmf(v, 1, 0.0, 500, 99);
  const DenseMatrix wh = matmul(run.w, run.h);
  double err = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < v.values.size(); ++i) {
    err += (v.values[i] - wh.values[i]) * (v.values[i] - wh.values[i]);
    norm += v.values[i] * v.values[i];
  }
  REQUIRE(std::sqrt(err / norm) <= 1e-3);
}

TEST_CASE("lambda zero reduces to the plain frobenius objective") {
  Rng rng(6);
  DenseMatrix v(12, 3);
  for (double& x : v.values) x = rng.uniform();
  const NmfRun run = sparse_nmf(v, 2, 0.0, 50, 7);
  const DenseMatrix wh = matmul(run.w, run.h);
  double frob = 0.0;
  for (std::size_t i = 0; i < v.values.size(); ++i)
    frob += (v.values[i] - wh.values[i]) * (v.values[i] - wh.values[i]);
  REQUIRE(std::abs(run.objective_trace.back() - frob) <= 1e-12 * std::max(1.0, frob));
}

TEST_CASE("objective trace is non-increasing and factors stay non-negative") {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    DenseMatrix v(6 + rng.index(30), 3);
    for (double& x : v.values) x = rng.uniform();
    const double lambda = (trial % 2) ? 7.5 : 0.0;
    const NmfRun run = sparse_nmf(v, 1 + rng.index(4), lambda, 60, 1000 + trial);
    for (std::size_t i = 1; i < run.objective_trace.size(); ++i)
      REQUIRE(run.objective_trace[i] <= run.objective_trace[i - 1] + 1e-10);
    for (double x : run.w.values) REQUIRE(x >= 0.0);
    for (double x : run.h.values) REQUIRE(x >= 0.0);
  }
}

TEST_CASE("non-negativity holds after every single iteration") {
  Rng rng(44);
  DenseMatrix v(15, 3);
  for (double& x : v.values) x = rng.uniform();
  // running i iterations from the same seed replays the same prefix, so
  // checking each run end checks every intermediate step
  for (std::size_t iters = 1; iters <= 20; ++iters) {
    const NmfRun run = sparse_nmf(v, 3, 7.5, iters, 5);
    for (double x : run.w.values) REQUIRE(x > 0.0);
    for (double x : run.h.values) REQUIRE(x > 0.0);
  }
}

TEST_CASE("identical inputs give bitwise identical runs") {
  Rng rng(3);
  DenseMatrix v(20, 3);
  for (double& x : v.values) x = rng.uniform();
  const NmfRun a = sparse_nmf(v, 4, 7.5, 100, 123);
  const NmfRun b = sparse_nmf(v, 4, 7.5, 100, 123);
  REQUIRE(a.w.values == b.w.values);
  REQUIRE(a.h.values == b.h.values);
  REQUIRE(a.objective_trace == b.objective_trace);
}

TEST_CASE("larger sparsity penalty does not increase the l1 norm of H") {
  const double lambdas[3] = {0.0, 7.5, 20.0};
  std::vector<std::array<double, 3>> l1(10);
  Rng rng(55);
  for (int seed = 0; seed < 10; ++seed) {
    DenseMatrix v(25, 3);
    for (double& x : v.values) x = rng.uniform();
    for (int li = 0; li < 3; ++li) {
      const NmfRun run = sparse_nmf(v, 4, lambdas[li], 400, 77 + seed);
      double sum = 0.0;
      for (double x : run.h.values) sum += x;
      l1[seed][li] = sum;
    }
  }
  // median over seeds must be monotone non-increasing in lambda
  std::array<double, 3> medians{};
  for (int li = 0; li < 3; ++li) {
    std::vector<double> column;
    for (const auto& row : l1) column.push_back(row[li]);
    std::sort(column.begin(), column.end());
    medians[li] = 0.5 * (column[4] + column[5]);
  }
  REQUIRE(medians[1] <= medians[0]);
  REQUIRE(medians[2] <= medians[1]);
}

TEST_CASE("local weight selection") {
  SECTION("single run is selected and normalized to column max 1") {
    Rng rng(1);
    DenseMatrix v(10, 3);
    for (double& x : v.values) x = rng.uniform();
    const NmfRun run = sparse_nmf(v, 3, 0.0, 50, 1);
    const LocalWeights weights = select_local_weights({run});
    for (std::size_t j = 0; j < weights.w.cols; ++j) {
      double peak = 0.0;
      for (std::size_t i = 0; i < weights.w.rows; ++i)
        peak = std::max(peak, weights.w(i, j));
      REQUIRE(std::abs(peak - 1.0) <= 1e-12);
    }
    REQUIRE(weights.provenance.seed == 1);
    REQUIRE(weights.provenance.iterations == 50);
  }
  SECTION("orthogonal columns beat identical columns") {
    NmfRun orthogonal, identical;
    orthogonal.w = DenseMatrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    orthogonal.h = DenseMatrix::constant(2, 3, 0.1);
    identical.w = DenseMatrix::from_rows({{1.0, 1.0}, {1.0, 1.0}});
    identical.h = DenseMatrix::constant(2, 3, 0.1);
    identical.seed = 9;
    orthogonal.seed = 8;
    const LocalWeights weights = select_local_weights({identical, orthogonal});
    REQUIRE(weights.provenance.seed == 8);
  }
  SECTION("selection equals a brute-force argmax of the disjointness score") {
    Rng rng(66);
    DenseMatrix v(12, 3);
    for (double& x : v.values) x = rng.uniform();
    std::vector<NmfRun> runs;
    for (int s = 0; s < 5; ++s) runs.push_back(sparse_nmf(v, 3, 7.5, 80, 200 + s));
    const LocalWeights weights = select_local_weights(runs);

    double best = -1.0;
    std::size_t best_run = 0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const DenseMatrix& w = runs[r].w;
      double score = 0.0;
      std::size_t pairs = 0;
      for (std::size_t a = 0; a < w.cols; ++a) {
        for (std::size_t b = a + 1; b < w.cols; ++b) {
          double dot = 0.0, na = 0.0, nb = 0.0;
          for (std::size_t i = 0; i < w.rows; ++i) {
            dot += w(i, a) * w(i, b);
            na += w(i, a) * w(i, a);
            nb += w(i, b) * w(i, b);
          }
          score += 1.0 - dot / std::sqrt(na * nb);
          ++pairs;
        }
      }
      score /= static_cast<double>(pairs);
      if (score > best) {
        best = score;
        best_run = r;
      }
    }
    REQUIRE(weights.provenance.seed == runs[best_run].seed);
  }
  SECTION("runs with an all-zero column are excluded; all excluded errors") {
    NmfRun degenerate;
    degenerate.w = DenseMatrix::from_rows({{1.0, 0.0}, {0.5, 0.0}});
    degenerate.h = DenseMatrix::constant(2, 3, 0.1);
    REQUIRE_THROWS_AS(select_local_weights({degenerate}), DataError);
  }
}
