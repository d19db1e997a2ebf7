#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "meshparts/chebconv.hpp"
#include "meshparts/laplacian.hpp"
#include "meshparts/tape.hpp"
#include "support/test_support.hpp"

using namespace meshparts;
using testsupport::jacobi_eigen;
using testsupport::random_fan_mesh;
using testsupport::relative_error;
using testsupport::tape_finite_difference;

namespace {

// Spectral oracle: T_k(L~) x = U T_k(Lambda) U^T x via a dense
// eigen-decomposition, with the scalar Chebyshev recurrence on eigenvalues.
DenseMatrix spectral_filter(const DenseMatrix& scaled_dense, const DenseMatrix& x,
                            std::size_t k) {
  const auto eig = jacobi_eigen(scaled_dense);
  const std::size_t n = scaled_dense.rows;
  std::vector<double> tk(n);
  for (std::size_t i = 0; i < n; ++i) {
    double t0 = 1.0, t1 = eig.values[i];
    if (k == 0) {
      tk[i] = t0;
      continue;
    }
    for (std::size_t step = 2; step <= k; ++step) {
      const double t2 = 2.0 * eig.values[i] * t1 - t0;
      t0 = t1;
      t1 = t2;
    }
    tk[i] = t1;
  }
  // U diag(tk) U^T x
  const DenseMatrix ut_x = matmul(transpose(eig.vectors), x);
  DenseMatrix scaled_cols = ut_x;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) scaled_cols(i, j) *= tk[i];
  return matmul(eig.vectors, scaled_cols);
}

SparseMatrix random_scaled_laplacian(Rng& rng, std::size_t vertices) {
  const Mesh mesh = random_fan_mesh(rng, vertices);
  return laplacian_bundle(mesh).scaled;
}

}  // namespace

TEST_CASE("cheb basis boundary cases") {
  Rng rng(2);
  DenseMatrix x(4, 2);
  for (double& v : x.values) v = rng.uniform(-1.0, 1.0);

  SECTION("order 1 returns the input unchanged") {
    const SparseMatrix scaled = SparseMatrix::identity(4);
    const auto basis = cheb_basis(scaled, x, 1);
    REQUIRE(basis.size() == 1);
    REQUIRE(max_abs_diff(basis[0], x) == 0.0);
  }
  SECTION("zero operator gives [x, 0, -x]") {
    const SparseMatrix zero = SparseMatrix::from_triplets(4, 4, {});
    const auto basis = cheb_basis(zero, x, 3);
    REQUIRE(basis.size() == 3);
    REQUIRE(max_abs_diff(basis[0], x) == 0.0);
    for (double v : basis[1].values) REQUIRE(v == 0.0);
    DenseMatrix negated = x;
    for (double& v : negated.values) v = -v;
    REQUIRE(max_abs_diff(basis[2], negated) == 0.0);
  }
}

TEST_CASE("cheb basis satisfies the three-term recurrence exactly") {
  Rng rng(31);
  const SparseMatrix scaled = random_scaled_laplacian(rng, 12);
  DenseMatrix x(12, 3);
  for (double& v : x.values) v = rng.uniform(-1.0, 1.0);
  const auto basis = cheb_basis(scaled, x, 6);
  for (std::size_t k = 2; k < 6; ++k) {
    DenseMatrix expected = scaled.multiply(basis[k - 1]);
    for (std::size_t i = 0; i < expected.values.size(); ++i)
      expected.values[i] = 2.0 * expected.values[i] - basis[k - 2].values[i];
    REQUIRE(max_abs_diff(basis[k], expected) <= 1e-12);
  }
}

TEST_CASE("cheb basis matches the spectral oracle") {
  Rng rng(77);
  const SparseMatrix scaled = random_scaled_laplacian(rng, 10);
  const DenseMatrix dense = scaled.to_dense();
  DenseMatrix x(10, 2);
  for (double& v : x.values) v = rng.uniform(-1.0, 1.0);
  const auto basis = cheb_basis(scaled, x, 6);
  for (std::size_t k = 0; k < 6; ++k)
    REQUIRE(max_abs_diff(basis[k], spectral_filter(dense, x, k)) <= 1e-8);
}

TEST_CASE("cheb conv examples") {
  Rng rng(5);
  const SparseMatrix scaled = random_scaled_laplacian(rng, 6);
  DenseMatrix x(6, 1);
  for (double& v : x.values) v = rng.uniform(-1.0, 1.0);

  SECTION("identity filter with theta = e_0") {
    ChebLayer layer;
    layer.theta = {DenseMatrix::constant(1, 1, 1.0), DenseMatrix(1, 1), DenseMatrix(1, 1)};
    layer.bias = DenseMatrix::constant(1, 1, 0.25);
    const DenseMatrix y = cheb_conv(layer, scaled, x);
    for (std::size_t i = 0; i < 6; ++i) REQUIRE(std::abs(y(i, 0) - (x(i, 0) + 0.25)) <= 1e-15);
  }
  SECTION("zero filter broadcasts the bias") {
    ChebLayer layer;
    layer.theta = {DenseMatrix(1, 1), DenseMatrix(1, 1)};
    layer.bias = DenseMatrix::constant(1, 1, -0.5);
    const DenseMatrix y = cheb_conv(layer, scaled, x);
    for (double v : y.values) REQUIRE(v == -0.5);
  }
}

TEST_CASE("cheb conv matches a densified oracle and is linear") {
  Rng rng(13);
  const Mesh mesh = random_fan_mesh(rng, 8);
  const LaplacianBundle bundle = laplacian_bundle(mesh);
  const DenseMatrix dense = bundle.scaled.to_dense();

  ChebLayer layer;
  const std::size_t order = 4, f_in = 3, f_out = 2;
  for (std::size_t k = 0; k < order; ++k) {
    DenseMatrix theta(f_in, f_out);
    for (double& v : theta.values) v = rng.uniform(-1.0, 1.0);
    layer.theta.push_back(std::move(theta));
  }
  layer.bias = DenseMatrix(1, f_out);
  for (double& v : layer.bias.values) v = rng.uniform(-1.0, 1.0);

  DenseMatrix x(8, f_in), y(8, f_in);
  for (double& v : x.values) v = rng.uniform(-1.0, 1.0);
  for (double& v : y.values) v = rng.uniform(-1.0, 1.0);

  SECTION("densified oracle") {
    // sum_k (dense powers via explicit recurrence on the dense matrix) theta_k
    std::vector<DenseMatrix> t;
    t.push_back(DenseMatrix::identity(8));
    t.push_back(dense);
    for (std::size_t k = 2; k < order; ++k) {
      DenseMatrix next = matmul(dense, t[k - 1]);
      for (std::size_t i = 0; i < next.values.size(); ++i)
        next.values[i] = 2.0 * next.values[i] - t[k - 2].values[i];
      t.push_back(std::move(next));
    }
    DenseMatrix expected(8, f_out);
    for (std::size_t k = 0; k < order; ++k) {
      const DenseMatrix term = matmul(matmul(t[k], x), layer.theta[k]);
      for (std::size_t i = 0; i < expected.values.size(); ++i)
        expected.values[i] += term.values[i];
    }
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < f_out; ++j) expected(i, j) += layer.bias.values[j];
    REQUIRE(max_abs_diff(cheb_conv(layer, bundle.scaled, x), expected) <= 1e-10);
  }

  SECTION("linearity in the input") {
    DenseMatrix sum(8, f_in);
    for (std::size_t i = 0; i < sum.values.size(); ++i)
      sum.values[i] = x.values[i] + y.values[i];
    const DenseMatrix conv_sum = cheb_conv(layer, bundle.scaled, sum);
    const DenseMatrix conv_x = cheb_conv(layer, bundle.scaled, x);
    const DenseMatrix conv_y = cheb_conv(layer, bundle.scaled, y);
    for (std::size_t i = 0; i < conv_sum.values.size(); ++i) {
      const double lhs = conv_sum.values[i] - layer.bias.values[i % f_out];
      const double rhs = (conv_x.values[i] - layer.bias.values[i % f_out]) +
                         (conv_y.values[i] - layer.bias.values[i % f_out]);
      REQUIRE(std::abs(lhs - rhs) <= 1e-10);
    }
  }
}

TEST_CASE("tape convolution matches the pure path and its gradients check out") {
  Rng rng(23);
  const Mesh mesh = random_fan_mesh(rng, 7);
  const LaplacianBundle bundle = laplacian_bundle(mesh);

  const std::size_t order = 3, f_in = 2, f_out = 2;
  ChebLayer layer = ChebLayer::glorot(order, f_in, f_out, rng);
  for (double& v : layer.bias.values) v = rng.uniform(-0.5, 0.5);
  DenseMatrix x(7, f_in);
  for (double& v : x.values) v = rng.uniform(-1.0, 1.0);

  Tape tape;
  const int x_leaf = tape.leaf(7, f_in, /*trainable=*/false);
  tape.leaf_value(x_leaf).values = x.values;
  ChebLayerNodes nodes = tape_cheb_layer(tape, order, f_in, f_out);
  for (std::size_t k = 0; k < order; ++k)
    tape.leaf_value(nodes.theta[k]).values = layer.theta[k].values;
  tape.leaf_value(nodes.bias).values = layer.bias.values;
  const int conv = tape_cheb_conv(tape, bundle.scaled, x_leaf, nodes);
  const int loss = tape.sum(conv);
  tape.forward();

  SECTION("forward values agree with the pure implementation") {
    REQUIRE(max_abs_diff(tape.value(conv), cheb_conv(layer, bundle.scaled, x)) <= 1e-14);
  }

  SECTION("theta and bias gradients match finite differences") {
    tape.evaluate_and_backprop(loss);
    std::vector<int> leaves = nodes.theta;
    leaves.push_back(nodes.bias);
    for (int leaf : leaves) {
      const DenseMatrix grad = tape.gradient(leaf);
      for (std::size_t i = 0; i < grad.values.size(); ++i) {
        const double fd = tape_finite_difference(tape, leaf, i, loss);
        REQUIRE(relative_error(fd, grad.values[i]) <= 1e-4);
      }
    }
  }
}
