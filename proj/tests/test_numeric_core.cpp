#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "meshparts/dense_matrix.hpp"
#include "meshparts/optimizer.hpp"
#include "meshparts/rng.hpp"
#include "meshparts/sparse_matrix.hpp"
#include "meshparts/tape.hpp"
#include "support/test_support.hpp"

using namespace meshparts;
using testsupport::relative_error;
using testsupport::tape_finite_difference;

TEST_CASE("sparse matrix validates its invariants") {
  REQUIRE_THROWS_AS(SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}}),
                    ContractViolation);
  REQUIRE_THROWS_AS(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), ContractViolation);
  REQUIRE_THROWS_AS(SparseMatrix::from_triplets(2, 2, {{0, 0, NAN}}), NumericError);

  // exact zeros are dropped, entries come out sorted
  const auto m = SparseMatrix::from_triplets(3, 3, {{2, 1, 4.0}, {0, 2, 1.0}, {1, 1, 0.0}});
  REQUIRE(m.nnz() == 2);
  REQUIRE(m.entries()[0].row == 0);
  REQUIRE(m.at(2, 1) == 4.0);
  REQUIRE(m.at(1, 1) == 0.0);
}

TEST_CASE("abs error value and gradient") {
  Tape tape;
  const int x = tape.leaf(1, 2);
  tape.leaf_value(x).values = {1.0, -2.0};
  const int zero = tape.leaf(1, 2, /*trainable=*/false);
  const int loss = tape.abs_error(x, zero);
  REQUIRE(tape.evaluate_and_backprop(loss) == 3.0);
  REQUIRE(tape.gradient(x).values[0] == 1.0);
  REQUIRE(tape.gradient(x).values[1] == -1.0);
}

TEST_CASE("relu kink subgradient is zero") {
  Tape tape;
  const int theta = tape.leaf(1, 1);
  tape.leaf_value(theta)(0, 0) = 0.0;
  const int c = tape.leaf(1, 3, /*trainable=*/false);
  tape.leaf_value(c).values = {1.0, -2.0, 3.0};
  const int loss = tape.sum(tape.relu(tape.mat_product(theta, c)));
  REQUIRE(tape.evaluate_and_backprop(loss) == 0.0);
  REQUIRE(tape.gradient(theta)(0, 0) == 0.0);
}

TEST_CASE("non-scalar terminal node is rejected") {
  Tape tape;
  const int x = tape.leaf(2, 2);
  const int y = tape.relu(x);
  tape.forward();
  REQUIRE_THROWS_AS(tape.backward(y), ContractViolation);
}

TEST_CASE("non-finite intermediate raises a numeric error naming the node") {
  Tape tape;
  const int x = tape.leaf(1, 1);
  tape.leaf_value(x)(0, 0) = 1e308;
  const int y = tape.mat_product(x, x);  // overflows to inf
  (void)y;
  try {
    tape.forward();
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    REQUIRE(std::string(e.what()).find("node #") != std::string::npos);
  }
}

TEST_CASE("random three-layer composite matches finite differences") {
  Rng rng(7);
  Tape tape;
  // 20 leaves combined through products, bias, relu, hadamard and reductions
  std::vector<int> leaves;
  const int x = tape.leaf(4, 5);
  leaves.push_back(x);
  const int w1 = tape.leaf(5, 6);
  leaves.push_back(w1);
  const int b1 = tape.leaf(1, 6);
  leaves.push_back(b1);
  const int w2 = tape.leaf(6, 3);
  leaves.push_back(w2);
  const int b2 = tape.leaf(1, 3);
  leaves.push_back(b2);
  const int w3 = tape.leaf(3, 2);
  leaves.push_back(w3);
  for (int i = 0; i < 14; ++i) leaves.push_back(tape.leaf(4, 2));

  const int h1 = tape.relu(tape.bias_add(tape.mat_product(x, w1), b1));
  const int h2 = tape.relu(tape.bias_add(tape.mat_product(h1, w2), b2));
  int h3 = tape.mat_product(h2, w3);
  for (std::size_t i = 6; i < leaves.size(); ++i) {
    h3 = (i % 2) ? tape.add(h3, leaves[i]) : tape.multiply(h3, leaves[i]);
  }
  const int target = tape.leaf(4, 2, /*trainable=*/false);
  const int loss = tape.abs_error(tape.relu(h3), target);

  for (int leaf : leaves)
    for (double& v : tape.leaf_value(leaf).values) v = rng.uniform(-1.0, 1.0);
  for (double& v : tape.leaf_value(target).values) v = rng.uniform(-1.0, 1.0);

  tape.evaluate_and_backprop(loss);
  std::vector<DenseMatrix> grads;
  for (int leaf : leaves) grads.push_back(tape.gradient(leaf));

  for (std::size_t l = 0; l < leaves.size(); ++l) {
    for (std::size_t i = 0; i < grads[l].values.size(); ++i) {
      const double fd = tape_finite_difference(tape, leaves[l], i, loss);
      REQUIRE(relative_error(fd, grads[l].values[i]) <= 1e-4);
    }
  }
}

TEST_CASE("every primitive matches finite differences on three shapes") {
  Rng rng(11);
  const std::size_t shapes[3][2] = {{2, 3}, {5, 4}, {1, 7}};
  for (const auto& shape : shapes) {
    const std::size_t r = shape[0], c = shape[1];
    Tape tape;
    const int a = tape.leaf(r, c);
    const int b = tape.leaf(r, c);
    const int w = tape.leaf(c, 2);
    const int bias = tape.leaf(1, c);
    const int col = tape.leaf(r, 1);
    const int row = tape.leaf(1, c);
    const int target = tape.leaf(r, c, /*trainable=*/false);

    std::vector<Triplet> triplets;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j)
        if (rng.uniform() < 0.6) triplets.push_back({i, j, rng.uniform(-1.0, 1.0)});
    const SparseMatrix s = SparseMatrix::from_triplets(r, r, std::move(triplets));

    const int spmm = tape.sparse_product(s, a);
    const int summed = tape.add(spmm, tape.scale(b, -0.7));
    const int had = tape.multiply(summed, tape.bias_add(a, bias));
    const int reshaped = tape.reshape(had, c, r);
    const int prod = tape.mat_product(tape.reshape(reshaped, r, c), w);
    const int outer = tape.outer(col, row);
    const int loss = tape.add(
        tape.add(tape.sum(prod), tape.abs_error(outer, target)),
        tape.scale(tape.sum(tape.relu(summed)), 0.5));

    const std::vector<int> leaves{a, b, w, bias, col, row};
    for (int leaf : leaves)
      for (double& v : tape.leaf_value(leaf).values) v = rng.uniform(-1.0, 1.0);
    for (double& v : tape.leaf_value(target).values) v = rng.uniform(-1.0, 1.0);

    tape.evaluate_and_backprop(loss);
    std::vector<DenseMatrix> grads;
    for (int leaf : leaves) grads.push_back(tape.gradient(leaf));
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      for (std::size_t i = 0; i < grads[l].values.size(); ++i) {
        const double fd = tape_finite_difference(tape, leaves[l], i, loss);
        REQUIRE(relative_error(fd, grads[l].values[i]) <= 1e-4);
      }
    }
  }
}

TEST_CASE("sparse product backprop equals the densified product") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 10 + rng.index(21);  // up to 30
    const std::size_t c = 1 + rng.index(6);
    std::vector<Triplet> triplets;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (rng.uniform() < 0.15) triplets.push_back({i, j, rng.uniform(-1.0, 1.0)});
    const SparseMatrix s = SparseMatrix::from_triplets(n, n, std::move(triplets));

    Tape sparse_tape;
    const int xs = sparse_tape.leaf(n, c);
    const int target_s = sparse_tape.leaf(n, c, /*trainable=*/false);
    const int loss_s = sparse_tape.abs_error(sparse_tape.sparse_product(s, xs), target_s);

    Tape dense_tape;
    const int dense_const = dense_tape.leaf(n, n, /*trainable=*/false);
    dense_tape.leaf_value(dense_const).values = s.to_dense().values;
    const int xd = dense_tape.leaf(n, c);
    const int target_d = dense_tape.leaf(n, c, /*trainable=*/false);
    const int loss_d = dense_tape.abs_error(dense_tape.mat_product(dense_const, xd), target_d);

    DenseMatrix x(n, c), target(n, c);
    for (double& v : x.values) v = rng.uniform(-1.0, 1.0);
    for (double& v : target.values) v = rng.uniform(-1.0, 1.0);
    sparse_tape.leaf_value(xs).values = x.values;
    sparse_tape.leaf_value(target_s).values = target.values;
    dense_tape.leaf_value(xd).values = x.values;
    dense_tape.leaf_value(target_d).values = target.values;

    const double vs = sparse_tape.evaluate_and_backprop(loss_s);
    const double vd = dense_tape.evaluate_and_backprop(loss_d);
    REQUIRE(std::abs(vs - vd) <= 1e-12);
    REQUIRE(max_abs_diff(sparse_tape.gradient(xs), dense_tape.gradient(xd)) <= 1e-12);
  }
}

TEST_CASE("sgd momentum examples") {
  SECTION("momentum zero reduces to plain sgd") {
    DenseMatrix p(1, 1);
    p(0, 0) = 1.0;
    DenseMatrix g(1, 1);
    g(0, 0) = 2.0;
    OptimizerState state = OptimizerState::for_params({&p}, 0.0);
    sgd_momentum_step({&p}, {&g}, state, 0.1);
    REQUIRE(std::abs(p(0, 0) - 0.8) <= 1e-15);
  }
  SECTION("first step with momentum") {
    DenseMatrix p(1, 1), g(1, 1);
    g(0, 0) = 1.0;
    OptimizerState state = OptimizerState::for_params({&p}, 0.9);
    sgd_momentum_step({&p}, {&g}, state, 1.0);
    REQUIRE(state.velocity[0](0, 0) == -1.0);
    REQUIRE(p(0, 0) == -1.0);
  }
  SECTION("two steps with constant gradient") {
    DenseMatrix p(1, 1), g(1, 1);
    g(0, 0) = 1.0;
    OptimizerState state = OptimizerState::for_params({&p}, 0.9);
    sgd_momentum_step({&p}, {&g}, state, 1.0);
    sgd_momentum_step({&p}, {&g}, state, 1.0);
    // v1 = -1, v2 = 0.9*(-1) - 1 = -1.9, p = -1 - 1.9
    REQUIRE(std::abs(p(0, 0) - (-2.9)) <= 1e-15);
  }
  SECTION("shape mismatch is a contract violation") {
    DenseMatrix p(1, 2), g(2, 1);
    OptimizerState state = OptimizerState::for_params({&p}, 0.9);
    REQUIRE_THROWS_AS(sgd_momentum_step({&p}, {&g}, state, 1.0), ContractViolation);
  }
}

TEST_CASE("momentum zero is bitwise identical to plain gradient descent") {
  Rng rng(5);
  DenseMatrix p_momentum(3, 4), p_plain(3, 4);
  for (std::size_t i = 0; i < p_momentum.values.size(); ++i)
    p_momentum.values[i] = p_plain.values[i] = rng.uniform(-1.0, 1.0);
  OptimizerState state = OptimizerState::for_params({&p_momentum}, 0.0);
  for (int step = 0; step < 10; ++step) {
    DenseMatrix g(3, 4);
    for (double& v : g.values) v = rng.uniform(-1.0, 1.0);
    const double lr = 0.05 + 0.01 * step;
    sgd_momentum_step({&p_momentum}, {&g}, state, lr);
    for (std::size_t i = 0; i < p_plain.values.size(); ++i)
      p_plain.values[i] += -lr * g.values[i];
  }
  for (std::size_t i = 0; i < p_plain.values.size(); ++i)
    REQUIRE(p_momentum.values[i] == p_plain.values[i]);
}

TEST_CASE("learning rate schedule") {
  REQUIRE(learning_rate(0) == 0.0125);
  REQUIRE(std::abs(learning_rate(1) - 0.012375) <= 1e-16);
  // closed form at epoch 299
  const double expected = 0.0125 * std::pow(0.99, 299.0);
  REQUIRE(learning_rate(299) == expected);
  REQUIRE(std::abs(expected - 6.18e-4) <= 1e-5);

  double previous = learning_rate(0);
  for (std::size_t epoch = 1; epoch <= 1000; ++epoch) {
    const double lr = learning_rate(epoch);
    REQUIRE(lr > 0.0);
    REQUIRE(lr < previous);
    previous = lr;
  }
}
