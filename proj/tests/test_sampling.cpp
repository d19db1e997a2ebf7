#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "meshparts/dataset.hpp"
#include "meshparts/decimate.hpp"
#include "meshparts/hierarchy.hpp"
#include "support/test_support.hpp"

using namespace meshparts;
using testsupport::make_icosphere;

TEST_CASE("decimate to the input size is the identity") {
  const Mesh sphere = make_icosphere(1);  // 42 vertices
  const DecimateResult dec = decimate(sphere, sphere.vertex_count());
  REQUIRE(dec.kept.size() == sphere.vertex_count());
  REQUIRE(max_abs_diff(dec.coarse.vertices, sphere.vertices) == 0.0);
  REQUIRE(dec.down.nnz() == sphere.vertex_count());
  for (const Triplet& t : dec.down.entries()) {
    REQUIRE(t.row == t.col);
    REQUIRE(t.value == 1.0);
  }
}

TEST_CASE("icosphere decimation keeps original positions") {
  const Mesh sphere = make_icosphere(3);  // 642 vertices
  const DecimateResult dec = decimate(sphere, 160);
  REQUIRE(dec.kept.size() >= 158);
  REQUIRE(dec.kept.size() <= 162);

  // membership: every coarse vertex position is an original position
  std::set<std::array<double, 3>> originals;
  for (std::size_t i = 0; i < sphere.vertex_count(); ++i)
    originals.insert({sphere.vertices(i, 0), sphere.vertices(i, 1), sphere.vertices(i, 2)});
  for (std::size_t r = 0; r < dec.coarse.vertex_count(); ++r) {
    const std::array<double, 3> p{dec.coarse.vertices(r, 0), dec.coarse.vertices(r, 1),
                                  dec.coarse.vertices(r, 2)};
    REQUIRE(originals.count(p) == 1);
  }

  // down * down^T = identity of the coarse size
  const DenseMatrix dense_down = dec.down.to_dense();
  const DenseMatrix product = matmul(dense_down, transpose(dense_down));
  REQUIRE(max_abs_diff(product, DenseMatrix::identity(dec.kept.size())) == 0.0);
}

TEST_CASE("decimation is deterministic") {
  const Mesh sphere = make_icosphere(2);  // 162
  const DecimateResult a = decimate(sphere, 40);
  const DecimateResult b = decimate(sphere, 40);
  REQUIRE(a.kept == b.kept);
  REQUIRE(a.coarse.faces == b.coarse.faces);
}

TEST_CASE("barycentric up-sampling") {
  const Mesh sphere = make_icosphere(2);
  const DecimateResult dec = decimate(sphere, 40);
  const SparseMatrix up = barycentric_up(dec.coarse, sphere, dec.kept);

  SECTION("kept vertices reproduce their coarse positions exactly") {
    const DenseMatrix lifted = up.multiply(dec.coarse.vertices);
    for (std::size_t r = 0; r < dec.kept.size(); ++r)
      for (std::size_t j = 0; j < 3; ++j)
        REQUIRE(lifted(dec.kept[r], j) == sphere.vertices(dec.kept[r], j));
  }

  SECTION("rows are convex combinations with at most 3 entries") {
    std::vector<double> row_sum(sphere.vertex_count(), 0.0);
    std::vector<std::size_t> row_count(sphere.vertex_count(), 0);
    for (const Triplet& t : up.entries()) {
      REQUIRE(t.value >= 0.0);
      row_sum[t.row] += t.value;
      ++row_count[t.row];
    }
    for (std::size_t i = 0; i < sphere.vertex_count(); ++i) {
      REQUIRE(std::abs(row_sum[i] - 1.0) <= 1e-9);
      REQUIRE(row_count[i] <= 3);
    }
  }

  SECTION("up-sampling a constant field preserves it") {
    const DenseMatrix constant = DenseMatrix::constant(dec.coarse.vertex_count(), 1, 3.25);
    const DenseMatrix lifted = up.multiply(constant);
    for (double v : lifted.values) REQUIRE(std::abs(v - 3.25) <= 1e-9);
  }

  SECTION("no faces on the coarse mesh is a contract violation") {
    Mesh faceless = dec.coarse;
    faceless.faces.clear();
    REQUIRE_THROWS_AS(barycentric_up(faceless, sphere, dec.kept), ContractViolation);
  }
}

TEST_CASE("a point planted at known barycentric coordinates is reproduced") {
  // one coarse triangle; a fine vertex placed at (0.2, 0.3, 0.5) inside it
  Mesh coarse;
  coarse.vertices = DenseMatrix::from_rows({{0, 0, 0}, {2, 0, 0}, {0, 2, 0}});
  coarse.faces = {{0, 1, 2}};
  Mesh fine;
  const double bx = 0.2 * 0.0 + 0.3 * 2.0 + 0.5 * 0.0;
  const double by = 0.2 * 0.0 + 0.3 * 0.0 + 0.5 * 2.0;
  fine.vertices = DenseMatrix::from_rows({{0, 0, 0}, {2, 0, 0}, {0, 2, 0}, {bx, by, 0}});
  fine.faces = {{0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
  const SparseMatrix up = barycentric_up(coarse, fine, {0, 1, 2});
  const DenseMatrix lifted = up.multiply(coarse.vertices);
  for (std::size_t j = 0; j < 3; ++j)
    REQUIRE(std::abs(lifted(3, j) - fine.vertices(3, j)) <= 1e-9);
  REQUIRE(std::abs(up.at(3, 0) - 0.2) <= 1e-9);
  REQUIRE(std::abs(up.at(3, 1) - 0.3) <= 1e-9);
  REQUIRE(std::abs(up.at(3, 2) - 0.5) <= 1e-9);
}

TEST_CASE("hierarchy construction") {
  SECTION("desk-scale chain 1280 -> 320 -> 80 -> 20 -> 5") {
    const Mesh sheet = sheet_template(40, 32);
    REQUIRE(sheet.vertex_count() == 1280);
    const Hierarchy h = build_hierarchy(sheet, 4, 4.0);
    REQUIRE(h.levels.size() == 5);
    REQUIRE(h.transitions() == 4);
    const std::size_t expected[5] = {1280, 320, 80, 20, 5};
    for (std::size_t l = 0; l < 5; ++l) {
      const std::size_t n = h.levels[l].mesh.vertex_count();
      REQUIRE(n + 2 >= expected[l]);
      REQUIRE(n <= expected[l] + 2);
    }
    // down restricted to kept vertices composes with up to the identity
    for (std::size_t t = 0; t < h.transitions(); ++t) {
      const DenseMatrix composite = matmul(h.down[t].to_dense(), h.up[t].to_dense());
      REQUIRE(max_abs_diff(composite, DenseMatrix::identity(h.levels[t + 1].mesh.vertex_count())) <=
              1e-12);
    }
  }
  SECTION("paper-scale ceiling chain (documented expectation)") {
    const auto sizes = hierarchy_size_chain(53215, 4, 4.0);
    REQUIRE(sizes == std::vector<std::size_t>{53215, 13304, 3326, 832, 208});
  }
  SECTION("level boundaries") {
    const Mesh sphere = make_icosphere(1);
    REQUIRE_THROWS_AS(build_hierarchy(sphere, 0, 4.0), ContractViolation);
    const Hierarchy one = build_hierarchy(sphere, 1, 4.0);
    REQUIRE(one.transitions() == 1);
    REQUIRE_THROWS_AS(build_hierarchy(sphere, 5, 4.0), DataError);  // too deep
  }
  SECTION("each level satisfies the laplacian invariants") {
    const Mesh sphere = make_icosphere(2);
    const Hierarchy h = build_hierarchy(sphere, 2, 4.0);
    for (const auto& level : h.levels) {
      std::vector<double> row_sum(level.mesh.vertex_count(), 0.0);
      for (const Triplet& t : level.bundle.laplacian.entries()) row_sum[t.row] += t.value;
      for (double s : row_sum) REQUIRE(std::abs(s) <= 1e-9);
      REQUIRE(level.bundle.lambda_max > 0.0);
    }
  }
}
