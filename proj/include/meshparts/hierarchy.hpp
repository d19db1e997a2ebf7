#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "meshparts/decimate.hpp"
#include "meshparts/errors.hpp"
#include "meshparts/laplacian.hpp"
#include "meshparts/mesh.hpp"
#include "meshparts/sparse_matrix.hpp"

namespace meshparts {

/// Coarse-to-fine mesh chain. levels[0] is the input template; each
/// transition i maps level i (fine) to level i+1 (coarse) through a binary
/// selector `down` and back through barycentric rows in `up`.
struct Hierarchy {
  struct Level {
    Mesh mesh;
    LaplacianBundle bundle;
  };
  std::vector<Level> levels;
  std::vector<SparseMatrix> down;                 // level i -> i+1
  std::vector<SparseMatrix> up;                   // level i+1 -> i
  std::vector<std::vector<std::uint32_t>> kept;   // coarse row -> fine index

  std::size_t transitions() const { return down.size(); }
  const Mesh& finest() const { return levels.front().mesh; }
  const Mesh& coarsest() const { return levels.back().mesh; }
};

namespace detail {

struct Barycentric {
  double u, v, w;  // weights on triangle corners a, b, c
  double distance2;
};

// Closest point on triangle abc to p, returned in barycentric form.
inline Barycentric closest_point_on_triangle(const std::array<double, 3>& p,
                                             const std::array<double, 3>& a,
                                             const std::array<double, 3>& b,
                                             const std::array<double, 3>& c) {
  auto sub = [](const std::array<double, 3>& x, const std::array<double, 3>& y) {
    return std::array<double, 3>{x[0] - y[0], x[1] - y[1], x[2] - y[2]};
  };
  auto dot = [](const std::array<double, 3>& x, const std::array<double, 3>& y) {
    return x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
  };
  const auto ab = sub(b, a), ac = sub(c, a), ap = sub(p, a);
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);

  auto finish = [&](double u, double v, double w) {
    const std::array<double, 3> q{u * a[0] + v * b[0] + w * c[0],
                                  u * a[1] + v * b[1] + w * c[1],
                                  u * a[2] + v * b[2] + w * c[2]};
    const auto pq = sub(p, q);
    return Barycentric{u, v, w, dot(pq, pq)};
  };

  if (d1 <= 0.0 && d2 <= 0.0) return finish(1.0, 0.0, 0.0);

  const auto bp = sub(p, b);
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return finish(0.0, 1.0, 0.0);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double t = d1 / (d1 - d3);
    return finish(1.0 - t, t, 0.0);
  }

  const auto cp = sub(p, c);
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return finish(0.0, 0.0, 1.0);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double t = d2 / (d2 - d6);
    return finish(1.0 - t, 0.0, t);
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return finish(0.0, 1.0 - t, t);
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return finish(1.0 - v - w, v, w);
}

}  // namespace detail

/// Up-sampling matrix (fine x coarse). Vertices in `kept` select their coarse
/// row directly; every other fine vertex is expressed in barycentric
/// coordinates of its closest point on the nearest coarse triangle (ties on
/// distance go to the lowest face index). Coordinates are clamped
/// non-negative and renormalized so rows are convex.
inline SparseMatrix barycentric_up(const Mesh& coarse, const Mesh& fine,
                                   const std::vector<std::uint32_t>& kept) {
  require(!coarse.faces.empty(), "barycentric_up: coarse mesh has no faces");
  require(kept.size() == coarse.vertex_count(), "barycentric_up: kept/coarse size mismatch");

  std::vector<char> is_kept(fine.vertex_count(), 0);
  std::vector<std::uint32_t> coarse_row(fine.vertex_count(), 0);
  for (std::uint32_t r = 0; r < kept.size(); ++r) {
    require(kept[r] < fine.vertex_count(), "barycentric_up: kept index out of range");
    is_kept[kept[r]] = 1;
    coarse_row[kept[r]] = r;
  }

  std::vector<Triplet> triplets;
  triplets.reserve(fine.vertex_count() * 3);
  for (std::size_t i = 0; i < fine.vertex_count(); ++i) {
    if (is_kept[i]) {
      triplets.push_back({i, coarse_row[i], 1.0});
      continue;
    }
    const std::array<double, 3> p{fine.vertices(i, 0), fine.vertices(i, 1),
                                  fine.vertices(i, 2)};
    detail::Barycentric best{1.0, 0.0, 0.0, 0.0};
    std::size_t best_face = coarse.faces.size();
    for (std::size_t f = 0; f < coarse.faces.size(); ++f) {
      const auto& t = coarse.faces[f];
      std::array<std::array<double, 3>, 3> corner;
      for (std::size_t k = 0; k < 3; ++k)
        corner[k] = {coarse.vertices(t[k], 0), coarse.vertices(t[k], 1),
                     coarse.vertices(t[k], 2)};
      const auto bc = detail::closest_point_on_triangle(p, corner[0], corner[1], corner[2]);
      if (best_face == coarse.faces.size() || bc.distance2 < best.distance2) {
        best = bc;
        best_face = f;
      }
    }
    std::array<double, 3> weights{best.u, best.v, best.w};
    double sum = 0.0;
    for (double& w : weights) {
      if (w < 0.0) w = 0.0;
      sum += w;
    }
    const auto& t = coarse.faces[best_face];
    for (std::size_t k = 0; k < 3; ++k) {
      const double w = weights[k] / sum;
      if (w != 0.0) triplets.push_back({i, t[k], w});
    }
  }

  // duplicate coarse indices within one row cannot happen: faces have three
  // distinct corners and kept rows hold a single entry
  return SparseMatrix::from_triplets(fine.vertex_count(), coarse.vertex_count(),
                                     std::move(triplets));
}

/// Builds `levels` decimation transitions with per-transition target
/// ceil(N / factor), computing the Laplacian bundle at every level.
inline Hierarchy build_hierarchy(const Mesh& template_mesh, std::size_t levels, double factor) {
  require(levels >= 1, "build_hierarchy: levels must be >= 1");
  require(factor > 1.0, "build_hierarchy: factor must be > 1");
  template_mesh.validate();

  Hierarchy h;
  h.levels.push_back({template_mesh, laplacian_bundle(template_mesh)});
  for (std::size_t level = 0; level < levels; ++level) {
    const Mesh& fine = h.levels.back().mesh;
    const std::size_t target = static_cast<std::size_t>(
        std::ceil(static_cast<double>(fine.vertex_count()) / factor));
    if (target < 3)
      throw DataError("hierarchy level " + std::to_string(level + 1) + " would need " +
                      std::to_string(target) + " vertices; template too small");
    DecimateResult dec = decimate(fine, target);
    SparseMatrix up = barycentric_up(dec.coarse, fine, dec.kept);
    h.down.push_back(std::move(dec.down));
    h.up.push_back(std::move(up));
    h.kept.push_back(std::move(dec.kept));
    LaplacianBundle bundle = laplacian_bundle(dec.coarse);
    h.levels.push_back({std::move(dec.coarse), std::move(bundle)});
  }
  return h;
}

/// Hierarchy level sizes for a given start count, by the same ceiling rule.
inline std::vector<std::size_t> hierarchy_size_chain(std::size_t start, std::size_t levels,
                                                     double factor) {
  std::vector<std::size_t> sizes{start};
  for (std::size_t i = 0; i < levels; ++i)
    sizes.push_back(static_cast<std::size_t>(
        std::ceil(static_cast<double>(sizes.back()) / factor)));
  return sizes;
}

}  // namespace meshparts
