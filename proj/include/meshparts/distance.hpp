#pragma once

#include <cmath>
#include <vector>

#include "meshparts/errors.hpp"
#include "meshparts/mesh.hpp"

namespace meshparts {

/// Per-vertex distances between two meshes in correspondence. Because the
/// matching is given, the Hausdorff distance equals the maximum entry.
struct DistanceField {
  std::vector<double> per_vertex;
  double hausdorff = 0.0;
};

inline DistanceField vertex_distance_field(const Mesh& a, const Mesh& b) {
  require(a.vertex_count() == b.vertex_count(),
          "distance field requires meshes with equal vertex counts");
  DistanceField field;
  field.per_vertex.resize(a.vertex_count());
  for (std::size_t i = 0; i < a.vertex_count(); ++i) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      const double d = a.vertices(i, j) - b.vertices(i, j);
      d2 += d * d;
    }
    field.per_vertex[i] = std::sqrt(d2);
    field.hausdorff = std::max(field.hausdorff, field.per_vertex[i]);
  }
  return field;
}

}  // namespace meshparts
