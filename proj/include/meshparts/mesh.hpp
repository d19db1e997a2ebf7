#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "meshparts/dense_matrix.hpp"
#include "meshparts/errors.hpp"

namespace meshparts {

/// Triangle mesh: Nx3 vertex positions plus index triples. Quads and larger
/// polygons are triangulated at load time, so faces are always triangles.
struct Mesh {
  DenseMatrix vertices;  // N x 3
  std::vector<std::array<std::uint32_t, 3>> faces;

  std::size_t vertex_count() const { return vertices.rows; }
  std::size_t face_count() const { return faces.size(); }

  void validate() const {
    require(vertices.cols == 3, "mesh vertices must be Nx3");
    require(vertices.rows >= 3, "mesh needs at least 3 vertices");
    if (!vertices.all_finite()) throw NumericError("mesh has non-finite vertex positions");
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const auto& t = faces[f];
      for (std::uint32_t idx : t)
        require(idx < vertices.rows, "face " + std::to_string(f) + " references vertex " +
                                         std::to_string(idx) + " out of range");
      require(t[0] != t[1] && t[1] != t[2] && t[0] != t[2],
              "face " + std::to_string(f) + " is degenerate");
    }
  }
};

inline std::array<double, 3> centroid(const Mesh& mesh) {
  std::array<double, 3> c{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < mesh.vertices.rows; ++i)
    for (std::size_t j = 0; j < 3; ++j) c[j] += mesh.vertices(i, j);
  for (double& x : c) x /= static_cast<double>(mesh.vertices.rows);
  return c;
}

inline DenseMatrix translated(const DenseMatrix& vertices, const std::array<double, 3>& offset) {
  DenseMatrix out = vertices;
  for (std::size_t i = 0; i < out.rows; ++i)
    for (std::size_t j = 0; j < 3; ++j) out(i, j) += offset[j];
  return out;
}

inline double bounding_box_diagonal(const Mesh& mesh) {
  std::array<double, 3> lo{}, hi{};
  for (std::size_t j = 0; j < 3; ++j) lo[j] = hi[j] = mesh.vertices(0, j);
  for (std::size_t i = 1; i < mesh.vertices.rows; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      lo[j] = std::min(lo[j], mesh.vertices(i, j));
      hi[j] = std::max(hi[j], mesh.vertices(i, j));
    }
  }
  double d2 = 0.0;
  for (std::size_t j = 0; j < 3; ++j) d2 += (hi[j] - lo[j]) * (hi[j] - lo[j]);
  return std::sqrt(d2);
}

/// Area-weighted vertex normals; zero vector where no face touches a vertex.
inline DenseMatrix vertex_normals(const Mesh& mesh) {
  DenseMatrix normals(mesh.vertex_count(), 3);
  for (const auto& f : mesh.faces) {
    std::array<double, 3> e1{}, e2{}, n{};
    for (std::size_t j = 0; j < 3; ++j) {
      e1[j] = mesh.vertices(f[1], j) - mesh.vertices(f[0], j);
      e2[j] = mesh.vertices(f[2], j) - mesh.vertices(f[0], j);
    }
    n[0] = e1[1] * e2[2] - e1[2] * e2[1];
    n[1] = e1[2] * e2[0] - e1[0] * e2[2];
    n[2] = e1[0] * e2[1] - e1[1] * e2[0];
    for (std::uint32_t v : f)
      for (std::size_t j = 0; j < 3; ++j) normals(v, j) += n[j];
  }
  for (std::size_t i = 0; i < normals.rows; ++i) {
    const double len = std::sqrt(normals(i, 0) * normals(i, 0) + normals(i, 1) * normals(i, 1) +
                                 normals(i, 2) * normals(i, 2));
    if (len > 0.0)
      for (std::size_t j = 0; j < 3; ++j) normals(i, j) /= len;
  }
  return normals;
}

}  // namespace meshparts
