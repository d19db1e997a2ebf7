#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "meshparts/dense_matrix.hpp"
#include "meshparts/errors.hpp"
#include "meshparts/mesh.hpp"
#include "meshparts/mesh_io.hpp"
#include "meshparts/rng.hpp"

namespace meshparts {

/// Registered mesh collection: every sample shares the template's topology.
struct Dataset {
  Mesh template_mesh;
  std::vector<DenseMatrix> samples;  // N x 3 vertex arrays
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;

  void validate() const {
    template_mesh.validate();
    for (const DenseMatrix& s : samples)
      require(s.rows == template_mesh.vertex_count() && s.cols == 3,
              "dataset sample does not match the template");
    std::vector<char> seen(samples.size(), 0);
    for (std::size_t i : train_indices) {
      require(i < samples.size(), "train index out of range");
      seen[i] = 1;
    }
    for (std::size_t i : test_indices) {
      require(i < samples.size(), "test index out of range");
      require(!seen[i], "train/test splits overlap");
    }
  }
};

/// Gently domed rows x cols grid sheet; a face-like open surface that serves
/// as the synthetic stand-in template (rows=40, cols=32 gives 1280 vertices).
inline Mesh sheet_template(std::size_t rows = 40, std::size_t cols = 32) {
  require(rows >= 2 && cols >= 2, "sheet_template: grid must be at least 2x2");
  Mesh mesh;
  mesh.vertices = DenseMatrix(rows * cols, 3);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double y = -1.0 + 2.0 * static_cast<double>(r) / static_cast<double>(rows - 1);
      const double x = -0.8 + 1.6 * static_cast<double>(c) / static_cast<double>(cols - 1);
      const double z = 0.6 * std::exp(-(x * x + y * y) / 0.7);
      const std::size_t i = r * cols + c;
      mesh.vertices(i, 0) = x;
      mesh.vertices(i, 1) = y;
      mesh.vertices(i, 2) = z;
    }
  }
  for (std::size_t r = 0; r + 1 < rows; ++r) {
    for (std::size_t c = 0; c + 1 < cols; ++c) {
      const std::uint32_t a = static_cast<std::uint32_t>(r * cols + c);
      const std::uint32_t b = a + 1;
      const std::uint32_t d = static_cast<std::uint32_t>((r + 1) * cols + c);
      const std::uint32_t e = d + 1;
      mesh.faces.push_back({a, b, d});
      mesh.faces.push_back({b, e, d});
    }
  }
  mesh.validate();
  return mesh;
}

namespace detail {

// Deterministic farthest-point sample of `count` vertex indices, seeded from
// vertex 0.
inline std::vector<std::size_t> farthest_points(const Mesh& mesh, std::size_t count) {
  const std::size_t n = mesh.vertex_count();
  std::vector<std::size_t> picks{0};
  std::vector<double> dist2(n);
  auto sq_dist = [&](std::size_t a, std::size_t b) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      const double d = mesh.vertices(a, j) - mesh.vertices(b, j);
      d2 += d * d;
    }
    return d2;
  };
  for (std::size_t i = 0; i < n; ++i) dist2[i] = sq_dist(i, 0);
  while (picks.size() < count && picks.size() < n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (dist2[i] > dist2[best]) best = i;
    picks.push_back(best);
    for (std::size_t i = 0; i < n; ++i) dist2[i] = std::min(dist2[i], sq_dist(i, best));
  }
  return picks;
}

}  // namespace detail

/// Synthetic faces: the template displaced by a seeded combination of fixed
/// smooth bumps. Each bump field pushes vertices along the template normal
/// with Gaussian falloff (sigma = 15% of the bounding-box diagonal) around a
/// farthest-point-sampled center; per-sample coefficients are uniform in
/// +-amplitude x diagonal. Split is 89%/11% train/test in sample order.
inline Dataset synth_faces(std::size_t n, const Mesh& template_mesh, std::uint64_t seed,
                           double amplitude = 0.05, std::size_t bump_count = 8) {
  require(n >= 2, "synth_faces: need at least 2 samples");
  template_mesh.validate();
  if (template_mesh.vertex_count() < 100)
    std::fprintf(stderr, "warning: synth_faces template has only %zu vertices\n",
                 template_mesh.vertex_count());

  const double diagonal = bounding_box_diagonal(template_mesh);
  const double sigma = 0.15 * diagonal;
  const DenseMatrix normals = vertex_normals(template_mesh);
  const auto centers = detail::farthest_points(template_mesh, bump_count);

  // fixed displacement fields, unit magnitude at each bump center
  std::vector<DenseMatrix> bumps;
  for (std::size_t m = 0; m < centers.size(); ++m) {
    DenseMatrix field(template_mesh.vertex_count(), 3);
    for (std::size_t i = 0; i < field.rows; ++i) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < 3; ++j) {
        const double d = template_mesh.vertices(i, j) - template_mesh.vertices(centers[m], j);
        d2 += d * d;
      }
      const double g = std::exp(-d2 / (2.0 * sigma * sigma));
      for (std::size_t j = 0; j < 3; ++j) field(i, j) = g * normals(i, j);
    }
    bumps.push_back(std::move(field));
  }

  Dataset dataset;
  dataset.template_mesh = template_mesh;
  Rng rng(seed);
  for (std::size_t s = 0; s < n; ++s) {
    DenseMatrix verts = template_mesh.vertices;
    for (const DenseMatrix& bump : bumps) {
      const double c = rng.uniform(-amplitude, amplitude) * diagonal;
      for (std::size_t i = 0; i < verts.values.size(); ++i)
        verts.values[i] += c * bump.values[i];
    }
    dataset.samples.push_back(std::move(verts));
  }

  std::size_t test_count = static_cast<std::size_t>(std::lround(0.11 * static_cast<double>(n)));
  test_count = std::clamp<std::size_t>(test_count, 1, n - 1);
  for (std::size_t i = 0; i < n - test_count; ++i) dataset.train_indices.push_back(i);
  for (std::size_t i = n - test_count; i < n; ++i) dataset.test_indices.push_back(i);
  dataset.validate();
  return dataset;
}

/// Dataset directory layout: template.obj plus train/ and test/ full of
/// face_NNNN.obj files in correspondence with the template.
inline void save_dataset(const Dataset& dataset, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "train");
  fs::create_directories(fs::path(dir) / "test");
  write_text_file((fs::path(dir) / "template.obj").string(), write_obj(dataset.template_mesh));
  auto write_split = [&](const std::vector<std::size_t>& indices, const std::string& sub) {
    for (std::size_t i = 0; i < indices.size(); ++i) {
      Mesh m;
      m.vertices = dataset.samples[indices[i]];
      m.faces = dataset.template_mesh.faces;
      char name[32];
      std::snprintf(name, sizeof(name), "face_%04zu.obj", i);
      write_text_file((fs::path(dir) / sub / name).string(), write_obj(m));
    }
  };
  write_split(dataset.train_indices, "train");
  write_split(dataset.test_indices, "test");
}

inline std::vector<std::string> list_obj_files(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("'" + dir + "' is not a directory");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".obj")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  return files;
}

inline std::vector<Mesh> load_mesh_dir(const std::string& dir) {
  std::vector<Mesh> meshes;
  for (const std::string& path : list_obj_files(dir)) meshes.push_back(load_obj_file(path));
  if (meshes.empty()) throw DataError("no .obj files found in '" + dir + "'");
  return meshes;
}

inline Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  Dataset dataset;
  dataset.template_mesh = load_obj_file((fs::path(dir) / "template.obj").string());
  auto read_split = [&](const std::string& sub, std::vector<std::size_t>& indices) {
    const std::string split_dir = (fs::path(dir) / sub).string();
    if (!fs::is_directory(split_dir)) return;
    for (Mesh& m : load_mesh_dir(split_dir)) {
      require(m.vertex_count() == dataset.template_mesh.vertex_count() &&
                  m.faces == dataset.template_mesh.faces,
              sub + " sample does not match the template topology");
      indices.push_back(dataset.samples.size());
      dataset.samples.push_back(std::move(m.vertices));
    }
  };
  read_split("train", dataset.train_indices);
  read_split("test", dataset.test_indices);
  if (dataset.samples.empty()) throw DataError("dataset '" + dir + "' has no samples");
  dataset.validate();
  return dataset;
}

}  // namespace meshparts
