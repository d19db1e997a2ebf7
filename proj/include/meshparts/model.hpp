#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meshparts/chebconv.hpp"
#include "meshparts/config.hpp"
#include "meshparts/dense_matrix.hpp"
#include "meshparts/errors.hpp"
#include "meshparts/hierarchy.hpp"
#include "meshparts/nmf.hpp"
#include "meshparts/rng.hpp"

namespace meshparts {

/// Layer widths derived from the hierarchy depth: encoder convolutions emit
/// 16 features except the last (32); the decoder mirrors them back down to 3.
struct ModelDims {
  std::size_t latent = 0;
  std::size_t parts = 0;
  std::size_t cheb_order = 0;
  std::size_t coarse_n = 0;
  std::vector<std::size_t> enc_out;  // per transition, finest first
  std::vector<std::size_t> dec_out;  // in application order, coarsest first

  static ModelDims from(const Hierarchy& hierarchy, const RunConfig& config) {
    ModelDims d;
    d.latent = config.latent;
    d.parts = config.parts;
    d.cheb_order = config.cheb_order;
    d.coarse_n = hierarchy.coarsest().vertex_count();
    d.enc_out.assign(hierarchy.transitions(), 16);
    d.enc_out.back() = 32;
    d.dec_out.assign(hierarchy.transitions(), 16);
    d.dec_out.back() = 3;
    return d;
  }

  std::size_t enc_in(std::size_t layer) const { return layer == 0 ? 3 : enc_out[layer - 1]; }
  std::size_t dec_in(std::size_t layer) const {
    return layer == 0 ? enc_out.back() : dec_out[layer - 1];
  }
  std::size_t flat_width() const { return coarse_n * enc_out.back(); }
};

/// Every trainable tensor of the autoencoder. The no-projection variant keeps
/// identity projection matrices for shape stability but never trains them.
struct ModelParams {
  std::vector<ChebLayer> encoder;       // one per transition, finest first
  DenseMatrix enc_fc_w;                 // (coarse_n * 32) x Z
  DenseMatrix enc_fc_b;                 // 1 x Z
  DenseMatrix dec_fc_w;                 // Z x 32
  DenseMatrix dec_fc_b;                 // 1 x 32
  std::vector<ChebLayer> decoder;       // application order, coarsest first
  std::vector<DenseMatrix> projections; // parts matrices, Z x Z, bias-free

  /// Seeded Glorot-uniform init. Draw order: encoder convolutions (theta by
  /// ascending polynomial order, row-major), encoder FC, decoder FC, decoder
  /// convolutions, projection matrices. Biases start at zero and consume no
  /// draws.
  static ModelParams initialize(const ModelDims& dims, std::uint64_t seed,
                                bool identity_projections = false) {
    Rng rng(seed);
    ModelParams p;
    for (std::size_t l = 0; l < dims.enc_out.size(); ++l)
      p.encoder.push_back(
          ChebLayer::glorot(dims.cheb_order, dims.enc_in(l), dims.enc_out[l], rng));

    auto glorot_matrix = [&rng](std::size_t rows, std::size_t cols) {
      DenseMatrix m(rows, cols);
      const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (double& x : m.values) x = rng.uniform(-limit, limit);
      return m;
    };
    p.enc_fc_w = glorot_matrix(dims.flat_width(), dims.latent);
    p.enc_fc_b = DenseMatrix(1, dims.latent);
    p.dec_fc_w = glorot_matrix(dims.latent, dims.enc_out.back());
    p.dec_fc_b = DenseMatrix(1, dims.enc_out.back());
    for (std::size_t l = 0; l < dims.dec_out.size(); ++l)
      p.decoder.push_back(
          ChebLayer::glorot(dims.cheb_order, dims.dec_in(l), dims.dec_out[l], rng));

    for (std::size_t k = 0; k < dims.parts; ++k) {
      p.projections.push_back(identity_projections ? DenseMatrix::identity(dims.latent)
                                                   : glorot_matrix(dims.latent, dims.latent));
    }
    return p;
  }

  /// Canonical tensor walk; leaf order here defines the graph, checkpoint and
  /// optimizer layouts.
  template <typename Self, typename F>
  static void visit_impl(Self& self, F&& f) {
    for (std::size_t l = 0; l < self.encoder.size(); ++l) {
      for (std::size_t k = 0; k < self.encoder[l].theta.size(); ++k)
        f("encoder." + std::to_string(l) + ".theta." + std::to_string(k),
          self.encoder[l].theta[k]);
      f("encoder." + std::to_string(l) + ".bias", self.encoder[l].bias);
    }
    f("encoder.fc.weight", self.enc_fc_w);
    f("encoder.fc.bias", self.enc_fc_b);
    f("decoder.fc.weight", self.dec_fc_w);
    f("decoder.fc.bias", self.dec_fc_b);
    for (std::size_t l = 0; l < self.decoder.size(); ++l) {
      for (std::size_t k = 0; k < self.decoder[l].theta.size(); ++k)
        f("decoder." + std::to_string(l) + ".theta." + std::to_string(k),
          self.decoder[l].theta[k]);
      f("decoder." + std::to_string(l) + ".bias", self.decoder[l].bias);
    }
    for (std::size_t k = 0; k < self.projections.size(); ++k)
      f("projection." + std::to_string(k), self.projections[k]);
  }

  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }
};

/// K part-encoding rows, each of latent width.
struct PartEncodings {
  DenseMatrix rows;  // K x Z

  std::size_t count() const { return rows.rows; }
};

inline DenseMatrix relu(DenseMatrix m) {
  for (double& x : m.values)
    if (x < 0.0) x = 0.0;
  return m;
}

/// Whole-shape latent vector (1 x Z) of centered input vertices.
inline DenseMatrix encode(const ModelParams& params, const Hierarchy& hierarchy,
                          const DenseMatrix& centered_vertices) {
  require(centered_vertices.rows == hierarchy.finest().vertex_count() &&
              centered_vertices.cols == 3,
          "encode: vertices do not match hierarchy level 0");
  DenseMatrix h = centered_vertices;
  for (std::size_t l = 0; l < hierarchy.transitions(); ++l) {
    h = relu(cheb_conv(params.encoder[l], hierarchy.levels[l].bundle.scaled, h));
    h = hierarchy.down[l].multiply(h);
  }
  DenseMatrix flat(1, h.size());
  flat.values = h.values;  // row-major flatten
  DenseMatrix z = matmul(flat, params.enc_fc_w);
  for (std::size_t j = 0; j < z.cols; ++j) z.values[j] += params.enc_fc_b.values[j];
  return z;
}

/// part_k = z P_k for each projection matrix; identity pass-through when the
/// factorization is disabled.
inline PartEncodings project_parts(const DenseMatrix& z,
                                   const std::vector<DenseMatrix>& projections,
                                   bool no_projection = false) {
  require(z.rows == 1, "project_parts: z must be a row vector");
  PartEncodings parts;
  parts.rows = DenseMatrix(projections.size(), z.cols);
  for (std::size_t k = 0; k < projections.size(); ++k) {
    require(projections[k].rows == z.cols && projections[k].cols == z.cols,
            "project_parts: projection matrix must be Z x Z");
    if (no_projection) {
      for (std::size_t j = 0; j < z.cols; ++j) parts.rows(k, j) = z.values[j];
    } else {
      const DenseMatrix part = matmul(z, projections[k]);
      for (std::size_t j = 0; j < z.cols; ++j) parts.rows(k, j) = part.values[j];
    }
  }
  return parts;
}

/// Latent map rows weighted by per-part vertex influence:
/// map[n, :] = sum_k W[n, k] * part_k.
inline DenseMatrix weighted_latent_map(const PartEncodings& parts, const DenseMatrix& weights) {
  require(weights.cols == parts.count(), "weighted_latent_map: part count mismatch");
  return matmul(weights, parts.rows);
}

/// Centered vertex positions decoded from a latent map (coarse_n x Z).
inline DenseMatrix decode(const ModelParams& params, const Hierarchy& hierarchy,
                          const DenseMatrix& latent_map) {
  require(latent_map.rows == hierarchy.coarsest().vertex_count(),
          "decode: latent map rows must equal the coarsest vertex count");
  DenseMatrix h = matmul(latent_map, params.dec_fc_w);
  for (std::size_t i = 0; i < h.rows; ++i)
    for (std::size_t j = 0; j < h.cols; ++j) h(i, j) += params.dec_fc_b.values[j];

  const std::size_t transitions = hierarchy.transitions();
  for (std::size_t i = 0; i < transitions; ++i) {
    const std::size_t level = transitions - 1 - i;
    h = hierarchy.up[level].multiply(h);
    h = cheb_conv(params.decoder[i], hierarchy.levels[level].bundle.scaled, h);
    if (i + 1 != transitions) h = relu(std::move(h));  // final layer emits signed coordinates
  }
  return h;
}

}  // namespace meshparts
