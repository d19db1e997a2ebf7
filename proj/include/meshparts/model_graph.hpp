#pragma once

#include <string>
#include <vector>

#include "meshparts/chebconv.hpp"
#include "meshparts/dense_matrix.hpp"
#include "meshparts/errors.hpp"
#include "meshparts/hierarchy.hpp"
#include "meshparts/model.hpp"
#include "meshparts/tape.hpp"

namespace meshparts {

/// Differentiable end-to-end loss graph for a single sample. Built once per
/// training run; per-sample evaluation mutates the input leaf and re-runs
/// forward/backward. Parameter leaves appear in ModelParams::visit order.
struct ModelGraph {
  Tape tape;
  int input = -1;  // N0 x 3, centered sample (also the reconstruction target)

  std::vector<int> param_leaves;        // visit order
  std::vector<std::string> param_names;
  std::vector<bool> param_trainable;    // false for frozen placeholders

  int z = -1;
  std::vector<int> parts;        // K nodes, 1 x Z each
  int reconstruction = -1;       // N0 x 3
  int recon_loss = -1;           // sum |xhat - x| / N0
  int cycle_loss = -1;           // mean_k sum |part_k(xhat) - part_k(x)| / Z
  int total_loss = -1;           // recon + gamma * cycle

  void load_params(const ModelParams& params) {
    std::size_t t = 0;
    params.visit([&](const std::string&, const DenseMatrix& m) {
      DenseMatrix& leaf = tape.leaf_value(param_leaves[t++]);
      require(leaf.same_shape(m), "graph/param shape mismatch");
      leaf.values = m.values;
    });
  }

  void store_params(ModelParams& params) {
    std::size_t t = 0;
    params.visit([&](const std::string&, DenseMatrix& m) {
      m.values = tape.value(param_leaves[t++]).values;
    });
  }
};

namespace detail {

struct GraphLayers {
  std::vector<ChebLayerNodes> encoder;
  int enc_fc_w = -1, enc_fc_b = -1;
  int dec_fc_w = -1, dec_fc_b = -1;
  std::vector<ChebLayerNodes> decoder;
  std::vector<int> projections;
};

inline int emit_encoder(Tape& tape, const Hierarchy& hierarchy, const ModelDims& dims,
                        const GraphLayers& layers, int x) {
  int cur = x;
  for (std::size_t l = 0; l < hierarchy.transitions(); ++l) {
    cur = tape.relu(tape_cheb_conv(tape, hierarchy.levels[l].bundle.scaled, cur,
                                   layers.encoder[l]));
    cur = tape.sparse_product(hierarchy.down[l], cur);
  }
  const int flat = tape.reshape(cur, 1, dims.flat_width());
  return tape.bias_add(tape.mat_product(flat, layers.enc_fc_w), layers.enc_fc_b);
}

}  // namespace detail

inline ModelGraph build_training_graph(const Hierarchy& hierarchy, const DenseMatrix& weights,
                                       const ModelDims& dims, double cycle_weight,
                                       bool no_projection) {
  require(weights.rows == dims.coarse_n && weights.cols == dims.parts,
          "training graph: local weights must be coarse_n x parts");

  ModelGraph g;
  Tape& tape = g.tape;
  detail::GraphLayers layers;

  // parameter leaves, in the canonical visit order
  auto reg = [&g](const std::string& name, int id, bool trainable = true) {
    g.param_names.push_back(name);
    g.param_leaves.push_back(id);
    g.param_trainable.push_back(trainable);
  };
  for (std::size_t l = 0; l < hierarchy.transitions(); ++l) {
    ChebLayerNodes nodes = tape_cheb_layer(tape, dims.cheb_order, dims.enc_in(l), dims.enc_out[l]);
    for (std::size_t k = 0; k < nodes.theta.size(); ++k)
      reg("encoder." + std::to_string(l) + ".theta." + std::to_string(k), nodes.theta[k]);
    reg("encoder." + std::to_string(l) + ".bias", nodes.bias);
    layers.encoder.push_back(std::move(nodes));
  }
  layers.enc_fc_w = tape.leaf(dims.flat_width(), dims.latent);
  layers.enc_fc_b = tape.leaf(1, dims.latent);
  reg("encoder.fc.weight", layers.enc_fc_w);
  reg("encoder.fc.bias", layers.enc_fc_b);
  layers.dec_fc_w = tape.leaf(dims.latent, dims.enc_out.back());
  layers.dec_fc_b = tape.leaf(1, dims.enc_out.back());
  reg("decoder.fc.weight", layers.dec_fc_w);
  reg("decoder.fc.bias", layers.dec_fc_b);
  for (std::size_t l = 0; l < hierarchy.transitions(); ++l) {
    ChebLayerNodes nodes = tape_cheb_layer(tape, dims.cheb_order, dims.dec_in(l), dims.dec_out[l]);
    for (std::size_t k = 0; k < nodes.theta.size(); ++k)
      reg("decoder." + std::to_string(l) + ".theta." + std::to_string(k), nodes.theta[k]);
    reg("decoder." + std::to_string(l) + ".bias", nodes.bias);
    layers.decoder.push_back(std::move(nodes));
  }
  // the no-projection variant keeps parts = z and trains no projections, but
  // identity placeholders still occupy their slots so layouts stay aligned
  for (std::size_t k = 0; k < dims.parts; ++k) {
    const int leaf = tape.leaf(dims.latent, dims.latent, /*trainable=*/!no_projection);
    layers.projections.push_back(leaf);
    reg("projection." + std::to_string(k), leaf, !no_projection);
  }

  g.input = tape.leaf(hierarchy.finest().vertex_count(), 3, /*trainable=*/false);

  // encoder -> parts
  g.z = detail::emit_encoder(tape, hierarchy, dims, layers, g.input);
  for (std::size_t k = 0; k < dims.parts; ++k)
    g.parts.push_back(no_projection ? g.z : tape.mat_product(g.z, layers.projections[k]));

  // locally weighted latent map: sum_k w_k (x) part_k
  std::vector<int> weight_columns;
  for (std::size_t k = 0; k < dims.parts; ++k) {
    const int col = tape.leaf(dims.coarse_n, 1, /*trainable=*/false);
    for (std::size_t i = 0; i < dims.coarse_n; ++i)
      tape.leaf_value(col).values[i] = weights(i, k);
    weight_columns.push_back(col);
  }
  int map = tape.outer(weight_columns[0], g.parts[0]);
  for (std::size_t k = 1; k < dims.parts; ++k)
    map = tape.add(map, tape.outer(weight_columns[k], g.parts[k]));

  // decoder
  int h = tape.bias_add(tape.mat_product(map, layers.dec_fc_w), layers.dec_fc_b);
  const std::size_t transitions = hierarchy.transitions();
  for (std::size_t i = 0; i < transitions; ++i) {
    const std::size_t level = transitions - 1 - i;
    h = tape.sparse_product(hierarchy.up[level], h);
    h = tape_cheb_conv(tape, hierarchy.levels[level].bundle.scaled, h, layers.decoder[i]);
    if (i + 1 != transitions) h = tape.relu(h);
  }
  g.reconstruction = h;

  const double n0 = static_cast<double>(hierarchy.finest().vertex_count());
  g.recon_loss = tape.scale(tape.abs_error(g.reconstruction, g.input), 1.0 / n0);

  // cycle: re-encode the reconstruction and compare part encodings
  const int z_cycle = detail::emit_encoder(tape, hierarchy, dims, layers, g.reconstruction);
  int cycle_sum = -1;
  for (std::size_t k = 0; k < dims.parts; ++k) {
    const int part_cycle =
        no_projection ? z_cycle : tape.mat_product(z_cycle, layers.projections[k]);
    const int err = tape.abs_error(part_cycle, g.parts[k]);
    cycle_sum = k == 0 ? err : tape.add(cycle_sum, err);
  }
  g.cycle_loss = tape.scale(cycle_sum, 1.0 / static_cast<double>(dims.parts * dims.latent));

  g.total_loss = tape.add(g.recon_loss, tape.scale(g.cycle_loss, cycle_weight));
  return g;
}

}  // namespace meshparts
