#pragma once

#include <array>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "meshparts/checkpoint.hpp"
#include "meshparts/config.hpp"
#include "meshparts/dataset.hpp"
#include "meshparts/dense_matrix.hpp"
#include "meshparts/errors.hpp"
#include "meshparts/hierarchy.hpp"
#include "meshparts/model.hpp"
#include "meshparts/model_graph.hpp"
#include "meshparts/nmf.hpp"
#include "meshparts/optimizer.hpp"
#include "meshparts/rng.hpp"

namespace meshparts {

/// Subtracts the mean vertex; the offset is restored after decoding.
inline std::array<double, 3> center_vertices(DenseMatrix& vertices) {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < vertices.rows; ++i)
    for (std::size_t j = 0; j < 3; ++j) mean[j] += vertices(i, j);
  for (double& m : mean) m /= static_cast<double>(vertices.rows);
  for (std::size_t i = 0; i < vertices.rows; ++i)
    for (std::size_t j = 0; j < 3; ++j) vertices(i, j) -= mean[j];
  return mean;
}

/// Local weights for training: sparse NMF of the coarsest template vertices
/// over seeded restarts, or an all-ones matrix when disabled.
inline LocalWeights compute_local_weights(const Hierarchy& hierarchy, const RunConfig& config) {
  if (config.no_local_weights) {
    LocalWeights w;
    w.w = DenseMatrix::constant(hierarchy.coarsest().vertex_count(), config.parts, 1.0);
    return w;
  }
  const DenseMatrix embedded = nonneg_embed(hierarchy.coarsest().vertices);
  std::vector<NmfRun> runs;
  for (std::size_t r = 0; r < config.nmf_restarts; ++r)
    runs.push_back(sparse_nmf(embedded, config.parts, config.sparsity, config.nmf_iterations,
                              derive_seed(config.seed, 0xA11CE + r)));
  return select_local_weights(runs);
}

/// Batch training loss: mean over samples of recon + gamma * cycle, matching
/// the training graph arithmetic exactly. Samples are centered internally.
inline double training_loss(const ModelParams& params, const Hierarchy& hierarchy,
                            const LocalWeights& weights, const RunConfig& config,
                            const std::vector<DenseMatrix>& batch) {
  require(!batch.empty(), "training_loss: batch must be nonempty");
  const ModelDims dims = ModelDims::from(hierarchy, config);
  ModelGraph graph = build_training_graph(hierarchy, weights.w, dims, config.cycle_weight,
                                          config.no_projection);
  graph.load_params(params);
  double total = 0.0;
  for (const DenseMatrix& sample : batch) {
    DenseMatrix centered = sample;
    center_vertices(centered);
    graph.tape.leaf_value(graph.input).values = centered.values;
    graph.tape.forward();
    total += graph.tape.value(graph.total_loss)(0, 0);
  }
  return total / static_cast<double>(batch.size());
}

struct TrainResult {
  Checkpoint checkpoint;
  bool diverged = false;
  std::size_t completed_epochs = 0;
};

/// Full training run: seeded shuffling, per-batch accumulation in fixed
/// sample order, SGD with momentum under the geometric learning-rate decay.
/// On divergence the checkpoint from the last completed epoch is returned.
inline TrainResult train(const Dataset& dataset, const RunConfig& config, std::uint64_t seed,
                         bool verbose = false) {
  config.validate();
  dataset.validate();
  require(!dataset.train_indices.empty(), "train: dataset has no training samples");

  RunConfig effective = config;
  effective.seed = seed;

  Hierarchy hierarchy = build_hierarchy(dataset.template_mesh, config.levels, config.factor);
  LocalWeights weights = compute_local_weights(hierarchy, effective);
  const ModelDims dims = ModelDims::from(hierarchy, config);

  ModelParams params = ModelParams::initialize(dims, derive_seed(seed, 0x1417),
                                               config.no_projection);
  ModelGraph graph = build_training_graph(hierarchy, weights.w, dims, config.cycle_weight,
                                          config.no_projection);
  graph.load_params(params);

  // optimizer state and gradient accumulators over the trainable leaves
  std::vector<std::size_t> trainable;
  for (std::size_t t = 0; t < graph.param_leaves.size(); ++t)
    if (graph.param_trainable[t]) trainable.push_back(t);
  std::vector<DenseMatrix> accum;
  std::vector<DenseMatrix*> param_ptrs;
  std::vector<const DenseMatrix*> accum_ptrs;
  for (std::size_t t : trainable) {
    const DenseMatrix& v = graph.tape.value(graph.param_leaves[t]);
    accum.emplace_back(v.rows, v.cols);
  }
  for (std::size_t i = 0; i < trainable.size(); ++i) {
    param_ptrs.push_back(&graph.tape.leaf_value(graph.param_leaves[trainable[i]]));
    accum_ptrs.push_back(&accum[i]);
  }
  OptimizerState opt = OptimizerState::for_params(accum_ptrs, config.momentum);

  // centered samples are fixed; precompute them once
  std::vector<DenseMatrix> centered;
  centered.reserve(dataset.train_indices.size());
  for (std::size_t idx : dataset.train_indices) {
    DenseMatrix c = dataset.samples[idx];
    center_vertices(c);
    centered.push_back(std::move(c));
  }

  TrainResult result;
  Rng shuffle_rng(derive_seed(seed, 0x5f13));
  std::vector<std::size_t> order(centered.size());
  std::iota(order.begin(), order.end(), 0);

  ModelParams last_good = params;
  std::vector<std::array<double, 2>> metrics;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = learning_rate(epoch, config.lr, config.lr_decay);
    shuffle_rng.shuffle(order);
    double epoch_recon = 0.0, epoch_cycle = 0.0;
    try {
      for (std::size_t start = 0; start < order.size(); start += config.batch) {
        const std::size_t batch_size = std::min(config.batch, order.size() - start);
        for (DenseMatrix& a : accum) a.fill(0.0);
        for (std::size_t b = 0; b < batch_size; ++b) {
          graph.tape.leaf_value(graph.input).values = centered[order[start + b]].values;
          graph.tape.evaluate_and_backprop(graph.total_loss);
          epoch_recon += graph.tape.value(graph.recon_loss)(0, 0);
          epoch_cycle += graph.tape.value(graph.cycle_loss)(0, 0);
          for (std::size_t i = 0; i < trainable.size(); ++i) {
            const DenseMatrix& grad = graph.tape.gradient(graph.param_leaves[trainable[i]]);
            for (std::size_t v = 0; v < grad.values.size(); ++v)
              accum[i].values[v] += grad.values[v];
          }
        }
        const double inv = 1.0 / static_cast<double>(batch_size);
        for (DenseMatrix& a : accum)
          for (double& v : a.values) v *= inv;
        sgd_momentum_step(param_ptrs, accum_ptrs, opt, lr);
      }
    } catch (const NumericError& e) {
      std::fprintf(stderr, "training diverged in epoch %zu: %s\n", epoch + 1, e.what());
      result.diverged = true;
      break;
    }
    opt.epoch = epoch + 1;
    metrics.push_back({epoch_recon / static_cast<double>(order.size()),
                       epoch_cycle / static_cast<double>(order.size())});
    graph.store_params(last_good);
    result.completed_epochs = epoch + 1;
    if (verbose)
      std::fprintf(stderr, "epoch %zu/%zu lr %.6f recon %.6f cycle %.6f\n", epoch + 1,
                   config.epochs, lr, metrics.back()[0], metrics.back()[1]);
  }

  result.checkpoint.config = effective;
  result.checkpoint.hierarchy = std::move(hierarchy);
  result.checkpoint.weights = std::move(weights);
  result.checkpoint.params = std::move(last_good);
  result.checkpoint.metrics = std::move(metrics);
  result.checkpoint.validate();
  return result;
}

}  // namespace meshparts
