#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "meshparts/dense_matrix.hpp"
#include "meshparts/errors.hpp"

namespace meshparts {

/// State for SGD with classical momentum: v' = m*v - lr*g, p' = p + v'.
struct OptimizerState {
  double momentum = 0.9;
  std::size_t epoch = 0;
  std::vector<DenseMatrix> velocity;  // one per parameter tensor, same shapes

  static OptimizerState for_params(const std::vector<const DenseMatrix*>& params,
                                   double momentum) {
    require(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1)");
    OptimizerState s;
    s.momentum = momentum;
    s.velocity.reserve(params.size());
    for (const DenseMatrix* p : params) s.velocity.emplace_back(p->rows, p->cols);
    return s;
  }
};

inline void sgd_momentum_step(const std::vector<DenseMatrix*>& params,
                              const std::vector<const DenseMatrix*>& grads,
                              OptimizerState& state, double lr) {
  require(lr > 0.0, "learning rate must be positive");
  require(params.size() == grads.size() && params.size() == state.velocity.size(),
          "sgd step: parameter/gradient/velocity count mismatch");
  for (std::size_t t = 0; t < params.size(); ++t) {
    DenseMatrix& p = *params[t];
    const DenseMatrix& g = *grads[t];
    DenseMatrix& v = state.velocity[t];
    require(p.same_shape(g) && p.same_shape(v), "sgd step: tensor shape mismatch");
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      v.values[i] = state.momentum * v.values[i] - lr * g.values[i];
      p.values[i] += v.values[i];
    }
  }
}

/// Per-epoch schedule: initial rate decayed geometrically every epoch.
inline double learning_rate(std::size_t epoch, double initial = 0.0125, double decay = 0.99) {
  return initial * std::pow(decay, static_cast<double>(epoch));
}

}  // namespace meshparts
