#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "meshparts/dense_matrix.hpp"
#include "meshparts/errors.hpp"
#include "meshparts/sparse_matrix.hpp"

namespace meshparts {

/// Reverse-mode differentiation tape over the primitives the model needs:
/// sparse*dense product, dense*dense product, elementwise add/multiply,
/// scalar scale, bias broadcast, ReLU, outer product, summation and
/// absolute-error reduction, plus leaves and free reshapes.
///
/// The graph is built once and re-evaluated by mutating leaf values and
/// calling forward(); node buffers are preallocated so the training loop
/// does not allocate. Sparse operands are referenced, not copied - they
/// must outlive the tape. Single-threaded per tape.
class Tape {
 public:
  enum class Op {
    kLeaf,
    kSparseProduct,
    kMatProduct,
    kAdd,
    kMultiply,
    kScale,
    kBiasAdd,
    kRelu,
    kOuter,
    kSum,
    kAbsError,
    kReshape,
  };

  int leaf(std::size_t rows, std::size_t cols, bool trainable = true) {
    Node n;
    n.op = Op::kLeaf;
    n.requires_grad = trainable;
    n.value = DenseMatrix(rows, cols);
    return push(std::move(n));
  }

  int sparse_product(const SparseMatrix& s, int x) {
    require(s.cols() == node(x).value.rows, "tape: sparse product shape mismatch");
    Node n = unary(Op::kSparseProduct, x, s.rows(), node(x).value.cols);
    n.sparse = &s;
    return push(std::move(n));
  }

  int mat_product(int a, int b) {
    require(node(a).value.cols == node(b).value.rows, "tape: product shape mismatch");
    return push(binary(Op::kMatProduct, a, b, node(a).value.rows, node(b).value.cols));
  }

  int add(int a, int b) {
    require(node(a).value.same_shape(node(b).value), "tape: add shape mismatch");
    return push(binary(Op::kAdd, a, b, node(a).value.rows, node(a).value.cols));
  }

  int multiply(int a, int b) {
    require(node(a).value.same_shape(node(b).value), "tape: multiply shape mismatch");
    return push(binary(Op::kMultiply, a, b, node(a).value.rows, node(a).value.cols));
  }

  int scale(int a, double alpha) {
    Node n = unary(Op::kScale, a, node(a).value.rows, node(a).value.cols);
    n.alpha = alpha;
    return push(std::move(n));
  }

  /// x is RxC, bias is 1xC broadcast over rows.
  int bias_add(int x, int bias) {
    require(node(bias).value.rows == 1 && node(bias).value.cols == node(x).value.cols,
            "tape: bias must be 1 x cols(x)");
    return push(binary(Op::kBiasAdd, x, bias, node(x).value.rows, node(x).value.cols));
  }

  int relu(int x) {
    return push(unary(Op::kRelu, x, node(x).value.rows, node(x).value.cols));
  }

  /// column (Px1) times row (1xZ) -> PxZ.
  int outer(int col, int row) {
    require(node(col).value.cols == 1 && node(row).value.rows == 1,
            "tape: outer expects a column and a row");
    return push(binary(Op::kOuter, col, row, node(col).value.rows, node(row).value.cols));
  }

  int sum(int x) { return push(unary(Op::kSum, x, 1, 1)); }

  /// sum(|a - b|), scalar valued.
  int abs_error(int a, int b) {
    require(node(a).value.same_shape(node(b).value), "tape: abs_error shape mismatch");
    return push(binary(Op::kAbsError, a, b, 1, 1));
  }

  int reshape(int x, std::size_t rows, std::size_t cols) {
    require(rows * cols == node(x).value.size(), "tape: reshape changes element count");
    return push(unary(Op::kReshape, x, rows, cols));
  }

  std::size_t node_count() const { return nodes_.size(); }

  DenseMatrix& leaf_value(int id) {
    require(node(id).op == Op::kLeaf, "tape: only leaf values are assignable");
    return nodes_[static_cast<std::size_t>(id)].value;
  }

  const DenseMatrix& value(int id) const { return node(id).value; }
  const DenseMatrix& gradient(int id) const { return node(id).grad; }

  /// Recomputes every non-leaf node in order. Throws NumericError naming the
  /// first node whose output is not finite.
  void forward() {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      Node& n = nodes_[i];
      if (n.op == Op::kLeaf) continue;
      compute(n);
      double probe = 0.0;
      for (double v : n.value.values) probe += v;
      if (!std::isfinite(probe)) {
        for (double v : n.value.values) {
          if (!std::isfinite(v))
            throw NumericError("non-finite value in tape node #" + std::to_string(i) + " (" +
                               op_name(n.op) + ")");
        }
        throw NumericError("overflow in tape node #" + std::to_string(i) + " (" +
                           op_name(n.op) + ")");
      }
    }
  }

  /// Reverse sweep from a scalar output; gradients of all trainable-reachable
  /// nodes are left in place and read via gradient().
  void backward(int output) {
    const Node& out = node(output);
    require(out.value.rows == 1 && out.value.cols == 1,
            "tape: backward requires a scalar terminal node");
    for (Node& n : nodes_) {
      if (n.requires_grad) {
        if (!n.grad.same_shape(n.value)) n.grad = DenseMatrix(n.value.rows, n.value.cols);
        std::fill(n.grad.values.begin(), n.grad.values.end(), 0.0);
      }
    }
    require(out.requires_grad, "tape: output does not depend on any trainable leaf");
    nodes_[static_cast<std::size_t>(output)].grad(0, 0) = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || n.op == Op::kLeaf) continue;
      propagate(n);
    }
  }

  /// Forward then backward; returns the scalar value of `output`.
  double evaluate_and_backprop(int output) {
    forward();
    backward(output);
    return value(output)(0, 0);
  }

 private:
  struct Node {
    Op op = Op::kLeaf;
    int a = -1;
    int b = -1;
    const SparseMatrix* sparse = nullptr;
    double alpha = 1.0;
    bool requires_grad = false;
    DenseMatrix value;
    DenseMatrix grad;
  };

  static const char* op_name(Op op) {
    switch (op) {
      case Op::kLeaf: return "leaf";
      case Op::kSparseProduct: return "sparse-product";
      case Op::kMatProduct: return "mat-product";
      case Op::kAdd: return "add";
      case Op::kMultiply: return "multiply";
      case Op::kScale: return "scale";
      case Op::kBiasAdd: return "bias-add";
      case Op::kRelu: return "relu";
      case Op::kOuter: return "outer";
      case Op::kSum: return "sum";
      case Op::kAbsError: return "abs-error";
      case Op::kReshape: return "reshape";
    }
    return "?";
  }

  const Node& node(int id) const {
    require(id >= 0 && static_cast<std::size_t>(id) < nodes_.size(), "tape: bad node id");
    return nodes_[static_cast<std::size_t>(id)];
  }

  Node unary(Op op, int a, std::size_t rows, std::size_t cols) {
    Node n;
    n.op = op;
    n.a = a;
    n.requires_grad = node(a).requires_grad;
    n.value = DenseMatrix(rows, cols);
    return n;
  }

  Node binary(Op op, int a, int b, std::size_t rows, std::size_t cols) {
    Node n = unary(op, a, rows, cols);
    n.b = b;
    n.requires_grad = n.requires_grad || node(b).requires_grad;
    return n;
  }

  int push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size() - 1);
  }

  void compute(Node& n) {
    const DenseMatrix& av = nodes_[static_cast<std::size_t>(n.a)].value;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kSparseProduct:
        n.sparse->multiply_into(av, n.value);
        break;
      case Op::kMatProduct:
        matmul_into(av, nodes_[static_cast<std::size_t>(n.b)].value, n.value);
        break;
      case Op::kAdd: {
        const DenseMatrix& bv = nodes_[static_cast<std::size_t>(n.b)].value;
        for (std::size_t i = 0; i < n.value.values.size(); ++i)
          n.value.values[i] = av.values[i] + bv.values[i];
        break;
      }
      case Op::kMultiply: {
        const DenseMatrix& bv = nodes_[static_cast<std::size_t>(n.b)].value;
        for (std::size_t i = 0; i < n.value.values.size(); ++i)
          n.value.values[i] = av.values[i] * bv.values[i];
        break;
      }
      case Op::kScale:
        for (std::size_t i = 0; i < n.value.values.size(); ++i)
          n.value.values[i] = n.alpha * av.values[i];
        break;
      case Op::kBiasAdd: {
        const DenseMatrix& bias = nodes_[static_cast<std::size_t>(n.b)].value;
        for (std::size_t i = 0; i < av.rows; ++i) {
          const double* src = av.row(i);
          double* dst = n.value.row(i);
          for (std::size_t j = 0; j < av.cols; ++j) dst[j] = src[j] + bias.values[j];
        }
        break;
      }
      case Op::kRelu:
        for (std::size_t i = 0; i < n.value.values.size(); ++i)
          n.value.values[i] = av.values[i] > 0.0 ? av.values[i] : 0.0;
        break;
      case Op::kOuter: {
        const DenseMatrix& rv = nodes_[static_cast<std::size_t>(n.b)].value;
        for (std::size_t i = 0; i < n.value.rows; ++i) {
          const double u = av.values[i];
          double* dst = n.value.row(i);
          for (std::size_t j = 0; j < n.value.cols; ++j) dst[j] = u * rv.values[j];
        }
        break;
      }
      case Op::kSum: {
        double s = 0.0;
        for (double v : av.values) s += v;
        n.value(0, 0) = s;
        break;
      }
      case Op::kAbsError: {
        const DenseMatrix& bv = nodes_[static_cast<std::size_t>(n.b)].value;
        double s = 0.0;
        for (std::size_t i = 0; i < av.values.size(); ++i)
          s += std::abs(av.values[i] - bv.values[i]);
        n.value(0, 0) = s;
        break;
      }
      case Op::kReshape:
        n.value.values = av.values;
        break;
    }
  }

  void propagate(Node& n) {
    Node& a = nodes_[static_cast<std::size_t>(n.a)];
    Node* b = n.b >= 0 ? &nodes_[static_cast<std::size_t>(n.b)] : nullptr;
    const DenseMatrix& g = n.grad;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kSparseProduct:
        if (a.requires_grad) n.sparse->multiply_transposed_accumulate(g, a.grad);
        break;
      case Op::kMatProduct: {
        // dA += g * B^T ; dB += A^T * g
        if (a.requires_grad) {
          for (std::size_t i = 0; i < a.value.rows; ++i) {
            const double* g_row = g.row(i);
            double* da_row = a.grad.row(i);
            for (std::size_t k = 0; k < a.value.cols; ++k) {
              const double* b_row = b->value.row(k);
              double dot = 0.0;
              for (std::size_t j = 0; j < g.cols; ++j) dot += g_row[j] * b_row[j];
              da_row[k] += dot;
            }
          }
        }
        if (b->requires_grad) {
          for (std::size_t i = 0; i < a.value.rows; ++i) {
            const double* g_row = g.row(i);
            const double* a_row = a.value.row(i);
            for (std::size_t k = 0; k < a.value.cols; ++k) {
              const double aik = a_row[k];
              if (aik == 0.0) continue;
              double* db_row = b->grad.row(k);
              for (std::size_t j = 0; j < g.cols; ++j) db_row[j] += aik * g_row[j];
            }
          }
        }
        break;
      }
      case Op::kAdd:
        if (a.requires_grad)
          for (std::size_t i = 0; i < g.values.size(); ++i) a.grad.values[i] += g.values[i];
        if (b->requires_grad)
          for (std::size_t i = 0; i < g.values.size(); ++i) b->grad.values[i] += g.values[i];
        break;
      case Op::kMultiply:
        if (a.requires_grad)
          for (std::size_t i = 0; i < g.values.size(); ++i)
            a.grad.values[i] += g.values[i] * b->value.values[i];
        if (b->requires_grad)
          for (std::size_t i = 0; i < g.values.size(); ++i)
            b->grad.values[i] += g.values[i] * a.value.values[i];
        break;
      case Op::kScale:
        if (a.requires_grad)
          for (std::size_t i = 0; i < g.values.size(); ++i)
            a.grad.values[i] += n.alpha * g.values[i];
        break;
      case Op::kBiasAdd:
        if (a.requires_grad)
          for (std::size_t i = 0; i < g.values.size(); ++i) a.grad.values[i] += g.values[i];
        if (b->requires_grad) {
          for (std::size_t i = 0; i < g.rows; ++i) {
            const double* g_row = g.row(i);
            for (std::size_t j = 0; j < g.cols; ++j) b->grad.values[j] += g_row[j];
          }
        }
        break;
      case Op::kRelu:
        // subgradient at the kink is 0
        if (a.requires_grad)
          for (std::size_t i = 0; i < g.values.size(); ++i)
            if (a.value.values[i] > 0.0) a.grad.values[i] += g.values[i];
        break;
      case Op::kOuter:
        if (a.requires_grad) {
          for (std::size_t i = 0; i < g.rows; ++i) {
            const double* g_row = g.row(i);
            double dot = 0.0;
            for (std::size_t j = 0; j < g.cols; ++j) dot += g_row[j] * b->value.values[j];
            a.grad.values[i] += dot;
          }
        }
        if (b->requires_grad) {
          for (std::size_t i = 0; i < g.rows; ++i) {
            const double* g_row = g.row(i);
            const double u = a.value.values[i];
            for (std::size_t j = 0; j < g.cols; ++j) b->grad.values[j] += u * g_row[j];
          }
        }
        break;
      case Op::kSum:
        if (a.requires_grad) {
          const double s = g(0, 0);
          for (double& x : a.grad.values) x += s;
        }
        break;
      case Op::kAbsError: {
        const double s = g(0, 0);
        for (std::size_t i = 0; i < a.value.values.size(); ++i) {
          const double d = a.value.values[i] - b->value.values[i];
          const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
          if (a.requires_grad) a.grad.values[i] += s * sign;
          if (b->requires_grad) b->grad.values[i] -= s * sign;
        }
        break;
      }
      case Op::kReshape:
        if (a.requires_grad)
          for (std::size_t i = 0; i < g.values.size(); ++i) a.grad.values[i] += g.values[i];
        break;
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace meshparts
