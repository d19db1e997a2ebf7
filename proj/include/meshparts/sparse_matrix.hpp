#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "meshparts/dense_matrix.hpp"
#include "meshparts/errors.hpp"

namespace meshparts {

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

/// Sparse real64 matrix held as triplets in canonical (row, col) order.
/// Exact zeros are dropped on construction; duplicates are rejected.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> triplets) {
    std::erase_if(triplets, [](const Triplet& t) { return t.value == 0.0; });
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    for (std::size_t i = 0; i < triplets.size(); ++i) {
      const Triplet& t = triplets[i];
      require(t.row < rows && t.col < cols, "sparse entry out of bounds");
      if (!std::isfinite(t.value))
        throw NumericError("sparse entry (" + std::to_string(t.row) + "," +
                           std::to_string(t.col) + ") is not finite");
      if (i > 0 && triplets[i - 1].row == t.row && triplets[i - 1].col == t.col)
        throw ContractViolation("duplicate sparse entry at (" + std::to_string(t.row) +
                                "," + std::to_string(t.col) + ")");
    }
    SparseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.entries_ = std::move(triplets);
    m.rebuild_row_index();
    return m;
  }

  static SparseMatrix identity(std::size_t n) {
    std::vector<Triplet> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = {i, i, 1.0};
    return from_triplets(n, n, std::move(t));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return entries_.size(); }
  const std::vector<Triplet>& entries() const { return entries_; }

  double at(std::size_t i, std::size_t j) const {
    const auto begin = entries_.begin() + static_cast<std::ptrdiff_t>(row_start_[i]);
    const auto end = entries_.begin() + static_cast<std::ptrdiff_t>(row_start_[i + 1]);
    auto it = std::lower_bound(begin, end, j,
                               [](const Triplet& t, std::size_t col) { return t.col < col; });
    return (it != end && it->col == j) ? it->value : 0.0;
  }

  std::size_t row_nnz(std::size_t i) const { return row_start_[i + 1] - row_start_[i]; }

  /// out = S * x
  void multiply_into(const DenseMatrix& x, DenseMatrix& out) const {
    require(x.rows == cols_, "sparse multiply: dimension mismatch");
    require(out.rows == rows_ && out.cols == x.cols, "sparse multiply: output shape");
    std::fill(out.values.begin(), out.values.end(), 0.0);
    for (const Triplet& t : entries_) {
      const double* src = x.row(t.col);
      double* dst = out.row(t.row);
      for (std::size_t j = 0; j < x.cols; ++j) dst[j] += t.value * src[j];
    }
  }

  DenseMatrix multiply(const DenseMatrix& x) const {
    DenseMatrix out(rows_, x.cols);
    multiply_into(x, out);
    return out;
  }

  /// out += S^T * x (accumulating; used by reverse-mode gradients)
  void multiply_transposed_accumulate(const DenseMatrix& x, DenseMatrix& out) const {
    require(x.rows == rows_, "sparse transposed multiply: dimension mismatch");
    require(out.rows == cols_ && out.cols == x.cols, "sparse transposed multiply: output shape");
    for (const Triplet& t : entries_) {
      const double* src = x.row(t.row);
      double* dst = out.row(t.col);
      for (std::size_t j = 0; j < x.cols; ++j) dst[j] += t.value * src[j];
    }
  }

  SparseMatrix transposed() const {
    std::vector<Triplet> t;
    t.reserve(entries_.size());
    for (const Triplet& e : entries_) t.push_back({e.col, e.row, e.value});
    return from_triplets(cols_, rows_, std::move(t));
  }

  DenseMatrix to_dense() const {
    DenseMatrix d(rows_, cols_);
    for (const Triplet& t : entries_) d(t.row, t.col) = t.value;
    return d;
  }

 private:
  void rebuild_row_index() {
    row_start_.assign(rows_ + 1, 0);
    for (const Triplet& t : entries_) ++row_start_[t.row + 1];
    for (std::size_t i = 0; i < rows_; ++i) row_start_[i + 1] += row_start_[i];
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Triplet> entries_;
  std::vector<std::size_t> row_start_;
};

}  // namespace meshparts
