#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "meshparts/errors.hpp"

namespace meshparts {

/// Row-major dense real64 matrix. Vectors are represented as 1xC or Rx1.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // rows*cols, row-major

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> data) {
    DenseMatrix m(data.size(), data.size() ? data.begin()->size() : 0);
    std::size_t i = 0;
    for (const auto& row : data) {
      require(row.size() == m.cols, "ragged initializer for DenseMatrix");
      std::size_t j = 0;
      for (double x : row) m(i, j++) = x;
      ++i;
    }
    return m;
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix constant(std::size_t r, std::size_t c, double value) {
    DenseMatrix m(r, c);
    for (double& x : m.values) x = value;
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

  double* row(std::size_t i) { return values.data() + i * cols; }
  const double* row(std::size_t i) const { return values.data() + i * cols; }

  std::size_t size() const { return rows * cols; }

  bool same_shape(const DenseMatrix& other) const {
    return rows == other.rows && cols == other.cols;
  }

  bool all_finite() const {
    for (double x : values) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }

  void fill(double value) {
    for (double& x : values) x = value;
  }
};

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

/// out = a * b. Accumulates row-wise so the inner loop stays contiguous.
inline void matmul_into(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
  require(a.cols == b.rows, "matmul: inner dimensions differ");
  require(out.rows == a.rows && out.cols == b.cols, "matmul: output shape mismatch");
  std::fill(out.values.begin(), out.values.end(), 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* out_row = out.row(i);
    const double* a_row = a.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a_row[k];
      if (aik == 0.0) continue;
      const double* b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) out_row[j] += aik * b_row[j];
    }
  }
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows, b.cols);
  matmul_into(a, b, out);
  return out;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.same_shape(b), "max_abs_diff: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  return worst;
}

}  // namespace meshparts
