#pragma once
// Dense row-major matrix of doubles. The pipeline runs at desk scale
// (thousands of nodes, dims in the hundreds), so plain loops with a fixed
// accumulation order are preferred over a BLAS dependency: every result
// is reproducible bit for bit.

#include <cstddef>
#include <vector>

#include "mrfg/core.hpp"

namespace mrfg {

class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  double* row_ptr(size_t r) { return data_.data() + r * cols_; }
  const double* row_ptr(size_t r) const { return data_.data() + r * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  // this (n x k) times other (k x m) -> (n x m)
  Matrix matmul(const Matrix& other) const {
    if (cols_ != other.rows_) throw Error("matmul: inner dimension mismatch");
    Matrix out(rows_, other.cols_);
    for (size_t i = 0; i < rows_; ++i) {
      const double* a = row_ptr(i);
      double* o = out.row_ptr(i);
      for (size_t k = 0; k < cols_; ++k) {
        const double aik = a[k];
        if (aik == 0.0) continue;
        const double* b = other.row_ptr(k);
        for (size_t j = 0; j < other.cols_; ++j) o[j] += aik * b[j];
      }
    }
    return out;
  }

  // this^T (k x n becomes n x k) times other (k x m) -> (n x m);
  // avoids materializing the transpose.
  Matrix transpose_matmul(const Matrix& other) const {
    if (rows_ != other.rows_) throw Error("transpose_matmul: row mismatch");
    Matrix out(cols_, other.cols_);
    for (size_t k = 0; k < rows_; ++k) {
      const double* a = row_ptr(k);
      const double* b = other.row_ptr(k);
      for (size_t i = 0; i < cols_; ++i) {
        const double aki = a[i];
        if (aki == 0.0) continue;
        double* o = out.row_ptr(i);
        for (size_t j = 0; j < other.cols_; ++j) o[j] += aki * b[j];
      }
    }
    return out;
  }

  // this (n x k) times other^T (m x k) -> (n x m)
  Matrix matmul_transpose(const Matrix& other) const {
    if (cols_ != other.cols_) throw Error("matmul_transpose: col mismatch");
    Matrix out(rows_, other.rows_);
    for (size_t i = 0; i < rows_; ++i) {
      const double* a = row_ptr(i);
      double* o = out.row_ptr(i);
      for (size_t j = 0; j < other.rows_; ++j) {
        const double* b = other.row_ptr(j);
        double acc = 0.0;
        for (size_t k = 0; k < cols_; ++k) acc += a[k] * b[k];
        o[j] = acc;
      }
    }
    return out;
  }

  void add_inplace(const Matrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw Error("add: shape mismatch");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  }

  Matrix select_columns(const std::vector<size_t>& cols) const {
    Matrix out(rows_, cols.size());
    for (size_t i = 0; i < rows_; ++i) {
      const double* src = row_ptr(i);
      double* dst = out.row_ptr(i);
      for (size_t j = 0; j < cols.size(); ++j) dst[j] = src[cols[j]];
    }
    return out;
  }

  Matrix select_rows(const std::vector<size_t>& rows) const {
    Matrix out(rows.size(), cols_);
    for (size_t i = 0; i < rows.size(); ++i) {
      const double* src = row_ptr(rows[i]);
      double* dst = out.row_ptr(i);
      for (size_t j = 0; j < cols_; ++j) dst[j] = src[j];
    }
    return out;
  }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace mrfg
