#pragma once

#include <cstddef>
#include <vector>

namespace pgkd {

// Dense row-major matrix of doubles. The workhorse value type of the whole
// library; immutable by convention once handed to a Tape.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // rows*cols, row-major

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  static Matrix zeros(int r, int c) { return Matrix(r, c); }
  static Matrix identity(int n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool operator==(const Matrix& o) const {
    return rows == o.rows && cols == o.cols && data == o.data;
  }
};

Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix transpose(const Matrix& a);

bool all_finite(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Compressed sparse row matrix with explicit values. Edge weights for
// normalized adjacency / mean aggregation live here.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;  // rows+1
  std::vector<int> col_idx;
  std::vector<double> vals;

  SparseMatrix() = default;
  SparseMatrix(int r, int c) : rows(r), cols(c), row_ptr(r + 1, 0) {}

  int nnz() const { return static_cast<int>(col_idx.size()); }
  SparseMatrix transposed() const;
  Matrix dense() const;
};

// y = s * x, with x dense.
Matrix spmm(const SparseMatrix& s, const Matrix& x);

}  // namespace pgkd
