#include "pgkd/matrix.hpp"

#include <Eigen/Core>
#include <cmath>

#include "pgkd/error.hpp"

namespace pgkd {

namespace {
using EigenMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using EigenMutMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

EigenMap map(const Matrix& m) { return EigenMap(m.data.data(), m.rows, m.cols); }
EigenMutMap map(Matrix& m) { return EigenMutMap(m.data.data(), m.rows, m.cols); }
}  // namespace

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  int r = static_cast<int>(rows.size());
  int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  Matrix m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    check(static_cast<int>(row.size()) == c, ErrorKind::invalid_argument,
          "from_rows: ragged row ", i);
    int j = 0;
    for (double v : row) m.at(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  check(a.cols == b.rows, ErrorKind::contract, "matmul: shape mismatch ", a.rows,
        "x", a.cols, " * ", b.rows, "x", b.cols);
  Matrix out(a.rows, b.cols);
  map(out).noalias() = map(a) * map(b);
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check(a.rows == b.rows, ErrorKind::contract, "matmul_tn: shape mismatch ",
        a.rows, "x", a.cols, "^T * ", b.rows, "x", b.cols);
  Matrix out(a.cols, b.cols);
  map(out).noalias() = map(a).transpose() * map(b);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check(a.cols == b.cols, ErrorKind::contract, "matmul_nt: shape mismatch ",
        a.rows, "x", a.cols, " * ", b.rows, "x", b.cols, "^T");
  Matrix out(a.rows, b.rows);
  map(out).noalias() = map(a) * map(b).transpose();
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

bool all_finite(const Matrix& a) {
  for (double v : a.data)
    if (!std::isfinite(v)) return false;
  return true;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  check(a.same_shape(b), ErrorKind::contract, "max_abs_diff: shape mismatch");
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

SparseMatrix SparseMatrix::transposed() const {
  SparseMatrix t(cols, rows);
  t.col_idx.resize(col_idx.size());
  t.vals.resize(vals.size());
  std::vector<int> count(cols, 0);
  for (int c : col_idx) count[c]++;
  for (int i = 0; i < cols; ++i) t.row_ptr[i + 1] = t.row_ptr[i] + count[i];
  std::vector<int> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (int r = 0; r < rows; ++r) {
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      int pos = next[col_idx[k]]++;
      t.col_idx[pos] = r;
      t.vals[pos] = vals[k];
    }
  }
  return t;
}

Matrix SparseMatrix::dense() const {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) m.at(r, col_idx[k]) += vals[k];
  return m;
}

Matrix spmm(const SparseMatrix& s, const Matrix& x) {
  check(s.cols == x.rows, ErrorKind::contract, "spmm: shape mismatch ", s.rows,
        "x", s.cols, " * ", x.rows, "x", x.cols);
  Matrix out(s.rows, x.cols);
  for (int r = 0; r < s.rows; ++r) {
    double* orow = out.row(r);
    for (int k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k) {
      const double w = s.vals[k];
      const double* xrow = x.row(s.col_idx[k]);
      for (int j = 0; j < x.cols; ++j) orow[j] += w * xrow[j];
    }
  }
  return out;
}

}  // namespace pgkd
