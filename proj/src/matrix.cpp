#include "tann/matrix.hpp"

#include <cmath>
#include <cstring>
#include <limits>

namespace tann {

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0)
    throw ShapeError("matrix: negative dimension " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  data_.assign(std::size_t(rows) * std::size_t(cols), 0.0);
}

Matrix Matrix::filled(int rows, int cols, double v) {
  Matrix m(rows, cols);
  m.set_all(v);
  return m;
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = int(rows.size());
  const int c = r ? int(rows.begin()->size()) : 0;
  Matrix m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    if (int(row.size()) != c) throw ShapeError("from_rows: ragged initializer");
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

void Matrix::set_all(double v) {
  for (auto& x : data_) x = v;
}

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
}

// ---- products ----------------------------------------------------------

static void check_mul(const Matrix& a, const Matrix& b, const Matrix& c, const char* what) {
  if (a.cols() != b.rows())
    throw ShapeError(std::string(what) + ": lhs " + shape_str(a) + " incompatible with rhs " +
                     shape_str(b));
  if (c.rows() != a.rows() || c.cols() != b.cols())
    throw ShapeError(std::string(what) + ": output " + shape_str(c) + " for " + shape_str(a) +
                     " * " + shape_str(b));
}

void matmul_acc(Matrix& c, const Matrix& a, const Matrix& b) {
  check_mul(a, b, c, "matmul");
  const int K = a.cols(), N = b.cols(), M = a.rows();
  for (int i = 0; i < M; ++i) {
    double* crow = c.row(i);
    const double* arow = a.row(i);
    for (int k = 0; k < K; ++k) {
      const double aik = arow[k];
      const double* brow = b.row(k);
      for (int j = 0; j < N; ++j) crow[j] += aik * brow[j];
    }
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  matmul_acc(c, a, b);
  return c;
}

void matmul_ta_acc(Matrix& c, const Matrix& a, const Matrix& b) {
  // c += a^T * b; a is K x M, b is K x N, c is M x N.
  if (a.rows() != b.rows())
    throw ShapeError("matmul_ta: lhs " + shape_str(a) + " incompatible with rhs " + shape_str(b));
  if (c.rows() != a.cols() || c.cols() != b.cols())
    throw ShapeError("matmul_ta: output " + shape_str(c) + " for " + shape_str(a) + "^T * " +
                     shape_str(b));
  const int K = a.rows(), M = a.cols(), N = b.cols();
  for (int k = 0; k < K; ++k) {
    const double* arow = a.row(k);
    const double* brow = b.row(k);
    for (int i = 0; i < M; ++i) {
      const double aki = arow[i];
      double* crow = c.row(i);
      for (int j = 0; j < N; ++j) crow[j] += aki * brow[j];
    }
  }
}

Matrix matmul_ta(const Matrix& a, const Matrix& b) {
  Matrix c(a.cols(), b.cols());
  matmul_ta_acc(c, a, b);
  return c;
}

void matmul_tb_acc(Matrix& c, const Matrix& a, const Matrix& b) {
  // c += a * b^T; a is M x K, b is N x K, c is M x N.
  if (a.cols() != b.cols())
    throw ShapeError("matmul_tb: lhs " + shape_str(a) + " incompatible with rhs " + shape_str(b));
  if (c.rows() != a.rows() || c.cols() != b.rows())
    throw ShapeError("matmul_tb: output " + shape_str(c) + " for " + shape_str(a) + " * " +
                     shape_str(b) + "^T");
  const int M = a.rows(), K = a.cols(), N = b.rows();
  for (int i = 0; i < M; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int j = 0; j < N; ++j) {
      const double* brow = b.row(j);
      double s = 0.0;
      for (int k = 0; k < K; ++k) s += arow[k] * brow[k];
      crow[j] += s;
    }
  }
}

Matrix matmul_tb(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.rows());
  matmul_tb_acc(c, a, b);
  return c;
}

// ---- elementwise / reductions ------------------------------------------

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

void add_inplace(Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

void sub_inplace(Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] -= pb[i];
}

void axpy_inplace(Matrix& a, double s, const Matrix& b) {
  require_same_shape(a, b, "axpy");
  double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] += s * pb[i];
}

void scale_inplace(Matrix& a, double s) {
  double* pa = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] *= s;
}

void hadamard_inplace(Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] *= pb[i];
}

Matrix add(const Matrix& a, const Matrix& b) {
  Matrix c = a;
  add_inplace(c, b);
  return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  Matrix c = a;
  sub_inplace(c, b);
  return c;
}

double sumsq(const Matrix& a) {
  double s = 0.0;
  const double* p = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += p[i] * p[i];
  return s;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(pa[i] - pb[i]));
  return m;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) return false;
  return a.size() == 0 ||
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void add_col_broadcast_inplace(Matrix& a, const Matrix& b) {
  if (b.rows() != a.rows() || b.cols() != 1)
    throw ShapeError("broadcast: bias " + shape_str(b) + " for " + shape_str(a));
  for (int i = 0; i < a.rows(); ++i) {
    double* arow = a.row(i);
    const double bi = b(i, 0);
    for (int j = 0; j < a.cols(); ++j) arow[j] += bi;
  }
}

void rowsum_acc(Matrix& acc, const Matrix& m) {
  if (acc.rows() != m.rows() || acc.cols() != 1)
    throw ShapeError("rowsum: acc " + shape_str(acc) + " for " + shape_str(m));
  for (int i = 0; i < m.rows(); ++i) {
    const double* row = m.row(i);
    double s = 0.0;
    for (int j = 0; j < m.cols(); ++j) s += row[j];
    acc(i, 0) += s;
  }
}

// ---- column gather/scatter ----------------------------------------------

Matrix gather_cols(const Matrix& src, const std::vector<int>& cols) {
  Matrix out(src.rows(), int(cols.size()));
  for (int i = 0; i < src.rows(); ++i) {
    const double* srow = src.row(i);
    double* orow = out.row(i);
    for (std::size_t j = 0; j < cols.size(); ++j) orow[j] = srow[cols[j]];
  }
  return out;
}

void scatter_cols(Matrix& dst, const Matrix& src, const std::vector<int>& cols) {
  if (src.rows() != dst.rows() || src.cols() != int(cols.size()))
    throw ShapeError("scatter: src " + shape_str(src) + " into " + shape_str(dst));
  for (int i = 0; i < dst.rows(); ++i) {
    double* drow = dst.row(i);
    const double* srow = src.row(i);
    for (std::size_t j = 0; j < cols.size(); ++j) drow[cols[j]] = srow[j];
  }
}

void scatter_add_cols(Matrix& dst, const Matrix& src, const std::vector<int>& cols) {
  if (src.rows() != dst.rows() || src.cols() != int(cols.size()))
    throw ShapeError("scatter_add: src " + shape_str(src) + " into " + shape_str(dst));
  for (int i = 0; i < dst.rows(); ++i) {
    double* drow = dst.row(i);
    const double* srow = src.row(i);
    for (std::size_t j = 0; j < cols.size(); ++j) drow[cols[j]] += srow[j];
  }
}

// ---- nonlinearities ------------------------------------------------------

double sigmoid_scalar(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  const double* pa = a.data();
  double* po = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) po[i] = sigmoid_scalar(pa[i]);
  return out;
}

std::vector<double> softmax(const std::vector<double>& v) {
  if (v.empty()) throw ValidationError("softmax: empty input");
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (auto& x : out) x /= sum;
  return out;
}

void softmax_columns(const Matrix& logits, Matrix& probs, Matrix& logp) {
  const int C = logits.rows(), B = logits.cols();
  if (C == 0 || B == 0) throw ValidationError("softmax: empty logits " + shape_str(logits));
  probs = Matrix(C, B);
  logp = Matrix(C, B);
  for (int j = 0; j < B; ++j) {
    double mx = logits(0, j);
    for (int i = 1; i < C; ++i) mx = std::max(mx, logits(i, j));
    double sum = 0.0;
    for (int i = 0; i < C; ++i) sum += std::exp(logits(i, j) - mx);
    const double lse = mx + std::log(sum);
    for (int i = 0; i < C; ++i) {
      logp(i, j) = logits(i, j) - lse;
      probs(i, j) = std::exp(logp(i, j));
    }
  }
}

// ---- checks --------------------------------------------------------------

bool all_finite(const Matrix& m) {
  const double* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

void assert_finite(const Matrix& m, const char* what) {
  if (!all_finite(m))
    throw NumericError(std::string("non-finite value in ") + what + " (" + shape_str(m) + ")");
}

}  // namespace tann
