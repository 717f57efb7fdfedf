#pragma once
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "tann/error.hpp"

namespace tann {

// Dense row-major matrix of 64-bit floats. The only numeric container in the
// library; all gradients are hand-derived, so there is no autograd state.
// Accumulation orders inside every op are fixed, which is what makes seeded
// training runs reproduce bitwise.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);  // zero-filled
  static Matrix filled(int rows, int cols, double v);
  static Matrix identity(int n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) { return data_[std::size_t(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[std::size_t(r) * cols_ + c]; }
  double* row(int r) { return data_.data() + std::size_t(r) * cols_; }
  const double* row(int r) const { return data_.data() + std::size_t(r) * cols_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void set_all(double v);
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

std::string shape_str(const Matrix& m);
void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

// ---- products ----------------------------------------------------------

Matrix matmul(const Matrix& a, const Matrix& b);               // a*b
void matmul_acc(Matrix& c, const Matrix& a, const Matrix& b);  // c += a*b
Matrix matmul_ta(const Matrix& a, const Matrix& b);            // a^T * b
void matmul_ta_acc(Matrix& c, const Matrix& a, const Matrix& b);
Matrix matmul_tb(const Matrix& a, const Matrix& b);  // a * b^T
void matmul_tb_acc(Matrix& c, const Matrix& a, const Matrix& b);

// ---- elementwise / reductions ------------------------------------------

Matrix transpose(const Matrix& a);
void add_inplace(Matrix& a, const Matrix& b);
void sub_inplace(Matrix& a, const Matrix& b);
void axpy_inplace(Matrix& a, double s, const Matrix& b);  // a += s*b
void scale_inplace(Matrix& a, double s);
void hadamard_inplace(Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
double sumsq(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool bitwise_equal(const Matrix& a, const Matrix& b);

// b is a column vector (rows x 1); adds it to every column of a.
void add_col_broadcast_inplace(Matrix& a, const Matrix& b);
// acc += row-wise sum of m (acc is rows x 1).
void rowsum_acc(Matrix& acc, const Matrix& m);

// ---- column gather/scatter (batched layouts) ----------------------------

Matrix gather_cols(const Matrix& src, const std::vector<int>& cols);
void scatter_cols(Matrix& dst, const Matrix& src, const std::vector<int>& cols);
void scatter_add_cols(Matrix& dst, const Matrix& src, const std::vector<int>& cols);

// ---- nonlinearities ------------------------------------------------------

// Numerically stable logistic; never overflows for any finite input.
double sigmoid_scalar(double x);
Matrix sigmoid(const Matrix& a);

// Max-subtracted softmax of a vector; errors on empty input.
std::vector<double> softmax(const std::vector<double>& v);
// Column-wise softmax with log-probabilities (logp = logits - logsumexp).
void softmax_columns(const Matrix& logits, Matrix& probs, Matrix& logp);

// ---- checks --------------------------------------------------------------

bool all_finite(const Matrix& m);
void assert_finite(const Matrix& m, const char* what);

}  // namespace tann
