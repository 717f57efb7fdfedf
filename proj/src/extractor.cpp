#include "tann/extractor.hpp"

#include <algorithm>

#include "tann/error.hpp"

namespace tann {

ExtractorParams ExtractorParams::init(int d, int d_f, int d_fp, Rng& rng) {
  if (d < 1 || d_f < 1 || d_fp < 1)
    throw ValidationError("extractor: dimensions must be positive");
  ExtractorParams p;
  for (int s = 0; s < 4; ++s) {
    ScanParams& sp = p.scan(s);
    sp.U = Matrix(d_f, d);
    fill_glorot(sp.U, d, d_f, rng);
    sp.V = Matrix(d_f, d_f);
    fill_glorot(sp.V, d_f, d_f, rng);
    sp.b = Matrix(d_f, 1);
  }
  p.P = Matrix(d_fp, d_f);
  fill_glorot(p.P, d_f, d_fp, rng);
  p.Q = Matrix(d_fp, d_f);
  fill_glorot(p.Q, d_f, d_fp, rng);
  p.b_out = Matrix(d_fp, 1);
  return p;
}

ExtractorParams ExtractorParams::zeros(int d, int d_f, int d_fp) {
  ExtractorParams p;
  for (int s = 0; s < 4; ++s) {
    ScanParams& sp = p.scan(s);
    sp.U = Matrix(d_f, d);
    sp.V = Matrix(d_f, d_f);
    sp.b = Matrix(d_f, 1);
  }
  p.P = Matrix(d_fp, d_f);
  p.Q = Matrix(d_fp, d_f);
  p.b_out = Matrix(d_fp, 1);
  return p;
}

ScanParams& ExtractorParams::scan(int s) {
  switch (s) {
    case 0: return h_fwd;
    case 1: return h_bwd;
    case 2: return v_fwd;
    default: return v_bwd;
  }
}

const ScanParams& ExtractorParams::scan(int s) const {
  return const_cast<ExtractorParams*>(this)->scan(s);
}

static std::vector<int> electrode_cols(int electrode, int batch, int n) {
  std::vector<int> cols(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) cols[std::size_t(b)] = b * n + electrode;
  return cols;
}

ExtractorTape extractor_forward(const std::vector<const Matrix*>& xs, const ExtractorParams& p,
                                const PredecessorMap& scans) {
  if (xs.empty()) throw ValidationError("extractor: empty batch");
  const int d = xs[0]->rows();
  const int n = xs[0]->cols();
  const int B = int(xs.size());
  if (int(scans.horizontal.size()) != n)
    throw ShapeError("extractor: sample has " + std::to_string(n) + " electrodes, montage has " +
                     std::to_string(scans.horizontal.size()));
  if (p.h_fwd.U.cols() != d)
    throw ShapeError("extractor: U is " + shape_str(p.h_fwd.U) + " but sample dim is " +
                     std::to_string(d));
  const int d_f = p.h_fwd.U.rows();
  const int d_fp = p.P.rows();

  ExtractorTape tape;
  tape.batch = B;
  tape.n = n;
  tape.x_all = Matrix(d, B * n);
  for (int b = 0; b < B; ++b) {
    const Matrix& x = *xs[std::size_t(b)];
    if (x.rows() != d || x.cols() != n)
      throw ShapeError("extractor: sample " + std::to_string(b) + " is " + shape_str(x) +
                       ", expected " + std::to_string(d) + "x" + std::to_string(n));
    for (int i = 0; i < d; ++i) {
      const double* src = x.row(i);
      double* dst = tape.x_all.row(i) + std::size_t(b) * n;
      std::copy(src, src + n, dst);
    }
  }
  assert_finite(tape.x_all, "extractor input");

  tape.seq[0] = scans.horizontal;
  tape.seq[1] = scans.horizontal;
  std::reverse(tape.seq[1].begin(), tape.seq[1].end());
  tape.seq[2] = scans.vertical;
  tape.seq[3] = scans.vertical;
  std::reverse(tape.seq[3].begin(), tape.seq[3].end());

  tape.sh_sum = Matrix(d_f, B * n);
  tape.sv_sum = Matrix(d_f, B * n);

  for (int s = 0; s < 4; ++s) {
    const ScanParams& sp = p.scan(s);
    Matrix& axis_sum = (s < 2) ? tape.sh_sum : tape.sv_sum;
    tape.hidden[std::size_t(s)].reserve(std::size_t(n));
    const Matrix* prev = nullptr;
    for (int k = 0; k < n; ++k) {
      const int e = tape.seq[std::size_t(s)][std::size_t(k)];
      const auto cols = electrode_cols(e, B, n);
      Matrix a = matmul(sp.U, gather_cols(tape.x_all, cols));
      if (prev) matmul_acc(a, sp.V, *prev);
      add_col_broadcast_inplace(a, sp.b);
      Matrix h = sigmoid(a);
      scatter_add_cols(axis_sum, h, cols);
      tape.hidden[std::size_t(s)].push_back(std::move(h));
      prev = &tape.hidden[std::size_t(s)].back();
    }
  }

  tape.h_all = matmul(p.P, tape.sh_sum);
  matmul_acc(tape.h_all, p.Q, tape.sv_sum);
  add_col_broadcast_inplace(tape.h_all, p.b_out);
  assert_finite(tape.h_all, "extractor output");
  (void)d_fp;
  return tape;
}

void extractor_backward(const ExtractorTape& tape, const Matrix& dh_all,
                        const ExtractorParams& p, ExtractorParams& grads, Matrix* dx_all) {
  const int B = tape.batch, n = tape.n;
  require_same_shape(dh_all, tape.h_all, "extractor backward");

  matmul_tb_acc(grads.P, dh_all, tape.sh_sum);
  matmul_tb_acc(grads.Q, dh_all, tape.sv_sum);
  rowsum_acc(grads.b_out, dh_all);

  const Matrix dsh = matmul_ta(p.P, dh_all);
  const Matrix dsv = matmul_ta(p.Q, dh_all);
  if (dx_all) *dx_all = Matrix(tape.x_all.rows(), tape.x_all.cols());

  for (int s = 0; s < 4; ++s) {
    const ScanParams& sp = p.scan(s);
    ScanParams& g = grads.scan(s);
    const Matrix& ds_axis = (s < 2) ? dsh : dsv;
    const auto& hid = tape.hidden[std::size_t(s)];
    const auto& seq = tape.seq[std::size_t(s)];

    Matrix carry;  // V^T * delta from the later step
    for (int k = n - 1; k >= 0; --k) {
      const int e = seq[std::size_t(k)];
      const auto cols = electrode_cols(e, B, n);
      Matrix delta = gather_cols(ds_axis, cols);
      if (!carry.empty()) add_inplace(delta, carry);
      // through the sigmoid: delta *= h (1 - h)
      const Matrix& h = hid[std::size_t(k)];
      for (int i = 0; i < delta.rows(); ++i) {
        double* drow = delta.row(i);
        const double* hrow = h.row(i);
        for (int j = 0; j < delta.cols(); ++j) drow[j] *= hrow[j] * (1.0 - hrow[j]);
      }
      matmul_tb_acc(g.U, delta, gather_cols(tape.x_all, cols));
      if (k > 0) matmul_tb_acc(g.V, delta, hid[std::size_t(k - 1)]);
      rowsum_acc(g.b, delta);
      if (dx_all) scatter_add_cols(*dx_all, matmul_ta(sp.U, delta), cols);
      if (k > 0) carry = matmul_ta(sp.V, delta);
    }
  }
}

}  // namespace tann
