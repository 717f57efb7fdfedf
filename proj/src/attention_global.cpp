#include "tann/attention_global.hpp"

#include <cmath>

#include "tann/attention_local.hpp"  // entropy2
#include "tann/error.hpp"

namespace tann {

GlobalProjection global_project(const Matrix& hhat_prime, int batch, const Matrix& S) {
  const int d_fp = hhat_prime.rows();
  const int n = batch > 0 ? hhat_prime.cols() / batch : 0;
  if (batch < 1 || hhat_prime.cols() != batch * n)
    throw ShapeError("global_project: features " + shape_str(hhat_prime) + " for batch " +
                     std::to_string(batch));
  if (S.rows() != n)
    throw ShapeError("global_project: S is " + shape_str(S) + " but sheet has " +
                     std::to_string(n) + " columns");
  const int np = S.cols();

  GlobalProjection out;
  out.htilde.reserve(std::size_t(batch));
  out.f = Matrix(d_fp * np, batch);
  std::vector<int> cols(static_cast<std::size_t>(n));
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < n; ++i) cols[std::size_t(i)] = b * n + i;
    Matrix ht = matmul(gather_cols(hhat_prime, cols), S);  // d_fp x n'
    for (int c = 0; c < np; ++c)
      for (int r = 0; r < d_fp; ++r) out.f(c * d_fp + r, b) = ht(r, c);
    out.htilde.push_back(std::move(ht));
  }
  return out;
}

void global_project_backward(const GlobalProjection& proj, const Matrix& hhat_prime, int batch,
                             const Matrix& S, const Matrix& d_f, Matrix& d_hhat_prime,
                             Matrix* dS) {
  const int d_fp = hhat_prime.rows();
  const int n = hhat_prime.cols() / batch;
  const int np = S.cols();
  require_same_shape(d_hhat_prime, hhat_prime, "global_project backward");

  std::vector<int> cols(static_cast<std::size_t>(n));
  Matrix d_ht(d_fp, np);
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < np; ++c)
      for (int r = 0; r < d_fp; ++r) d_ht(r, c) = d_f(c * d_fp + r, b);
    for (int i = 0; i < n; ++i) cols[std::size_t(i)] = b * n + i;
    scatter_add_cols(d_hhat_prime, matmul_tb(d_ht, S), cols);
    if (dS) {
      const Matrix block = gather_cols(hhat_prime, cols);
      matmul_ta_acc(*dS, block, d_ht);
    }
  }
  (void)proj;
}

GlobalAttendResult global_attend(const Matrix& f, const DiscParams& disc,
                                 const GlobalAttendOptions& opt) {
  GlobalAttendResult out;
  out.tape = disc_forward(disc, f);
  const int B = out.tape.probs.cols();
  if (opt.frozen_w && int(opt.frozen_w->size()) != B)
    throw ShapeError("global_attend: frozen weights size " +
                     std::to_string(opt.frozen_w->size()) + " for batch " + std::to_string(B));
  out.w.resize(std::size_t(B));
  out.entropy.resize(std::size_t(B));
  for (int b = 0; b < B; ++b) {
    const double h = entropy2(out.tape.probs(0, b), out.tape.probs(1, b));
    out.entropy[std::size_t(b)] = h;
    out.w[std::size_t(b)] = opt.frozen_w ? (*opt.frozen_w)[std::size_t(b)] : 1.0 + h;
  }
  return out;
}

double global_disc_loss(const DiscTape& tape, const std::vector<std::uint8_t>& is_source) {
  return disc_nll(tape, is_source);
}

double attentive_entropy_loss(const Matrix& preds, const std::vector<double>& w,
                              Matrix* dpreds) {
  const int C = preds.rows(), B = preds.cols();
  if (C < 2 || B < 1) throw ShapeError("attentive_entropy_loss: predictions " + shape_str(preds));
  if (int(w.size()) != B)
    throw ShapeError("attentive_entropy_loss: " + std::to_string(w.size()) + " weights for " +
                     std::to_string(B) + " samples");
  if (dpreds) *dpreds = Matrix(C, B);
  double loss = 0.0;
  for (int b = 0; b < B; ++b) {
    double sum = 0.0;
    for (int c = 0; c < C; ++c) {
      const double p = preds(c, b);
      if (p < 0.0 || p > 1.0)
        throw ValidationError("attentive_entropy_loss: probability " + std::to_string(p) +
                              " outside [0,1]");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw ValidationError("attentive_entropy_loss: prediction column sums to " +
                            std::to_string(sum));
    for (int c = 0; c < C; ++c) {
      const double p = preds(c, b);
      if (p > 0.0) {
        const double lp = std::log(p);
        loss -= w[std::size_t(b)] * p * lp;
        if (dpreds) (*dpreds)(c, b) = -w[std::size_t(b)] * (lp + 1.0);
      }
      // p == 0: term contributes 0; gradient pinned to 0 by convention.
    }
  }
  return loss;
}

}  // namespace tann
