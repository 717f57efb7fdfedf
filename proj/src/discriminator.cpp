#include "tann/discriminator.hpp"

#include "tann/error.hpp"

namespace tann {

DiscParams DiscParams::init(int in_dim, int hidden, Rng& rng, bool zero_output) {
  if (in_dim < 1 || hidden < 1) throw ValidationError("discriminator: dimensions must be positive");
  DiscParams p;
  p.w1 = Matrix(hidden, in_dim);
  fill_glorot(p.w1, in_dim, hidden, rng);
  p.b1 = Matrix(hidden, 1);
  p.w2 = Matrix(2, hidden);
  if (!zero_output) fill_glorot(p.w2, hidden, 2, rng);
  p.b2 = Matrix(2, 1);
  return p;
}

DiscParams DiscParams::zeros(int in_dim, int hidden) {
  DiscParams p;
  p.w1 = Matrix(hidden, in_dim);
  p.b1 = Matrix(hidden, 1);
  p.w2 = Matrix(2, hidden);
  p.b2 = Matrix(2, 1);
  return p;
}

DiscTape disc_forward(const DiscParams& p, Matrix in) {
  if (in.rows() != p.in_dim())
    throw ShapeError("discriminator: input " + shape_str(in) + " for weights " +
                     shape_str(p.w1));
  DiscTape t;
  Matrix a = matmul(p.w1, in);
  add_col_broadcast_inplace(a, p.b1);
  t.hidden = sigmoid(a);
  Matrix logits = matmul(p.w2, t.hidden);
  add_col_broadcast_inplace(logits, p.b2);
  softmax_columns(logits, t.probs, t.logp);
  t.in = std::move(in);
  return t;
}

void require_both_domains(const std::vector<std::uint8_t>& is_source, const char* what) {
  bool has_src = false, has_tgt = false;
  for (auto s : is_source) (s ? has_src : has_tgt) = true;
  if (!has_src || !has_tgt)
    throw ValidationError(std::string(what) + ": batch must contain both source and target samples");
}

double disc_nll(const DiscTape& t, const std::vector<std::uint8_t>& is_source) {
  if (int(is_source.size()) != t.probs.cols())
    throw ShapeError("disc_nll: domain labels " + std::to_string(is_source.size()) +
                     " for batch " + std::to_string(t.probs.cols()));
  require_both_domains(is_source, "disc_nll");
  double loss = 0.0;
  for (int j = 0; j < t.probs.cols(); ++j)
    loss -= t.logp(is_source[std::size_t(j)] ? 0 : 1, j);
  return loss;
}

void disc_backward_nll(const DiscParams& p, const DiscTape& t,
                       const std::vector<std::uint8_t>& is_source, double c_param,
                       DiscParams* grads, double c_input, Matrix* d_in) {
  const int B = t.probs.cols();
  // d(NLL)/d(logits) = probs - onehot(domain), per column.
  Matrix dlogits = t.probs;
  for (int j = 0; j < B; ++j) dlogits(is_source[std::size_t(j)] ? 0 : 1, j) -= 1.0;

  Matrix dhidden = matmul_ta(p.w2, dlogits);
  // through the sigmoid
  for (int i = 0; i < dhidden.rows(); ++i) {
    double* drow = dhidden.row(i);
    const double* hrow = t.hidden.row(i);
    for (int j = 0; j < B; ++j) drow[j] *= hrow[j] * (1.0 - hrow[j]);
  }

  if (grads && c_param != 0.0) {
    Matrix dw2 = matmul_tb(dlogits, t.hidden);
    axpy_inplace(grads->w2, c_param, dw2);
    Matrix db2(2, 1);
    rowsum_acc(db2, dlogits);
    axpy_inplace(grads->b2, c_param, db2);
    Matrix dw1 = matmul_tb(dhidden, t.in);
    axpy_inplace(grads->w1, c_param, dw1);
    Matrix db1(dhidden.rows(), 1);
    rowsum_acc(db1, dhidden);
    axpy_inplace(grads->b1, c_param, db1);
  }
  if (d_in && c_input != 0.0) {
    Matrix dx = matmul_ta(p.w1, dhidden);
    axpy_inplace(*d_in, c_input, dx);
  }
}

}  // namespace tann
