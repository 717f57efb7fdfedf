#include "tann/classifier.hpp"

#include "tann/error.hpp"

namespace tann {

ClassifierParams ClassifierParams::init(int classes, int in_dim, Rng& rng) {
  if (classes < 2 || in_dim < 1) throw ValidationError("classifier: need >=2 classes, >=1 input");
  ClassifierParams p;
  p.g = Matrix(classes, in_dim);
  fill_glorot(p.g, in_dim, classes, rng);
  p.b = Matrix(classes, 1);
  return p;
}

ClassifierParams ClassifierParams::zeros(int classes, int in_dim) {
  ClassifierParams p;
  p.g = Matrix(classes, in_dim);
  p.b = Matrix(classes, 1);
  return p;
}

void classifier_forward(const ClassifierParams& p, const Matrix& f, Matrix& logits,
                        Matrix& probs, Matrix& logp) {
  if (f.rows() != p.in_dim())
    throw ShapeError("classifier: features " + shape_str(f) + " for weights " + shape_str(p.g));
  logits = matmul(p.g, f);
  add_col_broadcast_inplace(logits, p.b);
  softmax_columns(logits, probs, logp);
}

int argmax_label(const Matrix& probs, int col) {
  int best = 0;
  for (int c = 1; c < probs.rows(); ++c)
    if (probs(c, col) > probs(best, col)) best = c;
  return best;
}

PredictResult predict(const Matrix& htilde, const ClassifierParams& p) {
  Matrix f(htilde.rows() * htilde.cols(), 1);
  for (int c = 0; c < htilde.cols(); ++c)
    for (int r = 0; r < htilde.rows(); ++r) f(c * htilde.rows() + r, 0) = htilde(r, c);
  Matrix logits, probs, logp;
  classifier_forward(p, f, logits, probs, logp);
  PredictResult out;
  out.probs.resize(std::size_t(probs.rows()));
  for (int c = 0; c < probs.rows(); ++c) out.probs[std::size_t(c)] = probs(c, 0);
  out.label = argmax_label(probs, 0);
  return out;
}

double cross_entropy_sum(const Matrix& logp, const Matrix& probs, const std::vector<int>& labels,
                         const std::vector<std::uint8_t>& use, Matrix* dlogits) {
  const int C = logp.rows(), B = logp.cols();
  if (int(labels.size()) != B || int(use.size()) != B)
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch " +
                     std::to_string(B));
  double loss = 0.0;
  for (int j = 0; j < B; ++j) {
    if (!use[std::size_t(j)]) continue;
    const int y = labels[std::size_t(j)];
    if (y < 0 || y >= C)
      throw ValidationError("cross_entropy: label " + std::to_string(y) + " outside [0," +
                            std::to_string(C) + ") at batch column " + std::to_string(j));
    loss -= logp(y, j);
    if (dlogits) {
      for (int c = 0; c < C; ++c) (*dlogits)(c, j) += probs(c, j);
      (*dlogits)(y, j) -= 1.0;
    }
  }
  return loss;
}

double class_loss(const Matrix& logp, const Matrix& probs, const std::vector<int>& labels,
                  const std::vector<std::uint8_t>& is_source, Matrix* dlogits) {
  for (std::size_t j = 0; j < is_source.size(); ++j)
    if (!is_source[j])
      throw ValidationError("class_loss: target sample at batch column " + std::to_string(j) +
                            " (classification loss is source-only)");
  if (dlogits) *dlogits = Matrix(logp.rows(), logp.cols());
  return cross_entropy_sum(logp, probs, labels, is_source, dlogits);
}

}  // namespace tann
