#pragma once
#include <cstdint>
#include <vector>

#include "tann/matrix.hpp"
#include "tann/rng.hpp"

namespace tann {

// Linear softmax head over the flattened compressed features:
//   o = G vec(Htilde) + b,  p = softmax(o),  label = argmax (lowest index wins).
struct ClassifierParams {
  Matrix g;  // C x (d_fp*n')
  Matrix b;  // C x 1

  static ClassifierParams init(int classes, int in_dim, Rng& rng);
  static ClassifierParams zeros(int classes, int in_dim);
  int classes() const { return g.rows(); }
  int in_dim() const { return g.cols(); }
};

// Batched head over pre-flattened features f ((d_fp*n') x B).
void classifier_forward(const ClassifierParams& p, const Matrix& f, Matrix& logits,
                        Matrix& probs, Matrix& logp);

struct PredictResult {
  std::vector<double> probs;
  int label = 0;
};

// Single sample; htilde (d_fp x n') is flattened column-major internally.
PredictResult predict(const Matrix& htilde, const ClassifierParams& p);

int argmax_label(const Matrix& probs, int col);

// Cross-entropy summed over the columns selected by `use`; accumulates
// (probs - onehot) into dlogits on those columns when given.
double cross_entropy_sum(const Matrix& logp, const Matrix& probs, const std::vector<int>& labels,
                         const std::vector<std::uint8_t>& use, Matrix* dlogits);

// Source-batch loss: every item must be a labeled source sample.
double class_loss(const Matrix& logp, const Matrix& probs, const std::vector<int>& labels,
                  const std::vector<std::uint8_t>& is_source, Matrix* dlogits = nullptr);

}  // namespace tann
