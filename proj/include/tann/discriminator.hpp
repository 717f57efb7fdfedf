#pragma once
#include <cstdint>
#include <vector>

#include "tann/matrix.hpp"
#include "tann/rng.hpp"

namespace tann {

// Two-layer domain head shared by the per-region and global discriminators:
// sigmoid hidden layer, 2-way softmax output (row 0 = source, row 1 = target).
struct DiscParams {
  Matrix w1;  // hidden x in
  Matrix b1;  // hidden x 1
  Matrix w2;  // 2 x hidden
  Matrix b2;  // 2 x 1

  // zero_output starts the head at exactly (0.5, 0.5): attention weights then
  // begin at their neutral value and a detached head provably never moves.
  static DiscParams init(int in_dim, int hidden, Rng& rng, bool zero_output);
  static DiscParams zeros(int in_dim, int hidden);
  int in_dim() const { return w1.cols(); }
  int hidden_dim() const { return w1.rows(); }
};

struct DiscTape {
  Matrix in;      // in_dim x B
  Matrix hidden;  // hidden x B
  Matrix probs;   // 2 x B
  Matrix logp;    // 2 x B
};

DiscTape disc_forward(const DiscParams& p, Matrix in);

// Domain NLL summed over the batch: -sum_src log p(src) - sum_tgt log p(tgt).
// Requires both domains present.
double disc_nll(const DiscTape& t, const std::vector<std::uint8_t>& is_source);

// Backward from the NLL above. The same chain feeds two consumers at
// different scales: parameter gradients (c_param, descent for the head) and
// the reversed input gradient (c_input, adversarial signal for the features).
void disc_backward_nll(const DiscParams& p, const DiscTape& t,
                       const std::vector<std::uint8_t>& is_source, double c_param,
                       DiscParams* grads, double c_input, Matrix* d_in);

void require_both_domains(const std::vector<std::uint8_t>& is_source, const char* what);

}  // namespace tann
