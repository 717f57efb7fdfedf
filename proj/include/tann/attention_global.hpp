#pragma once
#include <cstdint>
#include <vector>

#include "tann/discriminator.hpp"
#include "tann/matrix.hpp"

namespace tann {

// Global transferability attention. A learned projection S compresses the
// scaled feature sheet to n' virtual electrodes; one discriminator scores the
// compressed sample, and its prediction entropy (base 2) sets a sample-level
// weight for the attentive entropy loss:
//
//   Htilde = Hhat' S,   w = 1 + H2(d),   L_e = sum_k w_k * entropy(p(.|X_k))
//
// As with the local branch, w is a constant to every gradient (stop-grad).

struct GlobalProjection {
  std::vector<Matrix> htilde;  // per sample, d_fp x n'
  Matrix f;                    // (d_fp*n') x B, column-major flattened Htilde
};

// hhat_prime uses the block layout col = sample*n + position.
GlobalProjection global_project(const Matrix& hhat_prime, int batch, const Matrix& S);

// Backward through the projection: d_hhat_prime += unflatten(d_f) * S^T and
// dS += sum_b Hhat'_b^T * dHtilde_b.
void global_project_backward(const GlobalProjection& proj, const Matrix& hhat_prime, int batch,
                             const Matrix& S, const Matrix& d_f, Matrix& d_hhat_prime,
                             Matrix* dS);

struct GlobalAttendResult {
  DiscTape tape;
  std::vector<double> w;        // per sample, in [1, 2]
  std::vector<double> entropy;  // per sample, in [0, 1]
};

struct GlobalAttendOptions {
  const std::vector<double>* frozen_w = nullptr;  // finite-difference audits
};

GlobalAttendResult global_attend(const Matrix& f, const DiscParams& disc,
                                 const GlobalAttendOptions& opt = {});

// Domain NLL of the global head (sum over batch, natural log).
double global_disc_loss(const DiscTape& tape, const std::vector<std::uint8_t>& is_source);

// Attentive entropy loss over class predictions (columns sum to 1; natural
// log). Returns the scalar and, if dpreds is given, dL/dpreds with the weight
// treated as constant. At p = 0 the p*log(p) term and its gradient are 0.
double attentive_entropy_loss(const Matrix& preds, const std::vector<double>& w,
                              Matrix* dpreds = nullptr);

}  // namespace tann
