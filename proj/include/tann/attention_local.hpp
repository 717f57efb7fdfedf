#pragma once
#include <cstdint>
#include <vector>

#include "tann/discriminator.hpp"
#include "tann/matrix.hpp"
#include "tann/montage.hpp"

namespace tann {

// Per-region transferability attention. Each region's discriminator scores
// its feature block; low-entropy (confident) domain predictions mean the
// region is hard to transfer, so attention is reversed:
//
//   w = 1 - H2(d_source, d_target),   block' = (1 + w) * block
//
// Weights are treated as constants by every downstream gradient (stop-grad).

// Base-2 entropy of a 2-way distribution, clamped to [0,1]. 0*log0 = 0.
// Errors: negative probability, or d_s + d_t != 1 beyond 1e-9.
double entropy2(double d_s, double d_t);

struct LocalAttendOptions {
  bool force_w_zero = false;      // structural-equivalence hook
  const Matrix* frozen_w = nullptr;  // N x B override, for finite-difference audits
};

struct LocalAttendResult {
  Matrix hhat_prime;            // d_fp x (B*n), scaled blocks
  Matrix w;                     // N x B, weights actually applied
  Matrix entropy;               // N x B
  std::vector<DiscTape> tapes;  // per region
};

// hhat is the region-reordered feature block layout (col = sample*n + pos).
// Discriminator inputs are the column-major flattenings of each sample's
// block (electrode-major: all d_fp values of one electrode are contiguous).
LocalAttendResult local_attend(const Matrix& hhat, int batch,
                               const std::vector<RegionSlice>& slices,
                               const std::vector<DiscParams>& discs,
                               const LocalAttendOptions& opt = {});

// Mean over regions of the per-region domain NLL (sum over batch, natural
// log). per_region, if given, receives the N unaveraged terms.
double local_disc_loss(const std::vector<DiscTape>& tapes,
                       const std::vector<std::uint8_t>& is_source,
                       std::vector<double>* per_region = nullptr);

// Feature-path backward of the scaling: d_hhat += (1 + w) .* d_hhat_prime.
void local_attend_backward_features(const LocalAttendResult& att, int batch,
                                    const std::vector<RegionSlice>& slices,
                                    const Matrix& d_hhat_prime, Matrix& d_hhat);

// Adversarial path: region i's NLL backward, scaled c_param into the head's
// gradients and c_input into d_hhat at that region's block columns.
void local_disc_backward(const LocalAttendResult& att, int batch,
                         const std::vector<RegionSlice>& slices,
                         const std::vector<DiscParams>& discs,
                         const std::vector<std::uint8_t>& is_source, double c_param,
                         std::vector<DiscParams>* grads, double c_input, Matrix* d_hhat);

// Flatten helpers for one region block (shared with the audit code).
Matrix flatten_region_block(const Matrix& hhat, int batch, int n, const RegionSlice& slice);
void unflatten_region_block_add(Matrix& d_hhat, const Matrix& d_flat, int batch, int n,
                                const RegionSlice& slice);

}  // namespace tann
