#pragma once
#include <array>
#include <vector>

#include "tann/matrix.hpp"
#include "tann/montage.hpp"
#include "tann/rng.hpp"

namespace tann {

// Spatial feature extractor: four sigmoid RNN scans over the electrode grid
// (horizontal and vertical serpentine paths, each walked in both directions),
// directional states summed per axis, then a linear fusion of the two axes.
//
//   s_i = sigmoid(U x_i + V s_pred(i) + b)          per scan
//   h_i = P (sh_fwd_i + sh_bwd_i) + Q (sv_fwd_i + sv_bwd_i) + b_out
//
// All batched buffers use the column layout col = sample*n + electrode.

struct ScanParams {
  Matrix U;  // d_f x d
  Matrix V;  // d_f x d_f
  Matrix b;  // d_f x 1
};

struct ExtractorParams {
  ScanParams h_fwd, h_bwd, v_fwd, v_bwd;
  Matrix P;      // d_fp x d_f
  Matrix Q;      // d_fp x d_f
  Matrix b_out;  // d_fp x 1

  // Glorot-uniform weights, zero biases.
  static ExtractorParams init(int d, int d_f, int d_fp, Rng& rng);
  static ExtractorParams zeros(int d, int d_f, int d_fp);

  ScanParams& scan(int s);
  const ScanParams& scan(int s) const;
};

struct ExtractorTape {
  int batch = 0, n = 0;
  Matrix x_all;                                  // d x (B*n)
  std::array<std::vector<Matrix>, 4> hidden;     // per scan, n steps of d_f x B
  std::array<std::vector<int>, 4> seq;           // electrode visit order per scan
  Matrix sh_sum, sv_sum;                         // d_f x (B*n)
  Matrix h_all;                                  // d_fp x (B*n)
};

// xs are d x n samples sharing one shape; scan order comes from the montage.
ExtractorTape extractor_forward(const std::vector<const Matrix*>& xs, const ExtractorParams& p,
                                const PredecessorMap& scans);

// Accumulates parameter gradients for upstream dL/dh_all; optionally returns
// dL/dx_all. BPTT runs each scan in reverse visit order.
void extractor_backward(const ExtractorTape& tape, const Matrix& dh_all,
                        const ExtractorParams& p, ExtractorParams& grads,
                        Matrix* dx_all = nullptr);

}  // namespace tann
