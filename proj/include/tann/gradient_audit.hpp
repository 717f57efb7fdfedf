#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "tann/network.hpp"

namespace tann {

// Finite-difference audit of the applied training gradients. Each tensor is
// checked against the numerical derivative of the scalar objective that
// tensor actually descends:
//
//   feature/classifier tensors  ->  total loss (attention weights frozen at
//                                   the base point, matching stop-grad)
//   region head i               ->  beta * region-i domain NLL
//   global head                 ->  beta * global domain NLL
//
// Tensors a variant never trains must carry exactly zero gradient.

struct AuditConfig {
  double eps = 1e-5;
  double tol = 1e-4;
  double alpha = 0.1;
  double beta = 0.1;
  Variant variant = Variant::Full;
  int max_coords_per_tensor = 0;  // 0 = every coordinate
  std::uint64_t seed = 7;         // coordinate subsampling only
  // Fault injection for the audit's own tests: offset one applied gradient.
  std::string corrupt_tensor;
  double corrupt_amount = 1e-3;
};

struct AuditCheck {
  std::string tensor;
  std::string objective;
  double max_rel_err = 0.0;
  int coords = 0;
  bool pass = false;
};

struct AuditReport {
  std::vector<AuditCheck> checks;
  double max_rel_err = 0.0;
  bool pass = false;

  std::string to_table() const;
};

AuditReport audit_gradients(ModelParams params, const std::vector<BatchItem>& batch,
                            const ElectrodeMontage& montage, const AuditConfig& cfg);

// Desk-size audit configuration: 8 electrodes on a 3x3 grid in 3 regions,
// d=2, d_f=4, 3 classes, batch of 3 source + 3 target samples. Parameters
// must be drawn with general_position=true so no head sits at its neutral
// point. Holds storage for the sample matrices the batch points into.
struct AuditToy {
  ElectrodeMontage montage;
  ModelDims dims;
  std::vector<Matrix> xs;
  std::vector<BatchItem> batch;
};

AuditToy make_audit_toy(std::uint64_t seed);

}  // namespace tann
