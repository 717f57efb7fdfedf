#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tann/attention_global.hpp"
#include "tann/attention_local.hpp"
#include "tann/batch.hpp"
#include "tann/classifier.hpp"
#include "tann/extractor.hpp"
#include "tann/montage.hpp"

namespace tann {

struct ModelDims {
  int d = 5;            // features per electrode
  int n = 62;           // electrodes
  int d_f = 32;         // RNN state width
  int d_fp = 32;        // fused feature width
  int n_prime = 6;      // compressed virtual electrodes
  int classes = 3;
  int local_hidden = 64;
  int global_hidden = 64;

  void validate(const ElectrodeMontage& m) const;
};

// Every tensor of the model, in one place. All tensors exist for every
// variant so that a given (dims, seed) pair always yields the same
// initialization; ablation flags gate computation, never allocation.
struct ModelParams {
  ModelDims dims;
  std::vector<int> region_widths;  // block widths in reordered layout
  ExtractorParams extractor;
  std::vector<DiscParams> local_disc;
  Matrix s;  // n x n'
  DiscParams global_disc;
  ClassifierParams classifier;

  // Seeded init. Discriminator output layers start at zero (heads emit
  // exactly (0.5, 0.5)); general_position randomizes them too, which the
  // finite-difference audit needs so no gradient path is vacuously zero.
  static ModelParams init(const ModelDims& dims, const ElectrodeMontage& m, std::uint64_t seed,
                          bool general_position = false);
  // Zero tensors of the right shapes; no montage needed (checkpoint loading).
  static ModelParams allocate(const ModelDims& dims, std::vector<int> region_widths);
  static ModelParams zeros_like(const ModelParams& other);
};

// Fixed-order registry over all tensors; identical order for params,
// gradients, momentum and checkpoints.
void for_each_tensor(ModelParams& p,
                     const std::function<void(const std::string&, Matrix&)>& fn);
void for_each_tensor(const ModelParams& p,
                     const std::function<void(const std::string&, const Matrix&)>& fn);
std::vector<std::string> tensor_names(const ModelParams& p);
Matrix* find_tensor(ModelParams& p, const std::string& name);

struct ForwardOptions {
  bool local_on = true;
  bool global_on = true;
  // Test hooks: drop the discriminator losses from the objective (their
  // parameters then receive no gradient) and/or pin attention weights.
  bool detach_discriminators = false;
  bool force_local_w_zero = false;
  const Matrix* frozen_local_w = nullptr;          // N x B
  const std::vector<double>* frozen_global_w = nullptr;

  static ForwardOptions for_variant(Variant v);
};

struct NetTape {
  int batch = 0;
  std::vector<std::uint8_t> is_source;
  std::vector<int> labels;  // -1 for target items
  ExtractorTape ext;
  Matrix hhat;  // region-reordered features
  LocalAttendResult local_att;   // valid when local branch ran
  bool local_ran = false;
  GlobalProjection proj;
  GlobalAttendResult global_att;  // valid when global branch ran
  bool global_ran = false;
  Matrix class_logits, class_probs, class_logp;
};

struct LossBreakdown {
  double classifier = 0.0;   // L_c, source cross-entropy (sum)
  double entropy = 0.0;      // L_e, attentive entropy (sum)
  double local_avg = 0.0;    // mean over regions of per-region domain NLL
  double global_disc = 0.0;  // global domain NLL
  std::vector<double> local_per_region;

  // L = L_c + alpha*L_e - beta*(local_avg + global_disc)
  double total(double alpha, double beta) const;
};

NetTape net_forward(const std::vector<BatchItem>& batch, const ModelParams& p,
                    const ElectrodeMontage& m, const ForwardOptions& opt);

LossBreakdown net_losses(const NetTape& tape, const ForwardOptions& opt);

// Applied gradients: exactly what gradient descent subtracts (learning rate
// aside). Includes the alpha scaling of the entropy term, the beta-scaled
// descent for discriminator heads, and the sign-flipped beta-scaled
// adversarial terms for feature parameters. Attention weights are constants.
void net_backward(const NetTape& tape, const ModelParams& p, const ElectrodeMontage& m,
                  double alpha, double beta, const ForwardOptions& opt, ModelParams& grads);

}  // namespace tann
