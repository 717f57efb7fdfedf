#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "tann/network.hpp"

namespace tann {

struct TrainConfig {
  double alpha = 0.1;          // attentive entropy scale
  double beta = 0.1;           // adversarial scale (both discriminator branches)
  double learning_rate = 0.003;
  double momentum = 0.9;
  double lr_decay = 0.95;      // multiplicative, applied after every epoch
  int batch_size = 200;
  int epochs = 100;
  std::uint64_t seed = 0;
  Variant variant = Variant::Full;
  bool clip_enabled = true;    // global-norm clip over the whole applied gradient
  double clip_norm = 10.0;
  // Test hooks (structural-equivalence checks); see ForwardOptions.
  bool detach_discriminators = false;
  bool force_local_w_zero = false;

  void validate() const;
  ForwardOptions forward_options() const;
};

struct StepReport {
  LossBreakdown losses;
  double total = 0.0;
  double grad_norm = 0.0;  // pre-clip
  int source_count = 0;
  int source_correct = 0;
};

// One history row per epoch; loss columns are means over the epoch's steps.
struct EpochStats {
  int epoch = 0;
  double classifier_loss = 0.0;
  double entropy_loss = 0.0;
  double local_disc_loss = 0.0;
  double global_disc_loss = 0.0;
  double train_acc = 0.0;   // source argmax accuracy over training batches
  double domain_acc = 0.0;  // balanced global-head domain accuracy, epoch end
  double lr = 0.0;
};

// Momentum SGD over the applied gradients from net_backward:
//   v <- momentum*v + g;  theta <- theta - lr*v
// Epoch e shuffles with Rng(mix_seed(seed, e)), so a run resumed from epoch e
// is step-for-step identical to one that never stopped.
class Trainer {
 public:
  Trainer(ModelParams params, TrainConfig cfg, const ElectrodeMontage& montage);

  // Resume path: momentum buffers and epoch counter from a checkpoint.
  void restore(ModelParams params, ModelParams momentum, int epochs_done);

  StepReport step(const std::vector<BatchItem>& batch);
  std::vector<EpochStats> fit(const std::vector<BatchItem>& source,
                              const std::vector<BatchItem>& target);

  // Balanced accuracy of the global domain head over both partitions
  // (mean of the two per-domain accuracies; probability ties predict source).
  double domain_accuracy(const std::vector<BatchItem>& source,
                         const std::vector<BatchItem>& target);

  const ModelParams& params() const { return params_; }
  ModelParams& mutable_params() { return params_; }
  const ModelParams& momentum() const { return momentum_; }
  const TrainConfig& config() const { return cfg_; }
  double current_lr() const { return lr_; }
  int epochs_done() const { return epochs_done_; }

 private:
  ModelParams params_;
  ModelParams momentum_;
  TrainConfig cfg_;
  const ElectrodeMontage* montage_;
  double lr_ = 0.0;
  int epochs_done_ = 0;
  long long steps_done_ = 0;

  void check_finite_loss(double total, const NetTape& tape);
};

// Name of the first non-finite tensor, or empty when all are finite.
std::string first_nonfinite_tensor(const ModelParams& p);

}  // namespace tann
