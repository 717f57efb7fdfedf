#pragma once
#include <functional>
#include <string>
#include <vector>

#include "tann/data.hpp"
#include "tann/montage.hpp"
#include "tann/network.hpp"
#include "tann/trainer.hpp"

namespace tann {

struct ConfusionMatrix {
  int classes = 0;
  std::vector<long long> counts;  // truth-major, classes x classes

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int classes);
  long long& at(int truth, int pred);
  long long at(int truth, int pred) const;
  void add(int truth, int pred);
  long long total() const;
  double accuracy() const;  // 0 when empty
};

struct PredictionRecord {
  std::string sample_id;
  int truth = -1;
  int pred = -1;
};

struct EvalResult {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::vector<PredictionRecord> predictions;
  // Attention summaries over the evaluated samples; empty/zero when the
  // corresponding branch is off for the variant.
  std::vector<double> region_w_mean;  // per region, mean local w
  std::vector<double> global_w;       // per sample, aligned with predictions
  double global_w_mean = 0.0;
};

// Forward-only pass over the given samples (normally a fold's target side),
// scored against their true labels.
EvalResult evaluate_samples(const ModelParams& params, const ElectrodeMontage& m,
                            const Dataset& ds, const std::vector<int>& sample_idx,
                            const ForwardOptions& opt, int eval_batch = 256);

struct FoldOutcome {
  std::string name;
  std::string target_subject;
  TrainConfig cfg;  // fold-resolved config (seed already mixed)
  std::vector<EpochStats> history;
  EvalResult eval;
  ModelParams params;    // final model
  ModelParams momentum;  // final optimizer state (checkpointing)
};

struct ProtocolOutcome {
  std::vector<FoldOutcome> folds;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population

  void finalize();
};

// Trains and evaluates every fold. Fold k derives its own seed as
// mix_seed(cfg.seed, k) for both model init and batch shuffling, so the
// outcome is independent of --jobs and of fold execution order.
ProtocolOutcome run_protocol(const Dataset& ds, const ElectrodeMontage& m, const ModelDims& dims,
                             const std::vector<Fold>& folds, const TrainConfig& cfg, int jobs = 1,
                             const std::function<void(const std::string&)>& log = {});

// Regions sorted by descending score (ties: lower index first).
std::vector<int> rank_regions(const std::vector<double>& region_scores);

// Mean of the per-fold region maps; empty when no fold produced one.
std::vector<double> protocol_region_map(const ProtocolOutcome& out);

// ---- CSV artifacts ---------------------------------------------------

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history);
void write_predictions_csv(const std::string& path, const EvalResult& eval);
void write_confusion_csv(const std::string& path, const ConfusionMatrix& cm);
void write_attention_local_csv(const std::string& path, const ElectrodeMontage& m,
                               const std::vector<double>& region_w_mean);
void write_attention_global_csv(const std::string& path, const EvalResult& eval);
void write_folds_csv(const std::string& path, const ProtocolOutcome& out);
void write_region_map_csv(const std::string& path, const ElectrodeMontage& m,
                          const std::vector<double>& region_map);

}  // namespace tann
