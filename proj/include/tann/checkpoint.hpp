#pragma once
#include <string>

#include "tann/network.hpp"
#include "tann/trainer.hpp"

namespace tann {

// Versioned binary model container ("TANNCKP1", little-endian throughout).
// Holds dimensions, the resolved training configuration, run provenance,
// and every named tensor plus its momentum buffer, so training can resume
// step-for-step and evaluation can rebuild the exact model.
struct CheckpointMeta {
  TrainConfig cfg;
  int epochs_done = 0;
  std::string protocol;      // "loso" / "dependent" / ""
  std::string rule;          // dependent-split rule name, if any
  std::string fold;          // target subject of the trained fold
  std::string dataset_name;
};

struct Checkpoint {
  ModelParams params;
  ModelParams momentum;
  CheckpointMeta meta;
};

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const ModelParams& momentum, const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tann
