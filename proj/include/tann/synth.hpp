#pragma once
#include <cstdint>

#include "tann/data.hpp"
#include "tann/montage.hpp"

namespace tann {

// Synthetic benchmark with known ground truth.
//
// A subset of regions ("planted") carries class structure that transfers
// across subjects: shared per-class means, plus a per-subject offset that a
// domain-adversarial model can align away. Every other region ("confound")
// carries class-looking structure that does not transfer: subjects share one
// pool of per-class means but subject s assigns class c to pool slot
// (c + s) mod classes. With balanced labels each subject's confound marginal
// is the same mixture, so confound regions expose no domain signal, while a
// classifier that leans on them contradicts itself across subjects.
struct SynthConfig {
  int subjects = 6;
  int trials_per_subject = 12;  // must be a multiple of classes (label = trial mod classes)
  int samples_per_trial = 100;
  int classes = 4;
  int d = 5;
  double class_sep = 1.0;       // scale of the per-class means
  double subject_shift = 1.0;   // scale of the per-subject offset in planted regions
  double transferable_fraction = 0.25;  // fraction of regions to plant
  double noise = 0.5;
  uint64_t seed = 1;

  void validate(const ElectrodeMontage& m) const;
};

// Deterministic in (cfg, montage). Draw order: stream mix_seed(seed, 0)
// picks the planted regions and the mean tables; stream mix_seed(seed, 101+s)
// draws subject s's offsets and sample noise.
Dataset generate_synthetic(const ElectrodeMontage& m, const SynthConfig& cfg);

// Model-free check of the construction: a softmax probe on raw features,
// trained on all subjects but the last, tested on the last. Run once on the
// planted regions' columns and once on the confound regions'.
struct ProbeReport {
  double planted_train_acc = 0, planted_test_acc = 0;
  double confound_train_acc = 0, confound_test_acc = 0;
  double transfer_gap() const { return planted_test_acc - confound_test_acc; }
};

ProbeReport probe_self_test(const Dataset& ds, const ElectrodeMontage& m);

}  // namespace tann
