#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "tann/batch.hpp"
#include "tann/matrix.hpp"

namespace tann {

// One d x n feature sample. The class label is private on purpose: training
// code receives labels only through train_items() (which blanks them for
// target samples), and evaluation reads them through eval_only_label(). Any
// other access is a visible API violation, not a silent leak.
class FeatureSample {
 public:
  FeatureSample(std::string subject, std::string trial, int index_in_trial, Matrix x, int label)
      : subject(std::move(subject)),
        trial(std::move(trial)),
        index_in_trial(index_in_trial),
        x(std::move(x)),
        label_(label) {}

  std::string subject;
  std::string trial;
  int index_in_trial = 0;
  Matrix x;

  std::string sample_id() const {
    return subject + "/" + trial + "#" + std::to_string(index_in_trial);
  }

 private:
  int label_ = -1;
  friend int eval_only_label(const FeatureSample& s);
  friend std::vector<BatchItem> train_items(const class Dataset&, const struct Fold&,
                                            bool source_side);
};

int eval_only_label(const FeatureSample& s);

struct TrialInfo {
  std::string id;
  int label = 0;
  int first_sample = 0;  // index into Dataset::samples
  int count = 0;
};

struct SubjectInfo {
  std::string id;
  std::string file;  // feature file, relative to the manifest
  std::vector<TrialInfo> trials;
};

class Dataset {
 public:
  std::string name;
  int d = 0, n = 0, classes = 0;
  std::vector<SubjectInfo> subjects;
  std::vector<FeatureSample> samples;
  std::vector<int> planted_regions;  // synthetic ground truth; empty otherwise

  int subject_index(const std::string& id) const;
  void validate() const;
};

// ---- container I/O --------------------------------------------------------
// Manifest: line-oriented text ('#' comments); feature files: TANNFT01
// binary, little-endian f64, per-trial sample counts in the header.

Dataset load_dataset(const std::string& manifest_path);
void save_dataset(const Dataset& ds, const std::string& dir,
                  const std::string& manifest_name = "manifest.txt");

// ---- protocol splits ------------------------------------------------------

struct Fold {
  std::string name;
  std::string target_subject;
  std::vector<int> source_samples;  // indices into Dataset::samples
  std::vector<int> target_samples;
};

struct DependentRule {
  std::string name;
  int train_trials = 0;
};

// First train_trials trials of every subject are source, the rest target;
// one fold per subject (train and test stay within-subject).
std::vector<Fold> split_subject_dependent(const Dataset& ds, const DependentRule& rule);

// Leave-one-subject-out: fold i holds out subject i entirely.
std::vector<Fold> split_loso(const Dataset& ds);

const std::vector<DependentRule>& dependent_rules();  // seed 9, seed-iv 16, mped 21
const DependentRule* find_rule(const std::string& name);

// Training views. Source items keep labels; target items carry label -1.
std::vector<BatchItem> train_items(const Dataset& ds, const Fold& fold, bool source_side);

}  // namespace tann
