#include "tann/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "tann/error.hpp"
#include "tann/rng.hpp"

namespace tann {

void SynthConfig::validate(const ElectrodeMontage& m) const {
  if (subjects < 2) throw ValidationError("synth: need at least 2 subjects");
  if (classes < 2) throw ValidationError("synth: need at least 2 classes");
  if (trials_per_subject < classes)
    throw ValidationError("synth: need at least one trial per class");
  if (trials_per_subject % classes != 0)
    throw ValidationError("synth: trials_per_subject (" + std::to_string(trials_per_subject) +
                          ") must be a multiple of classes (" + std::to_string(classes) +
                          ") so every subject emits the same label mix");
  if (samples_per_trial <= 0) throw ValidationError("synth: samples_per_trial must be positive");
  if (d <= 0) throw ValidationError("synth: d must be positive");
  if (class_sep <= 0 || subject_shift < 0 || noise < 0)
    throw ValidationError("synth: class_sep must be positive, subject_shift and noise >= 0");
  if (transferable_fraction <= 0 || transferable_fraction >= 1)
    throw ValidationError("synth: transferable_fraction must be in (0, 1)");
  const int regions = (int)m.region_names.size();
  if (regions < 2) throw ValidationError("synth: montage needs at least 2 regions");
}

namespace {

// mean tables indexed [region][slot][electrode-in-region][row]
using MeanTable = std::vector<std::vector<std::vector<std::vector<double>>>>;

std::string zero_pad(int v, int width) {
  std::string s = std::to_string(v);
  while ((int)s.size() < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

Dataset generate_synthetic(const ElectrodeMontage& m, const SynthConfig& cfg) {
  cfg.validate(m);
  const int n = (int)m.electrodes.size();
  const int regions = (int)m.region_names.size();
  int n_planted = (int)std::llround(cfg.transferable_fraction * regions);
  n_planted = std::max(1, std::min(regions - 1, n_planted));

  Rng structure(mix_seed(cfg.seed, 0));
  std::vector<int> order(regions);
  std::iota(order.begin(), order.end(), 0);
  structure.shuffle(order);
  std::vector<int> planted(order.begin(), order.begin() + n_planted);
  std::sort(planted.begin(), planted.end());
  std::set<int> planted_set(planted.begin(), planted.end());

  // Per-class means for planted regions, per-slot means for confound regions,
  // drawn in ascending region order from the structure stream.
  MeanTable mu(regions);
  for (int r = 0; r < regions; ++r) {
    mu[r].assign(cfg.classes, {});
    for (int c = 0; c < cfg.classes; ++c) {
      mu[r][c].assign(m.region_members[r].size(), std::vector<double>(cfg.d));
      for (auto& vec : mu[r][c])
        for (double& v : vec) v = cfg.class_sep * structure.normal();
    }
  }

  Dataset ds;
  ds.name = "synth";
  ds.d = cfg.d;
  ds.n = n;
  ds.classes = cfg.classes;
  ds.planted_regions = planted;
  ds.samples.reserve((size_t)cfg.subjects * cfg.trials_per_subject * cfg.samples_per_trial);

  // electrode -> (region, index within region)
  std::vector<int> e_region(n), e_slot(n);
  for (int r = 0; r < regions; ++r)
    for (int k = 0; k < (int)m.region_members[r].size(); ++k) {
      e_region[m.region_members[r][k]] = r;
      e_slot[m.region_members[r][k]] = k;
    }

  for (int s = 0; s < cfg.subjects; ++s) {
    Rng sub(mix_seed(cfg.seed, 101 + s));
    // subject offset for planted regions only
    MeanTable delta(regions);
    for (int r : planted) {
      delta[r].assign(1, {});
      delta[r][0].assign(m.region_members[r].size(), std::vector<double>(cfg.d));
      for (auto& vec : delta[r][0])
        for (double& v : vec) v = cfg.subject_shift * sub.normal();
    }

    SubjectInfo subj;
    subj.id = "subj" + zero_pad(s, 2);
    subj.file = subj.id + ".ft";
    for (int t = 0; t < cfg.trials_per_subject; ++t) {
      TrialInfo tr;
      tr.id = "t" + zero_pad(t, 2);
      tr.label = t % cfg.classes;
      tr.first_sample = (int)ds.samples.size();
      tr.count = cfg.samples_per_trial;
      for (int k = 0; k < cfg.samples_per_trial; ++k) {
        Matrix x(cfg.d, n);
        for (int e = 0; e < n; ++e) {
          const int r = e_region[e];
          const bool is_planted = planted_set.count(r) > 0;
          const int slot = is_planted ? tr.label : (tr.label + s) % cfg.classes;
          for (int i = 0; i < cfg.d; ++i) {
            double v = mu[r][slot][e_slot[e]][i];
            if (is_planted) v += delta[r][0][e_slot[e]][i];
            x(i, e) = v + cfg.noise * sub.normal();
          }
        }
        ds.samples.emplace_back(subj.id, tr.id, k, std::move(x), tr.label);
      }
      subj.trials.push_back(std::move(tr));
    }
    ds.subjects.push_back(std::move(subj));
  }
  ds.validate();
  return ds;
}

// ---- probe -----------------------------------------------------------

namespace {

struct ProbeSplit {
  Matrix train_x;  // F x B_train
  std::vector<int> train_y;
  Matrix test_x;
  std::vector<int> test_y;
};

// Flattens the given electrodes' columns of each sample; the last subject is
// the test split.
ProbeSplit build_split(const Dataset& ds, const std::vector<int>& electrodes) {
  const std::string held = ds.subjects.back().id;
  const int f = (int)electrodes.size() * ds.d;
  int n_train = 0, n_test = 0;
  for (const auto& s : ds.samples) (s.subject == held ? n_test : n_train)++;
  ProbeSplit sp{Matrix(f, n_train), {}, Matrix(f, n_test), {}};
  int bt = 0, bh = 0;
  for (const auto& s : ds.samples) {
    const bool test = s.subject == held;
    Matrix& dst = test ? sp.test_x : sp.train_x;
    const int col = test ? bh++ : bt++;
    int row = 0;
    for (int e : electrodes)
      for (int i = 0; i < ds.d; ++i) dst(row++, col) = s.x(i, e);
    (test ? sp.test_y : sp.train_y).push_back(eval_only_label(s));
  }
  return sp;
}

void standardize(Matrix& train, Matrix& test) {
  for (int r = 0; r < train.rows(); ++r) {
    double mean = 0;
    for (int c = 0; c < train.cols(); ++c) mean += train(r, c);
    mean /= train.cols();
    double var = 0;
    for (int c = 0; c < train.cols(); ++c) var += (train(r, c) - mean) * (train(r, c) - mean);
    const double sd = std::sqrt(var / train.cols()) + 1e-8;
    for (int c = 0; c < train.cols(); ++c) train(r, c) = (train(r, c) - mean) / sd;
    for (int c = 0; c < test.cols(); ++c) test(r, c) = (test(r, c) - mean) / sd;
  }
}

double probe_acc(const Matrix& w, const Matrix& b, const Matrix& x, const std::vector<int>& y) {
  Matrix logits = matmul(w, x);
  add_col_broadcast_inplace(logits, b);
  int hits = 0;
  for (int c = 0; c < x.cols(); ++c) {
    int best = 0;
    for (int k = 1; k < logits.rows(); ++k)
      if (logits(k, c) > logits(best, c)) best = k;
    if (best == y[(size_t)c]) ++hits;
  }
  return x.cols() ? (double)hits / x.cols() : 0.0;
}

// Full-batch softmax regression; deterministic (zero init, fixed schedule).
std::pair<double, double> run_probe(ProbeSplit sp, int classes) {
  standardize(sp.train_x, sp.test_x);
  const int b = sp.train_x.cols();
  Matrix w(classes, sp.train_x.rows()), bias(classes, 1);
  const double lr = 0.5;
  for (int it = 0; it < 300; ++it) {
    Matrix logits = matmul(w, sp.train_x);
    add_col_broadcast_inplace(logits, bias);
    Matrix probs(classes, b), logp(classes, b);
    softmax_columns(logits, probs, logp);
    for (int c = 0; c < b; ++c) probs(sp.train_y[(size_t)c], c) -= 1.0;
    Matrix gw = matmul_tb(probs, sp.train_x);
    scale_inplace(gw, 1.0 / b);
    Matrix gb(classes, 1);
    rowsum_acc(gb, probs);
    scale_inplace(gb, 1.0 / b);
    axpy_inplace(w, -lr, gw);
    axpy_inplace(bias, -lr, gb);
  }
  return {probe_acc(w, bias, sp.train_x, sp.train_y), probe_acc(w, bias, sp.test_x, sp.test_y)};
}

}  // namespace

ProbeReport probe_self_test(const Dataset& ds, const ElectrodeMontage& m) {
  if (ds.planted_regions.empty())
    throw ValidationError("probe: dataset has no planted-region ground truth");
  std::set<int> planted(ds.planted_regions.begin(), ds.planted_regions.end());
  std::vector<int> planted_e, confound_e;
  for (int r = 0; r < (int)m.region_names.size(); ++r)
    for (int e : m.region_members[r]) (planted.count(r) ? planted_e : confound_e).push_back(e);
  if (planted_e.empty() || confound_e.empty())
    throw ValidationError("probe: need both planted and confound electrodes");

  ProbeReport rep;
  std::tie(rep.planted_train_acc, rep.planted_test_acc) =
      run_probe(build_split(ds, planted_e), ds.classes);
  std::tie(rep.confound_train_acc, rep.confound_test_acc) =
      run_probe(build_split(ds, confound_e), ds.classes);
  return rep;
}

}  // namespace tann
