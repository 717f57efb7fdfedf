#include "tann/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "tann/csvio.hpp"
#include "tann/error.hpp"
#include "tann/rng.hpp"

namespace tann {

ConfusionMatrix::ConfusionMatrix(int classes_) : classes(classes_) {
  if (classes_ < 0) throw ValidationError("confusion matrix: negative class count");
  counts.assign((size_t)classes_ * classes_, 0);
}

long long& ConfusionMatrix::at(int truth, int pred) {
  if (truth < 0 || truth >= classes || pred < 0 || pred >= classes)
    throw ValidationError("confusion matrix: label (" + std::to_string(truth) + ", " +
                          std::to_string(pred) + ") outside [0, " + std::to_string(classes) + ")");
  return counts[(size_t)truth * classes + pred];
}

long long ConfusionMatrix::at(int truth, int pred) const {
  return const_cast<ConfusionMatrix*>(this)->at(truth, pred);
}

void ConfusionMatrix::add(int truth, int pred) { ++at(truth, pred); }

long long ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0LL);
}

double ConfusionMatrix::accuracy() const {
  const long long n = total();
  if (n == 0) return 0.0;
  long long hit = 0;
  for (int c = 0; c < classes; ++c) hit += counts[(size_t)c * classes + c];
  return (double)hit / (double)n;
}

EvalResult evaluate_samples(const ModelParams& params, const ElectrodeMontage& m,
                            const Dataset& ds, const std::vector<int>& sample_idx,
                            const ForwardOptions& opt, int eval_batch) {
  if (eval_batch <= 0) throw ValidationError("evaluate: eval_batch must be positive");
  if (sample_idx.empty()) throw ValidationError("evaluate: no samples");
  EvalResult out;
  out.confusion = ConfusionMatrix(ds.classes);
  const int regions = (int)params.region_widths.size();
  std::vector<double> w_sum(regions, 0.0);
  double gw_sum = 0.0;

  for (size_t at = 0; at < sample_idx.size(); at += (size_t)eval_batch) {
    const size_t end = std::min(at + (size_t)eval_batch, sample_idx.size());
    std::vector<BatchItem> batch;
    batch.reserve(end - at);
    for (size_t k = at; k < end; ++k) {
      const FeatureSample& s = ds.samples.at(sample_idx[k]);
      BatchItem it;
      it.x = &s.x;
      it.label = -1;
      it.is_source = false;
      it.sample_id = s.sample_id();
      batch.push_back(std::move(it));
    }
    NetTape tape = net_forward(batch, params, m, opt);
    for (int b = 0; b < (int)batch.size(); ++b) {
      const FeatureSample& s = ds.samples.at(sample_idx[at + b]);
      PredictionRecord rec;
      rec.sample_id = s.sample_id();
      rec.truth = eval_only_label(s);
      rec.pred = argmax_label(tape.class_probs, b);
      out.confusion.add(rec.truth, rec.pred);
      out.predictions.push_back(std::move(rec));
      if (tape.local_ran)
        for (int r = 0; r < regions; ++r) w_sum[r] += tape.local_att.w(r, b);
      if (tape.global_ran) {
        out.global_w.push_back(tape.global_att.w[(size_t)b]);
        gw_sum += tape.global_att.w[(size_t)b];
      }
    }
    if (tape.local_ran && out.region_w_mean.empty()) out.region_w_mean.resize(regions);
  }
  const double denom = (double)out.predictions.size();
  if (!out.region_w_mean.empty())
    for (int r = 0; r < regions; ++r) out.region_w_mean[(size_t)r] = w_sum[(size_t)r] / denom;
  if (!out.global_w.empty()) out.global_w_mean = gw_sum / denom;
  out.accuracy = out.confusion.accuracy();
  return out;
}

void ProtocolOutcome::finalize() {
  if (folds.empty()) {
    mean_accuracy = std_accuracy = 0.0;
    return;
  }
  double sum = 0.0;
  for (const auto& f : folds) sum += f.eval.accuracy;
  mean_accuracy = sum / folds.size();
  double ss = 0.0;
  for (const auto& f : folds) {
    const double d = f.eval.accuracy - mean_accuracy;
    ss += d * d;
  }
  std_accuracy = std::sqrt(ss / folds.size());
}

ProtocolOutcome run_protocol(const Dataset& ds, const ElectrodeMontage& m, const ModelDims& dims,
                             const std::vector<Fold>& folds, const TrainConfig& cfg, int jobs,
                             const std::function<void(const std::string&)>& log) {
  cfg.validate();
  dims.validate(m);
  if (folds.empty()) throw ValidationError("protocol: no folds");
  if (jobs < 1) throw ValidationError("protocol: jobs must be at least 1");

  ProtocolOutcome out;
  out.folds.resize(folds.size());
  std::vector<std::exception_ptr> errors(folds.size());
  std::mutex log_mu;
  std::atomic<size_t> next{0};

  auto run_fold = [&](size_t fi) {
    const Fold& fold = folds[fi];
    TrainConfig fc = cfg;
    fc.seed = mix_seed(cfg.seed, (uint64_t)fi);
    Trainer trainer(ModelParams::init(dims, m, fc.seed), fc, m);
    FoldOutcome& fo = out.folds[fi];
    fo.name = fold.name;
    fo.target_subject = fold.target_subject;
    fo.cfg = fc;
    fo.history = trainer.fit(train_items(ds, fold, true), train_items(ds, fold, false));
    fo.eval = evaluate_samples(trainer.params(), m, ds, fold.target_samples,
                               fc.forward_options());
    fo.params = trainer.params();
    fo.momentum = trainer.momentum();
    if (log) {
      std::lock_guard<std::mutex> lk(log_mu);
      log("fold " + fold.name + ": target acc " + fmt_double(fo.eval.accuracy) +
          (fo.history.empty() ? "" : ", domain acc " + fmt_double(fo.history.back().domain_acc)));
    }
  };

  auto worker = [&]() {
    for (;;) {
      const size_t fi = next.fetch_add(1);
      if (fi >= folds.size()) return;
      try {
        run_fold(fi);
      } catch (...) {
        errors[fi] = std::current_exception();
      }
    }
  };

  const int n_threads = std::min<int>(jobs, (int)folds.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  out.finalize();
  return out;
}

std::vector<int> rank_regions(const std::vector<double>& region_scores) {
  std::vector<int> order(region_scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return region_scores[(size_t)a] > region_scores[(size_t)b];
  });
  return order;
}

std::vector<double> protocol_region_map(const ProtocolOutcome& out) {
  std::vector<double> acc;
  int used = 0;
  for (const auto& f : out.folds) {
    if (f.eval.region_w_mean.empty()) continue;
    if (acc.empty()) acc.assign(f.eval.region_w_mean.size(), 0.0);
    if (acc.size() != f.eval.region_w_mean.size())
      throw ValidationError("region map: folds disagree on region count");
    for (size_t r = 0; r < acc.size(); ++r) acc[r] += f.eval.region_w_mean[r];
    ++used;
  }
  if (used == 0) return {};
  for (double& v : acc) v /= used;
  return acc;
}

// ---- CSV artifacts ---------------------------------------------------

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
  CsvBuilder csv({"epoch", "classifier_loss", "entropy_loss", "local_disc_loss",
                  "global_disc_loss", "train_acc", "domain_acc", "lr"});
  for (const auto& e : history) {
    csv.cell(e.epoch)
        .cell(e.classifier_loss)
        .cell(e.entropy_loss)
        .cell(e.local_disc_loss)
        .cell(e.global_disc_loss)
        .cell(e.train_acc)
        .cell(e.domain_acc)
        .cell(e.lr);
    csv.end_row();
  }
  write_file_atomic(path, csv.str());
}

void write_predictions_csv(const std::string& path, const EvalResult& eval) {
  CsvBuilder csv({"sample_id", "truth", "pred"});
  for (const auto& p : eval.predictions) {
    csv.cell(p.sample_id).cell(p.truth).cell(p.pred);
    csv.end_row();
  }
  write_file_atomic(path, csv.str());
}

void write_confusion_csv(const std::string& path, const ConfusionMatrix& cm) {
  std::vector<std::string> header = {"truth"};
  for (int c = 0; c < cm.classes; ++c) header.push_back("pred_" + std::to_string(c));
  CsvBuilder csv(header);
  for (int t = 0; t < cm.classes; ++t) {
    csv.cell(t);
    for (int p = 0; p < cm.classes; ++p) csv.cell(cm.at(t, p));
    csv.end_row();
  }
  write_file_atomic(path, csv.str());
}

void write_attention_local_csv(const std::string& path, const ElectrodeMontage& m,
                               const std::vector<double>& region_w_mean) {
  if ((size_t)m.num_regions() != region_w_mean.size())
    throw ValidationError("attention csv: got " + std::to_string(region_w_mean.size()) +
                          " region scores for " + std::to_string(m.num_regions()) + " regions");
  CsvBuilder csv({"region", "mean_target_w"});
  for (int r = 0; r < m.num_regions(); ++r) {
    csv.cell(m.region_names[(size_t)r]).cell(region_w_mean[(size_t)r]);
    csv.end_row();
  }
  write_file_atomic(path, csv.str());
}

void write_attention_global_csv(const std::string& path, const EvalResult& eval) {
  if (eval.global_w.size() != eval.predictions.size())
    throw ValidationError("attention csv: global weights missing for some samples");
  CsvBuilder csv({"sample_id", "global_w"});
  for (size_t i = 0; i < eval.predictions.size(); ++i) {
    csv.cell(eval.predictions[i].sample_id).cell(eval.global_w[i]);
    csv.end_row();
  }
  write_file_atomic(path, csv.str());
}

void write_folds_csv(const std::string& path, const ProtocolOutcome& out) {
  CsvBuilder csv({"fold", "target_subject", "variant", "seed", "target_acc", "final_domain_acc",
                  "epochs"});
  for (const auto& f : out.folds) {
    csv.cell(f.name)
        .cell(f.target_subject)
        .cell(variant_name(f.cfg.variant))
        .cell(std::to_string(f.cfg.seed))
        .cell(f.eval.accuracy)
        .cell(f.history.empty() ? 0.0 : f.history.back().domain_acc)
        .cell((long long)f.history.size());
    csv.end_row();
  }
  csv.cell("mean").cell("").cell("").cell("").cell(out.mean_accuracy).cell("").cell("");
  csv.end_row();
  csv.cell("std").cell("").cell("").cell("").cell(out.std_accuracy).cell("").cell("");
  csv.end_row();
  write_file_atomic(path, csv.str());
}

void write_region_map_csv(const std::string& path, const ElectrodeMontage& m,
                          const std::vector<double>& region_map) {
  if ((size_t)m.num_regions() != region_map.size())
    throw ValidationError("region map csv: got " + std::to_string(region_map.size()) +
                          " scores for " + std::to_string(m.num_regions()) + " regions");
  const auto order = rank_regions(region_map);
  CsvBuilder csv({"rank", "region", "mean_target_w"});
  for (size_t i = 0; i < order.size(); ++i) {
    csv.cell((long long)(i + 1)).cell(m.region_names[(size_t)order[i]]).cell(
        region_map[(size_t)order[i]]);
    csv.end_row();
  }
  write_file_atomic(path, csv.str());
}

}  // namespace tann
