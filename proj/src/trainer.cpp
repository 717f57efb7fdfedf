#include "tann/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "tann/error.hpp"
#include "tann/rng.hpp"

namespace tann {

void TrainConfig::validate() const {
  if (alpha < 0.0 || beta < 0.0) throw ValidationError("train: alpha/beta must be >= 0");
  if (!(learning_rate > 0.0)) throw ValidationError("train: learning rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ValidationError("train: momentum outside [0, 1)");
  if (!(lr_decay > 0.0) || lr_decay > 1.0) throw ValidationError("train: lr decay outside (0, 1]");
  if (batch_size < 2) throw ValidationError("train: batch size must be >= 2 (both domains)");
  if (epochs < 1) throw ValidationError("train: epochs must be >= 1");
  if (clip_enabled && !(clip_norm > 0.0)) throw ValidationError("train: clip norm must be positive");
}

ForwardOptions TrainConfig::forward_options() const {
  ForwardOptions o = ForwardOptions::for_variant(variant);
  o.detach_discriminators = detach_discriminators;
  o.force_local_w_zero = force_local_w_zero;
  return o;
}

Trainer::Trainer(ModelParams params, TrainConfig cfg, const ElectrodeMontage& montage)
    : params_(std::move(params)),
      momentum_(ModelParams::zeros_like(params_)),
      cfg_(cfg),
      montage_(&montage),
      lr_(cfg.learning_rate) {
  cfg_.validate();
}

void Trainer::restore(ModelParams params, ModelParams momentum, int epochs_done) {
  params_ = std::move(params);
  momentum_ = std::move(momentum);
  epochs_done_ = epochs_done;
  lr_ = cfg_.learning_rate;
  for (int e = 0; e < epochs_done; ++e) lr_ *= cfg_.lr_decay;
}

std::string first_nonfinite_tensor(const ModelParams& p) {
  std::string bad;
  for_each_tensor(p, [&](const std::string& name, const Matrix& t) {
    if (bad.empty() && !all_finite(t)) bad = name;
  });
  return bad;
}

void Trainer::check_finite_loss(double total, const NetTape& tape) {
  if (std::isfinite(total)) return;
  std::string culprit = first_nonfinite_tensor(params_);
  if (culprit.empty()) {
    if (!all_finite(tape.ext.h_all)) culprit = "extractor output";
    else if (!all_finite(tape.proj.f)) culprit = "projected features";
    else if (!all_finite(tape.class_logits)) culprit = "classifier logits";
    else culprit = "loss";
  }
  throw NumericError("training aborted at step " + std::to_string(steps_done_) +
                     ": non-finite value, first seen in '" + culprit + "'");
}

static std::vector<std::pair<std::string, Matrix*>> collect(ModelParams& p) {
  std::vector<std::pair<std::string, Matrix*>> out;
  for_each_tensor(p, [&](const std::string& name, Matrix& t) { out.emplace_back(name, &t); });
  return out;
}

StepReport Trainer::step(const std::vector<BatchItem>& batch) {
  const ForwardOptions opt = cfg_.forward_options();
  const NetTape tape = net_forward(batch, params_, *montage_, opt);

  StepReport rep;
  rep.losses = net_losses(tape, opt);
  rep.total = rep.losses.total(cfg_.alpha, cfg_.beta);
  check_finite_loss(rep.total, tape);

  for (int b = 0; b < tape.batch; ++b) {
    if (!tape.is_source[std::size_t(b)]) continue;
    ++rep.source_count;
    if (argmax_label(tape.class_probs, b) == tape.labels[std::size_t(b)]) ++rep.source_correct;
  }

  ModelParams grads = ModelParams::zeros_like(params_);
  net_backward(tape, params_, *montage_, cfg_.alpha, cfg_.beta, opt, grads);

  auto gts = collect(grads);
  double norm_sq = 0.0;
  for (auto& [name, g] : gts) norm_sq += sumsq(*g);
  rep.grad_norm = std::sqrt(norm_sq);
  if (!std::isfinite(rep.grad_norm))
    throw NumericError("training aborted at step " + std::to_string(steps_done_) +
                       ": non-finite gradient norm");
  if (cfg_.clip_enabled && rep.grad_norm > cfg_.clip_norm) {
    const double scale = cfg_.clip_norm / rep.grad_norm;
    for (auto& [name, g] : gts) scale_inplace(*g, scale);
  }

  auto pts = collect(params_);
  auto mts = collect(momentum_);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Matrix& v = *mts[i].second;
    scale_inplace(v, cfg_.momentum);
    add_inplace(v, *gts[i].second);
    axpy_inplace(*pts[i].second, -lr_, v);
  }
  ++steps_done_;
  return rep;
}

double Trainer::domain_accuracy(const std::vector<BatchItem>& source,
                                const std::vector<BatchItem>& target) {
  // Diagnostic pass with the global branch forced on: the head always exists,
  // and for variants that never train it this reports its frozen state.
  ForwardOptions opt = cfg_.forward_options();
  opt.global_on = true;
  long long corr_s = 0, corr_t = 0;
  auto run = [&](const std::vector<BatchItem>& items, long long& correct, bool src) {
    const int chunk = std::max(1, cfg_.batch_size);
    for (std::size_t at = 0; at < items.size(); at += std::size_t(chunk)) {
      const std::size_t end = std::min(items.size(), at + std::size_t(chunk));
      std::vector<BatchItem> view(items.begin() + long(at), items.begin() + long(end));
      const NetTape tape = net_forward(view, params_, *montage_, opt);
      for (int b = 0; b < tape.batch; ++b) {
        const bool said_source = tape.global_att.tape.probs(0, b) >= tape.global_att.tape.probs(1, b);
        if (said_source == src) ++correct;
      }
    }
  };
  run(source, corr_s, true);
  run(target, corr_t, false);
  if (source.empty() || target.empty())
    throw ValidationError("domain_accuracy: both partitions must be nonempty");
  return 0.5 * (double(corr_s) / double(source.size()) + double(corr_t) / double(target.size()));
}

std::vector<EpochStats> Trainer::fit(const std::vector<BatchItem>& source,
                                     const std::vector<BatchItem>& target) {
  if (source.empty() || target.empty())
    throw ValidationError("fit: source and target partitions must both be nonempty");
  const int S = int(source.size()), T = int(target.size());

  // Domain mix per batch proportional to partition sizes, at least one each.
  int n_src = int(std::llround(double(cfg_.batch_size) * double(S) / double(S + T)));
  n_src = std::clamp(n_src, 1, cfg_.batch_size - 1);
  const int n_tgt = cfg_.batch_size - n_src;

  std::vector<EpochStats> history;
  std::vector<int> src_order(static_cast<std::size_t>(S)), tgt_order(static_cast<std::size_t>(T));

  for (int epoch = epochs_done_; epoch < cfg_.epochs; ++epoch) {
    Rng rng(mix_seed(cfg_.seed, std::uint64_t(epoch)));
    for (int i = 0; i < S; ++i) src_order[std::size_t(i)] = i;
    for (int i = 0; i < T; ++i) tgt_order[std::size_t(i)] = i;
    rng.shuffle(src_order);
    rng.shuffle(tgt_order);

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr_;
    long long src_seen = 0, src_correct = 0;
    int steps = 0;
    std::size_t tpos = 0;

    for (int at = 0; at < S; at += n_src) {
      const int take = std::min(n_src, S - at);
      std::vector<BatchItem> batch;
      batch.reserve(std::size_t(take + n_tgt));
      for (int i = 0; i < take; ++i)
        batch.push_back(source[std::size_t(src_order[std::size_t(at + i)])]);
      for (int i = 0; i < n_tgt; ++i) {
        batch.push_back(target[std::size_t(tgt_order[tpos])]);
        tpos = (tpos + 1) % tgt_order.size();
      }
      const StepReport rep = step(batch);
      stats.classifier_loss += rep.losses.classifier;
      stats.entropy_loss += rep.losses.entropy;
      stats.local_disc_loss += rep.losses.local_avg;
      stats.global_disc_loss += rep.losses.global_disc;
      src_seen += rep.source_count;
      src_correct += rep.source_correct;
      ++steps;
    }

    stats.classifier_loss /= steps;
    stats.entropy_loss /= steps;
    stats.local_disc_loss /= steps;
    stats.global_disc_loss /= steps;
    stats.train_acc = src_seen ? double(src_correct) / double(src_seen) : 0.0;
    stats.domain_acc = domain_accuracy(source, target);
    history.push_back(stats);

    lr_ *= cfg_.lr_decay;
    ++epochs_done_;
  }
  return history;
}

}  // namespace tann
