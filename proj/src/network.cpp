#include "tann/network.hpp"

#include <cmath>

#include "tann/error.hpp"

namespace tann {

void ModelDims::validate(const ElectrodeMontage& m) const {
  if (d < 1 || n < 1 || d_f < 1 || d_fp < 1) throw ValidationError("dims: widths must be positive");
  if (n_prime < 1 || n_prime > n)
    throw ValidationError("dims: n' = " + std::to_string(n_prime) + " outside [1, n]");
  if (classes < 2) throw ValidationError("dims: need at least 2 classes");
  if (local_hidden < 1 || global_hidden < 1)
    throw ValidationError("dims: discriminator hidden widths must be positive");
  if (m.size() != n)
    throw ValidationError("dims: n = " + std::to_string(n) + " but montage has " +
                          std::to_string(m.size()) + " electrodes");
}

ModelParams ModelParams::init(const ModelDims& dims, const ElectrodeMontage& m,
                              std::uint64_t seed, bool general_position) {
  dims.validate(m);
  ModelParams p;
  p.dims = dims;
  for (const auto& sl : m.region_slices()) p.region_widths.push_back(sl.width);

  // One generator, consumed in registry order; (dims, seed) fully determine
  // every tensor, independent of the training variant.
  Rng rng(seed);
  p.extractor = ExtractorParams::init(dims.d, dims.d_f, dims.d_fp, rng);
  p.s = Matrix(dims.n, dims.n_prime);
  fill_glorot(p.s, dims.n, dims.n_prime, rng);
  for (int w : p.region_widths)
    p.local_disc.push_back(DiscParams::init(dims.d_fp * w, dims.local_hidden, rng,
                                            /*zero_output=*/!general_position));
  p.global_disc = DiscParams::init(dims.d_fp * dims.n_prime, dims.global_hidden, rng,
                                   /*zero_output=*/!general_position);
  p.classifier = ClassifierParams::init(dims.classes, dims.d_fp * dims.n_prime, rng);
  return p;
}

ModelParams ModelParams::allocate(const ModelDims& dims, std::vector<int> region_widths) {
  ModelParams p;
  p.dims = dims;
  p.region_widths = std::move(region_widths);
  p.extractor = ExtractorParams::zeros(dims.d, dims.d_f, dims.d_fp);
  p.s = Matrix(dims.n, dims.n_prime);
  for (int w : p.region_widths) {
    if (w < 1) throw ValidationError("model: region width must be positive");
    p.local_disc.push_back(DiscParams::zeros(dims.d_fp * w, dims.local_hidden));
  }
  p.global_disc = DiscParams::zeros(dims.d_fp * dims.n_prime, dims.global_hidden);
  p.classifier = ClassifierParams::zeros(dims.classes, dims.d_fp * dims.n_prime);
  return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  ModelParams p = other;
  for_each_tensor(p, [](const std::string&, Matrix& t) { t.set_all(0.0); });
  return p;
}

void for_each_tensor(ModelParams& p,
                     const std::function<void(const std::string&, Matrix&)>& fn) {
  static const char* scan_names[4] = {"h_fwd", "h_bwd", "v_fwd", "v_bwd"};
  for (int s = 0; s < 4; ++s) {
    const std::string base = std::string("extractor.") + scan_names[s];
    ScanParams& sp = p.extractor.scan(s);
    fn(base + ".U", sp.U);
    fn(base + ".V", sp.V);
    fn(base + ".b", sp.b);
  }
  fn("extractor.P", p.extractor.P);
  fn("extractor.Q", p.extractor.Q);
  fn("extractor.b_out", p.extractor.b_out);
  fn("global.S", p.s);
  for (std::size_t i = 0; i < p.local_disc.size(); ++i) {
    const std::string base = "local_disc[" + std::to_string(i) + "]";
    fn(base + ".w1", p.local_disc[i].w1);
    fn(base + ".b1", p.local_disc[i].b1);
    fn(base + ".w2", p.local_disc[i].w2);
    fn(base + ".b2", p.local_disc[i].b2);
  }
  fn("global_disc.w1", p.global_disc.w1);
  fn("global_disc.b1", p.global_disc.b1);
  fn("global_disc.w2", p.global_disc.w2);
  fn("global_disc.b2", p.global_disc.b2);
  fn("classifier.G", p.classifier.g);
  fn("classifier.b", p.classifier.b);
}

void for_each_tensor(const ModelParams& p,
                     const std::function<void(const std::string&, const Matrix&)>& fn) {
  for_each_tensor(const_cast<ModelParams&>(p),
                  [&fn](const std::string& name, Matrix& t) { fn(name, t); });
}

std::vector<std::string> tensor_names(const ModelParams& p) {
  std::vector<std::string> names;
  for_each_tensor(p, [&](const std::string& name, const Matrix&) { names.push_back(name); });
  return names;
}

Matrix* find_tensor(ModelParams& p, const std::string& name) {
  Matrix* found = nullptr;
  for_each_tensor(p, [&](const std::string& n, Matrix& t) {
    if (n == name) found = &t;
  });
  return found;
}

ForwardOptions ForwardOptions::for_variant(Variant v) {
  ForwardOptions o;
  o.local_on = variant_has_local(v);
  o.global_on = variant_has_global(v);
  return o;
}

double LossBreakdown::total(double alpha, double beta) const {
  return classifier + alpha * entropy - beta * (local_avg + global_disc);
}

static void check_model_montage(const ModelParams& p, const ElectrodeMontage& m) {
  if (m.size() != p.dims.n || m.num_regions() != int(p.region_widths.size()))
    throw ValidationError("model/montage mismatch: montage has " + std::to_string(m.size()) +
                          " electrodes, " + std::to_string(m.num_regions()) + " regions");
  const auto slices = m.region_slices();
  for (std::size_t i = 0; i < slices.size(); ++i)
    if (slices[i].width != p.region_widths[i])
      throw ValidationError("model/montage mismatch: region " + m.region_names[i] + " width " +
                            std::to_string(slices[i].width) + " vs model " +
                            std::to_string(p.region_widths[i]));
}

NetTape net_forward(const std::vector<BatchItem>& batch, const ModelParams& p,
                    const ElectrodeMontage& m, const ForwardOptions& opt) {
  if (batch.empty()) throw ValidationError("net_forward: empty batch");
  check_model_montage(p, m);

  NetTape tape;
  tape.batch = int(batch.size());
  std::vector<const Matrix*> xs;
  xs.reserve(batch.size());
  for (const auto& item : batch) {
    xs.push_back(item.x);
    tape.is_source.push_back(item.is_source ? 1 : 0);
    tape.labels.push_back(item.label);
  }

  tape.ext = extractor_forward(xs, p.extractor, m.scans);

  // Region-grouped column order: position k holds electrode reorder[k].
  const int n = p.dims.n, B = tape.batch;
  const auto reorder = m.reorder_map();
  tape.hhat = Matrix(tape.ext.h_all.rows(), B * n);
  for (int r = 0; r < tape.hhat.rows(); ++r) {
    const double* src = tape.ext.h_all.row(r);
    double* dst = tape.hhat.row(r);
    for (int b = 0; b < B; ++b)
      for (int k = 0; k < n; ++k)
        dst[std::size_t(b) * n + k] = src[std::size_t(b) * n + reorder[std::size_t(k)]];
  }

  const auto slices = m.region_slices();
  if (opt.local_on) {
    LocalAttendOptions lopt;
    lopt.force_w_zero = opt.force_local_w_zero;
    lopt.frozen_w = opt.frozen_local_w;
    tape.local_att = local_attend(tape.hhat, B, slices, p.local_disc, lopt);
    tape.local_ran = true;
  }

  const Matrix& scaled = tape.local_ran ? tape.local_att.hhat_prime : tape.hhat;
  tape.proj = global_project(scaled, B, p.s);

  if (opt.global_on) {
    GlobalAttendOptions gopt;
    gopt.frozen_w = opt.frozen_global_w;
    tape.global_att = global_attend(tape.proj.f, p.global_disc, gopt);
    tape.global_ran = true;
  }

  classifier_forward(p.classifier, tape.proj.f, tape.class_logits, tape.class_probs,
                     tape.class_logp);
  return tape;
}

LossBreakdown net_losses(const NetTape& tape, const ForwardOptions& opt) {
  LossBreakdown out;
  out.classifier = cross_entropy_sum(tape.class_logp, tape.class_probs, tape.labels,
                                     tape.is_source, nullptr);
  if (tape.global_ran) {
    // attentive entropy over every sample, weight from the global head
    for (int b = 0; b < tape.batch; ++b) {
      double e = 0.0;
      for (int c = 0; c < tape.class_probs.rows(); ++c) {
        const double pr = tape.class_probs(c, b);
        if (pr > 0.0) e -= pr * tape.class_logp(c, b);
      }
      out.entropy += tape.global_att.w[std::size_t(b)] * e;
    }
  }
  if (!opt.detach_discriminators) {
    if (tape.local_ran)
      out.local_avg = local_disc_loss(tape.local_att.tapes, tape.is_source, &out.local_per_region);
    if (tape.global_ran) out.global_disc = global_disc_loss(tape.global_att.tape, tape.is_source);
  }
  return out;
}

void net_backward(const NetTape& tape, const ModelParams& p, const ElectrodeMontage& m,
                  double alpha, double beta, const ForwardOptions& opt, ModelParams& grads) {
  const int B = tape.batch, n = p.dims.n, C = p.dims.classes;
  const auto slices = m.region_slices();
  const bool disc_losses = !opt.detach_discriminators;

  // -- classifier head: L_c plus the attentive entropy term ----------------
  Matrix dlogits(C, B);
  cross_entropy_sum(tape.class_logp, tape.class_probs, tape.labels, tape.is_source, &dlogits);
  if (tape.global_ran && alpha != 0.0) {
    // d(w * entropy)/d(logit_j) = -w * p_j * (logp_j + entropy); w constant.
    for (int b = 0; b < B; ++b) {
      double e = 0.0;
      for (int c = 0; c < C; ++c) {
        const double pr = tape.class_probs(c, b);
        if (pr > 0.0) e -= pr * tape.class_logp(c, b);
      }
      const double wb = tape.global_att.w[std::size_t(b)];
      for (int c = 0; c < C; ++c) {
        const double pr = tape.class_probs(c, b);
        if (pr > 0.0) dlogits(c, b) -= alpha * wb * pr * (tape.class_logp(c, b) + e);
      }
    }
  }
  matmul_tb_acc(grads.classifier.g, dlogits, tape.proj.f);
  rowsum_acc(grads.classifier.b, dlogits);
  Matrix d_f = matmul_ta(p.classifier.g, dlogits);

  // -- global discriminator: descent for the head, reversal into features --
  if (tape.global_ran && disc_losses && beta != 0.0)
    disc_backward_nll(p.global_disc, tape.global_att.tape, tape.is_source, beta,
                      &grads.global_disc, -beta, &d_f);

  // -- projection -----------------------------------------------------------
  const Matrix& scaled = tape.local_ran ? tape.local_att.hhat_prime : tape.hhat;
  Matrix d_scaled(scaled.rows(), scaled.cols());
  global_project_backward(tape.proj, scaled, B, p.s, d_f, d_scaled, &grads.s);

  // -- local attention: residual scaling, then per-region reversal ---------
  Matrix d_hhat;
  if (tape.local_ran) {
    d_hhat = Matrix(tape.hhat.rows(), tape.hhat.cols());
    local_attend_backward_features(tape.local_att, B, slices, d_scaled, d_hhat);
    if (disc_losses && beta != 0.0)
      local_disc_backward(tape.local_att, B, slices, p.local_disc, tape.is_source, beta,
                          &grads.local_disc, -beta / double(slices.size()), &d_hhat);
  } else {
    d_hhat = std::move(d_scaled);
  }

  // -- undo the region reorder, then extractor BPTT ------------------------
  const auto reorder = m.reorder_map();
  Matrix dh_all(d_hhat.rows(), d_hhat.cols());
  for (int r = 0; r < d_hhat.rows(); ++r) {
    const double* src = d_hhat.row(r);
    double* dst = dh_all.row(r);
    for (int b = 0; b < B; ++b)
      for (int k = 0; k < n; ++k)
        dst[std::size_t(b) * n + reorder[std::size_t(k)]] = src[std::size_t(b) * n + k];
  }
  extractor_backward(tape.ext, dh_all, p.extractor, grads.extractor);
}

}  // namespace tann
