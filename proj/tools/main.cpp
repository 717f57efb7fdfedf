// tann: train/evaluate the attention network on region-structured feature
// matrices, generate the synthetic benchmark, and run diagnostics.
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tann/checkpoint.hpp"
#include "tann/csvio.hpp"
#include "tann/error.hpp"
#include "tann/eval.hpp"
#include "tann/gradient_audit.hpp"
#include "tann/montage.hpp"
#include "tann/synth.hpp"

namespace {

using namespace tann;

namespace fs = std::filesystem;

ElectrodeMontage resolve_montage(const std::string& path) {
  return path.empty() ? default_montage() : load_montage(path);
}

std::vector<Fold> build_folds(const Dataset& ds, const std::string& protocol,
                              const std::string& rule) {
  if (protocol == "loso") {
    if (!rule.empty()) throw UsageError("--rule only applies to --protocol dependent");
    return split_loso(ds);
  }
  if (protocol == "dependent") {
    const DependentRule* r = find_rule(rule);
    if (!r) {
      std::string known;
      for (const auto& k : dependent_rules()) known += (known.empty() ? "" : ", ") + k.name;
      throw UsageError("unknown rule '" + rule + "' (expected one of: " + known + ")");
    }
    return split_subject_dependent(ds, *r);
  }
  throw UsageError("unknown protocol '" + protocol + "' (expected loso or dependent)");
}

const Fold& find_fold(const std::vector<Fold>& folds, const std::string& name) {
  for (const auto& f : folds)
    if (f.name == name) return f;
  throw ValidationError("no fold named '" + name + "' under this protocol");
}

void require_dataset_match(const Dataset& ds, const ModelDims& dims) {
  if (ds.d != dims.d || ds.n != dims.n || ds.classes != dims.classes)
    throw ValidationError("dataset '" + ds.name + "' is d=" + std::to_string(ds.d) +
                          " n=" + std::to_string(ds.n) + " classes=" +
                          std::to_string(ds.classes) + "; model expects d=" +
                          std::to_string(dims.d) + " n=" + std::to_string(dims.n) +
                          " classes=" + std::to_string(dims.classes));
}

// ---- shared option blocks ---------------------------------------------

struct TrainArgs {
  std::string data, out, montage;
  std::string protocol = "loso", rule;
  std::string variant = "full";
  int jobs = 1;
  ModelDims dims;  // d/n/classes overwritten from the dataset
  TrainConfig cfg;
};

void add_model_options(CLI::App* sub, TrainArgs& a) {
  sub->add_option("--d-f", a.dims.d_f, "RNN state width")->capture_default_str();
  sub->add_option("--d-fp", a.dims.d_fp, "fused feature width")->capture_default_str();
  sub->add_option("--n-prime", a.dims.n_prime, "compressed virtual electrodes")
      ->capture_default_str();
  sub->add_option("--local-hidden", a.dims.local_hidden, "region head hidden width")
      ->capture_default_str();
  sub->add_option("--global-hidden", a.dims.global_hidden, "global head hidden width")
      ->capture_default_str();
}

void add_train_options(CLI::App* sub, TrainArgs& a, bool with_variant) {
  sub->add_option("--data", a.data, "dataset manifest")->required();
  sub->add_option("--out", a.out, "output directory")->required();
  sub->add_option("--montage", a.montage, "montage file (default: bundled 62-channel layout)");
  sub->add_option("--protocol", a.protocol, "loso | dependent")->capture_default_str();
  sub->add_option("--rule", a.rule, "dependent-split rule: seed | seed-iv | mped");
  if (with_variant)
    sub->add_option("--variant", a.variant, "full | r1 | r2 | r3")->capture_default_str();
  sub->add_option("--jobs", a.jobs, "folds trained in parallel")->capture_default_str();
  add_model_options(sub, a);
  sub->add_option("--alpha", a.cfg.alpha, "attentive entropy scale")->capture_default_str();
  sub->add_option("--beta", a.cfg.beta, "adversarial scale")->capture_default_str();
  sub->add_option("--lr", a.cfg.learning_rate, "initial learning rate")->capture_default_str();
  sub->add_option("--momentum", a.cfg.momentum, "SGD momentum")->capture_default_str();
  sub->add_option("--lr-decay", a.cfg.lr_decay, "per-epoch learning-rate factor")
      ->capture_default_str();
  sub->add_option("--batch-size", a.cfg.batch_size, "combined batch size")->capture_default_str();
  sub->add_option("--epochs", a.cfg.epochs, "training epochs")->capture_default_str();
  sub->add_option("--seed", a.cfg.seed, "base seed (folds derive their own)")
      ->capture_default_str();
  sub->add_flag("!--no-clip", a.cfg.clip_enabled, "disable gradient-norm clipping");
  sub->add_option("--clip-norm", a.cfg.clip_norm, "global-norm clip threshold")
      ->capture_default_str();
  sub->add_flag("--detach-discriminators", a.cfg.detach_discriminators,
                "drop discriminator losses from the objective (diagnostic)");
  sub->add_flag("--force-local-w-zero", a.cfg.force_local_w_zero,
                "pin region attention weights to zero (diagnostic)");
  sub->set_config("--config", "", "read options from an INI file");
}

void write_resolved_config(CLI::App* sub, const std::string& out_dir) {
  ensure_dir(out_dir);
  write_file_atomic((fs::path(out_dir) / "config.ini").string(),
                    sub->config_to_str(true, true));
}

void write_fold_artifacts(const std::string& dir, const FoldOutcome& fo,
                          const ElectrodeMontage& m, const CheckpointMeta& meta) {
  ensure_dir(dir);
  write_history_csv((fs::path(dir) / "history.csv").string(), fo.history);
  write_predictions_csv((fs::path(dir) / "predictions.csv").string(), fo.eval);
  write_confusion_csv((fs::path(dir) / "confusion.csv").string(), fo.eval.confusion);
  if (!fo.eval.region_w_mean.empty())
    write_attention_local_csv((fs::path(dir) / "attention_local.csv").string(), m,
                              fo.eval.region_w_mean);
  if (!fo.eval.global_w.empty())
    write_attention_global_csv((fs::path(dir) / "attention_global.csv").string(), fo.eval);
  save_checkpoint((fs::path(dir) / "checkpoint.ckpt").string(), fo.params, fo.momentum, meta);
}

ProtocolOutcome train_once(const TrainArgs& a, const ElectrodeMontage& m, const Dataset& ds,
                           const TrainConfig& cfg) {
  ModelDims dims = a.dims;
  dims.d = ds.d;
  dims.n = ds.n;
  dims.classes = ds.classes;
  auto folds = build_folds(ds, a.protocol, a.rule);
  return run_protocol(ds, m, dims, folds, cfg, a.jobs,
                      [](const std::string& line) { std::printf("%s\n", line.c_str()); });
}

// ---- subcommands ---------------------------------------------------------

int cmd_train(CLI::App* sub, TrainArgs& a) {
  TrainConfig cfg = a.cfg;
  if (!parse_variant(a.variant, cfg.variant))
    throw UsageError("unknown variant '" + a.variant + "' (expected full, r1, r2, or r3)");
  cfg.validate();
  const ElectrodeMontage m = resolve_montage(a.montage);
  const Dataset ds = load_dataset(a.data);
  write_resolved_config(sub, a.out);

  ProtocolOutcome out = train_once(a, m, ds, cfg);

  write_folds_csv((fs::path(a.out) / "folds.csv").string(), out);
  const auto region_map = protocol_region_map(out);
  if (!region_map.empty())
    write_region_map_csv((fs::path(a.out) / "region_map.csv").string(), m, region_map);
  for (const auto& fo : out.folds) {
    CheckpointMeta meta;
    meta.cfg = fo.cfg;
    meta.epochs_done = (int)fo.history.size();
    meta.protocol = a.protocol;
    meta.rule = a.rule;
    meta.fold = fo.name;
    meta.dataset_name = ds.name;
    write_fold_artifacts((fs::path(a.out) / "folds" / fo.name).string(), fo, m, meta);
  }
  std::printf("%s: mean target accuracy %s (std %s) over %zu folds\n", variant_name(cfg.variant),
              fmt_double(out.mean_accuracy).c_str(), fmt_double(out.std_accuracy).c_str(),
              out.folds.size());
  return 0;
}

struct AblateArgs {
  TrainArgs base;
  std::string variants = "full,r1,r2,r3";
  int seeds = 1;
};

std::vector<Variant> parse_variant_list(const std::string& spec) {
  std::vector<Variant> out;
  std::string item;
  std::istringstream in(spec);
  while (std::getline(in, item, ',')) {
    Variant v;
    if (!parse_variant(item, v))
      throw UsageError("unknown variant '" + item + "' (expected full, r1, r2, or r3)");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--variants lists no variant");
  return out;
}

// One result row per (variant, seed): seeds count up from the base seed and
// every combination trains the full protocol.
int cmd_ablate(CLI::App* sub, AblateArgs& a) {
  const std::vector<Variant> variants = parse_variant_list(a.variants);
  if (a.seeds < 1) throw UsageError("--seeds must be at least 1");
  a.base.cfg.validate();
  const ElectrodeMontage m = resolve_montage(a.base.montage);
  const Dataset ds = load_dataset(a.base.data);
  write_resolved_config(sub, a.base.out);

  CsvBuilder csv({"variant", "seed", "mean_target_acc", "std_target_acc"});
  for (Variant v : variants) {
    for (int s = 0; s < a.seeds; ++s) {
      TrainConfig cfg = a.base.cfg;
      cfg.variant = v;
      cfg.seed = a.base.cfg.seed + (std::uint64_t)s;
      ProtocolOutcome out = train_once(a.base, m, ds, cfg);
      csv.cell(variant_name(v))
          .cell(std::to_string(cfg.seed))
          .cell(out.mean_accuracy)
          .cell(out.std_accuracy);
      csv.end_row();
      std::printf("%s seed %llu: mean target accuracy %s (std %s)\n", variant_name(v),
                  (unsigned long long)cfg.seed, fmt_double(out.mean_accuracy).c_str(),
                  fmt_double(out.std_accuracy).c_str());
    }
  }
  write_file_atomic((fs::path(a.base.out) / "ablate_results.csv").string(), csv.str());
  return 0;
}

struct EvalArgs {
  std::string checkpoint, data, montage, out, fold;
};

int cmd_eval(const EvalArgs& a, bool attention_map) {
  const Checkpoint ckp = load_checkpoint(a.checkpoint);
  const ElectrodeMontage m = resolve_montage(a.montage);
  const Dataset ds = load_dataset(a.data);
  require_dataset_match(ds, ckp.params.dims);
  if (attention_map && !variant_has_local(ckp.meta.cfg.variant))
    throw ValidationError(std::string("checkpoint variant '") +
                          variant_name(ckp.meta.cfg.variant) +
                          "' has no region attention branch");

  const std::string fold_name = a.fold.empty() ? ckp.meta.fold : a.fold;
  if (fold_name.empty())
    throw UsageError("checkpoint carries no fold name; pass --fold");
  const auto folds = build_folds(ds, ckp.meta.protocol.empty() ? "loso" : ckp.meta.protocol,
                                 ckp.meta.rule);
  const Fold& fold = find_fold(folds, fold_name);

  EvalResult ev = evaluate_samples(ckp.params, m, ds, fold.target_samples,
                                   ckp.meta.cfg.forward_options());
  std::printf("fold %s: %zu target samples, accuracy %s\n", fold.name.c_str(),
              ev.predictions.size(), fmt_double(ev.accuracy).c_str());
  if (attention_map) {
    const auto order = rank_regions(ev.region_w_mean);
    for (size_t i = 0; i < order.size(); ++i)
      std::printf("%2zu. %-28s %s\n", i + 1, m.region_names[(size_t)order[i]].c_str(),
                  fmt_double(ev.region_w_mean[(size_t)order[i]]).c_str());
  }
  if (!a.out.empty()) {
    ensure_dir(a.out);
    write_predictions_csv((fs::path(a.out) / "predictions.csv").string(), ev);
    write_confusion_csv((fs::path(a.out) / "confusion.csv").string(), ev.confusion);
    if (!ev.region_w_mean.empty()) {
      write_attention_local_csv((fs::path(a.out) / "attention_local.csv").string(), m,
                                ev.region_w_mean);
      write_region_map_csv((fs::path(a.out) / "region_map.csv").string(), m, ev.region_w_mean);
    }
    if (!ev.global_w.empty())
      write_attention_global_csv((fs::path(a.out) / "attention_global.csv").string(), ev);
  }
  return 0;
}

struct SynthArgs {
  std::string out, montage;
  SynthConfig cfg;
  bool probe = false;
};

int cmd_synth(const SynthArgs& a) {
  const ElectrodeMontage m = resolve_montage(a.montage);
  const Dataset ds = generate_synthetic(m, a.cfg);
  save_dataset(ds, a.out);
  std::printf("wrote %zu samples (%d subjects x %d trials x %d) to %s\n", ds.samples.size(),
              a.cfg.subjects, a.cfg.trials_per_subject, a.cfg.samples_per_trial, a.out.c_str());
  std::string planted;
  for (int r : ds.planted_regions)
    planted += (planted.empty() ? "" : ", ") + m.region_names[(size_t)r];
  std::printf("planted regions: %s\n", planted.c_str());
  if (a.probe) {
    const ProbeReport rep = probe_self_test(ds, m);
    std::printf("probe on planted columns:  train %s, held-out subject %s\n",
                fmt_double(rep.planted_train_acc).c_str(),
                fmt_double(rep.planted_test_acc).c_str());
    std::printf("probe on confound columns: train %s, held-out subject %s\n",
                fmt_double(rep.confound_train_acc).c_str(),
                fmt_double(rep.confound_test_acc).c_str());
  }
  return 0;
}

struct GradcheckArgs {
  double eps = 1e-5, tol = 1e-4, alpha = 0.1, beta = 0.1;
  int max_coords = 0;
  std::uint64_t seed = 7;
  std::string variant = "full";
};

int cmd_gradcheck(const GradcheckArgs& a) {
  AuditConfig cfg;
  cfg.eps = a.eps;
  cfg.tol = a.tol;
  cfg.alpha = a.alpha;
  cfg.beta = a.beta;
  cfg.max_coords_per_tensor = a.max_coords;
  cfg.seed = a.seed;
  if (!parse_variant(a.variant, cfg.variant))
    throw UsageError("unknown variant '" + a.variant + "' (expected full, r1, r2, or r3)");
  AuditToy toy = make_audit_toy(a.seed);
  ModelParams params = ModelParams::init(toy.dims, toy.montage, mix_seed(a.seed, 1),
                                         /*general_position=*/true);
  const AuditReport rep = audit_gradients(std::move(params), toy.batch, toy.montage, cfg);
  std::printf("%s", rep.to_table().c_str());
  std::printf("max relative error %s, tolerance %s: %s\n", fmt_double(rep.max_rel_err).c_str(),
              fmt_double(cfg.tol).c_str(), rep.pass ? "pass" : "FAIL");
  if (!rep.pass) throw NumericError("gradient audit failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attention network for region-structured feature matrices"};
  app.require_subcommand(1);

  SynthArgs sy;
  CLI::App* synth = app.add_subcommand("synth", "generate the synthetic benchmark dataset");
  synth->add_option("--out", sy.out, "output directory")->required();
  synth->add_option("--montage", sy.montage, "montage file (default: bundled layout)");
  synth->add_option("--subjects", sy.cfg.subjects)->capture_default_str();
  synth->add_option("--trials", sy.cfg.trials_per_subject)->capture_default_str();
  synth->add_option("--samples-per-trial", sy.cfg.samples_per_trial)->capture_default_str();
  synth->add_option("--classes", sy.cfg.classes)->capture_default_str();
  synth->add_option("--d", sy.cfg.d, "features per electrode")->capture_default_str();
  synth->add_option("--class-sep", sy.cfg.class_sep)->capture_default_str();
  synth->add_option("--subject-shift", sy.cfg.subject_shift)->capture_default_str();
  synth->add_option("--transferable-fraction", sy.cfg.transferable_fraction)
      ->capture_default_str();
  synth->add_option("--noise", sy.cfg.noise)->capture_default_str();
  synth->add_option("--seed", sy.cfg.seed)->capture_default_str();
  synth->add_flag("--probe", sy.probe, "run the model-free transfer probe and print it");

  TrainArgs tr;
  CLI::App* train = app.add_subcommand("train", "train one variant across protocol folds");
  add_train_options(train, tr, /*with_variant=*/true);

  AblateArgs ab;
  CLI::App* ablate = app.add_subcommand("ablate", "train a variant/seed grid and tabulate");
  add_train_options(ablate, ab.base, /*with_variant=*/false);
  ablate->add_option("--variants", ab.variants, "comma-separated variant list")
      ->capture_default_str();
  ablate->add_option("--seeds", ab.seeds, "seed count (base seed counts up)")
      ->capture_default_str();

  EvalArgs ev;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on its held-out fold");
  eval->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required();
  eval->add_option("--data", ev.data, "dataset manifest")->required();
  eval->add_option("--montage", ev.montage, "montage file (default: bundled layout)");
  eval->add_option("--fold", ev.fold, "fold name (default: the checkpoint's fold)");
  eval->add_option("--out", ev.out, "directory for prediction/attention CSVs");

  EvalArgs am;
  CLI::App* attmap = app.add_subcommand("attmap", "region transferability map of a checkpoint");
  attmap->add_option("--checkpoint", am.checkpoint, "checkpoint file")->required();
  attmap->add_option("--data", am.data, "dataset manifest")->required();
  attmap->add_option("--montage", am.montage, "montage file (default: bundled layout)");
  attmap->add_option("--fold", am.fold, "fold name (default: the checkpoint's fold)");
  attmap->add_option("--out", am.out, "directory for the region map CSVs");

  GradcheckArgs gc;
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference audit of the applied gradients");
  gradcheck->add_option("--eps", gc.eps, "finite-difference step")->capture_default_str();
  gradcheck->add_option("--tol", gc.tol, "max relative error")->capture_default_str();
  gradcheck->add_option("--alpha", gc.alpha)->capture_default_str();
  gradcheck->add_option("--beta", gc.beta)->capture_default_str();
  gradcheck->add_option("--variant", gc.variant, "full | r1 | r2 | r3")->capture_default_str();
  gradcheck->add_option("--max-coords", gc.max_coords, "coordinates per tensor (0 = all)")
      ->capture_default_str();
  gradcheck->add_option("--seed", gc.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(sy);
    if (train->parsed()) return cmd_train(train, tr);
    if (ablate->parsed()) return cmd_ablate(ablate, ab);
    if (eval->parsed()) return cmd_eval(ev, /*attention_map=*/false);
    if (attmap->parsed()) return cmd_eval(am, /*attention_map=*/true);
    if (gradcheck->parsed()) return cmd_gradcheck(gc);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
