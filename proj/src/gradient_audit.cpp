#include "tann/gradient_audit.hpp"

#include <cmath>
#include <cstdio>

#include "tann/error.hpp"
#include "tann/gradcheck.hpp"
#include "tann/rng.hpp"

namespace tann {

std::string AuditReport::to_table() const {
  std::string out = "tensor                        objective            coords  max_rel_err  status\n";
  char line[160];
  for (const auto& c : checks) {
    std::snprintf(line, sizeof line, "%-28s  %-18s  %6d  %11.3e  %s\n", c.tensor.c_str(),
                  c.objective.c_str(), c.coords, c.max_rel_err, c.pass ? "ok" : "FAIL");
    out += line;
  }
  std::snprintf(line, sizeof line, "overall max_rel_err %.3e -> %s\n", max_rel_err,
                pass ? "PASS" : "FAIL");
  out += line;
  return out;
}

AuditReport audit_gradients(ModelParams params, const std::vector<BatchItem>& batch,
                            const ElectrodeMontage& montage, const AuditConfig& cfg) {
  if (!(cfg.eps > 0.0)) throw ValidationError("audit: eps must be positive");
  const ForwardOptions opt = ForwardOptions::for_variant(cfg.variant);

  // Base point: capture the attention weights, then the applied gradients.
  const NetTape base = net_forward(batch, params, montage, opt);
  Matrix frozen_local;
  std::vector<double> frozen_global;
  ForwardOptions frozen = opt;
  if (base.local_ran) {
    frozen_local = base.local_att.w;
    frozen.frozen_local_w = &frozen_local;
  }
  if (base.global_ran) {
    frozen_global = base.global_att.w;
    frozen.frozen_global_w = &frozen_global;
  }

  ModelParams applied = ModelParams::zeros_like(params);
  net_backward(base, params, montage, cfg.alpha, cfg.beta, opt, applied);
  if (!cfg.corrupt_tensor.empty()) {
    Matrix* t = find_tensor(applied, cfg.corrupt_tensor);
    if (!t) throw ValidationError("audit: unknown tensor '" + cfg.corrupt_tensor + "'");
    for (int i = 0; i < t->rows(); ++i)
      for (int j = 0; j < t->cols(); ++j) (*t)(i, j) += cfg.corrupt_amount;
  }

  enum class Objective { Total, LocalNll, GlobalNll, Unused };
  auto classify = [&](const std::string& name, int& region) {
    region = -1;
    if (name.rfind("local_disc[", 0) == 0) {
      region = std::stoi(name.substr(11));
      return opt.local_on ? Objective::LocalNll : Objective::Unused;
    }
    if (name.rfind("global_disc.", 0) == 0)
      return opt.global_on ? Objective::GlobalNll : Objective::Unused;
    return Objective::Total;
  };

  auto eval_losses = [&]() {
    const NetTape t = net_forward(batch, params, montage, frozen);
    return net_losses(t, frozen);
  };

  AuditReport report;
  report.pass = true;
  Rng pick(cfg.seed);

  // Walk a stable snapshot of the registry; params itself is perturbed below.
  const auto names = tensor_names(params);
  for (const auto& name : names) {
    Matrix* tensor = find_tensor(params, name);
    Matrix* grad = find_tensor(applied, name);
    AuditCheck check;
    check.tensor = name;

    int region = -1;
    const Objective kind = classify(name, region);
    if (kind == Objective::Unused) {
      check.objective = "unused";
      check.coords = int(tensor->size());
      check.max_rel_err = 0.0;
      check.pass = true;
      for (int i = 0; i < grad->rows() && check.pass; ++i)
        for (int j = 0; j < grad->cols(); ++j)
          if ((*grad)(i, j) != 0.0) {
            check.max_rel_err = std::fabs((*grad)(i, j));
            check.pass = false;
            break;
          }
    } else {
      switch (kind) {
        case Objective::LocalNll: check.objective = "beta*local_nll[" + std::to_string(region) + "]"; break;
        case Objective::GlobalNll: check.objective = "beta*global_nll"; break;
        default: check.objective = "total(frozen-w)"; break;
      }
      auto objective = [&]() -> double {
        const LossBreakdown l = eval_losses();
        switch (kind) {
          case Objective::LocalNll: return cfg.beta * l.local_per_region[std::size_t(region)];
          case Objective::GlobalNll: return cfg.beta * l.global_disc;
          default: return l.total(cfg.alpha, cfg.beta);
        }
      };

      // coordinate list, optionally subsampled
      std::vector<int> coords(tensor->size());
      for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = int(i);
      if (cfg.max_coords_per_tensor > 0 && int(coords.size()) > cfg.max_coords_per_tensor) {
        pick.shuffle(coords);
        coords.resize(std::size_t(cfg.max_coords_per_tensor));
      }

      check.coords = int(coords.size());
      double* data = tensor->data();
      const double* gdata = grad->data();
      for (int ci : coords) {
        const double orig = data[ci];
        data[ci] = orig + cfg.eps;
        const double fp = objective();
        data[ci] = orig - cfg.eps;
        const double fm = objective();
        data[ci] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
          throw NumericError("audit: non-finite objective while probing '" + name + "'");
        const double fd = (fp - fm) / (2.0 * cfg.eps);
        check.max_rel_err = std::max(check.max_rel_err, rel_err(gdata[ci], fd));
      }
      check.pass = check.max_rel_err < cfg.tol;
    }

    report.max_rel_err = std::max(report.max_rel_err, check.max_rel_err);
    report.pass = report.pass && check.pass;
    report.checks.push_back(std::move(check));
  }
  return report;
}

AuditToy make_audit_toy(std::uint64_t seed) {
  AuditToy toy;
  std::vector<Electrode> es = {
      {"E1", 0, 0, 0}, {"E2", 0, 1, 0}, {"E3", 0, 2, 0}, {"E4", 1, 0, 1},
      {"E5", 1, 1, 1}, {"E6", 1, 2, 1}, {"E7", 2, 0, 2}, {"E8", 2, 1, 2},
  };
  toy.montage = make_montage(std::move(es), {"A", "B", "C"});

  toy.dims = ModelDims{};
  toy.dims.d = 2;
  toy.dims.n = 8;
  toy.dims.d_f = 4;
  toy.dims.d_fp = 4;
  toy.dims.n_prime = 2;
  toy.dims.classes = 3;
  toy.dims.local_hidden = 8;
  toy.dims.global_hidden = 8;

  Rng rng(mix_seed(seed, 0xda7a));
  toy.xs.reserve(6);
  for (int i = 0; i < 6; ++i) {
    Matrix x(toy.dims.d, toy.dims.n);
    fill_normal(x, 1.0, rng);
    toy.xs.push_back(std::move(x));
  }
  for (int i = 0; i < 6; ++i) {
    BatchItem item;
    item.x = &toy.xs[std::size_t(i)];
    item.is_source = i < 3;
    item.label = i < 3 ? i : -1;
    item.sample_id = "toy#" + std::to_string(i);
    toy.batch.push_back(item);
  }
  return toy;
}

}  // namespace tann
