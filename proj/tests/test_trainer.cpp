#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "tann/error.hpp"
#include "tann/gradient_audit.hpp"
#include "tann/matrix.hpp"
#include "tann/trainer.hpp"

using namespace tann;

namespace {

struct Split {
  std::vector<BatchItem> source, target;
};

Split split_toy(const AuditToy& toy) {
  Split s;
  for (const auto& item : toy.batch) (item.is_source ? s.source : s.target).push_back(item);
  return s;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 3;
  cfg.learning_rate = 0.05;
  cfg.seed = 11;
  return cfg;
}

std::string first_tensor_diff(const ModelParams& a, const ModelParams& b) {
  std::string diff;
  for_each_tensor(a, [&](const std::string& name, const Matrix& ta) {
    if (!diff.empty()) return;
    const Matrix* tb = find_tensor(const_cast<ModelParams&>(b), name);
    if (!tb || !bitwise_equal(ta, *tb)) diff = name;
  });
  return diff;
}

double update_norm(const ModelParams& before, const ModelParams& after) {
  double sq = 0.0;
  for_each_tensor(before, [&](const std::string& name, const Matrix& tb) {
    const Matrix* ta = find_tensor(const_cast<ModelParams&>(after), name);
    sq += sumsq(sub(*ta, tb));
  });
  return std::sqrt(sq);
}

}  // namespace

TEST_CASE("config validation") {
  const AuditToy toy = make_audit_toy(1);
  const ModelParams p = ModelParams::init(toy.dims, toy.montage, 1);

  auto reject = [&](auto mutate) {
    TrainConfig cfg = small_config();
    mutate(cfg);
    CHECK_THROWS_AS(Trainer(p, cfg, toy.montage), ValidationError);
  };
  reject([](TrainConfig& c) { c.learning_rate = 0.0; });
  reject([](TrainConfig& c) { c.learning_rate = -1.0; });
  reject([](TrainConfig& c) { c.momentum = 1.0; });
  reject([](TrainConfig& c) { c.momentum = -0.1; });
  reject([](TrainConfig& c) { c.lr_decay = 0.0; });
  reject([](TrainConfig& c) { c.lr_decay = 1.5; });
  reject([](TrainConfig& c) { c.batch_size = 1; });
  reject([](TrainConfig& c) { c.epochs = 0; });
  reject([](TrainConfig& c) { c.clip_norm = 0.0; });
  reject([](TrainConfig& c) { c.alpha = -0.1; });
  reject([](TrainConfig& c) { c.beta = -0.1; });

  TrainConfig ok = small_config();
  ok.clip_enabled = false;
  ok.clip_norm = 0.0;  // ignored when clipping is off
  CHECK_NOTHROW(Trainer(p, ok, toy.montage));
}

TEST_CASE("fit requires both partitions") {
  const AuditToy toy = make_audit_toy(2);
  const Split s = split_toy(toy);
  Trainer t(ModelParams::init(toy.dims, toy.montage, 3), small_config(), toy.montage);
  CHECK_THROWS_AS(t.fit(s.source, {}), ValidationError);
  CHECK_THROWS_AS(t.fit({}, s.target), ValidationError);
  CHECK_THROWS_AS(t.domain_accuracy(s.source, {}), ValidationError);
}

TEST_CASE("training runs are deterministic in (params, config, seed)") {
  const AuditToy toy = make_audit_toy(5);
  const Split s = split_toy(toy);
  const ModelParams init = ModelParams::init(toy.dims, toy.montage, 21);
  const TrainConfig cfg = small_config();

  Trainer a(init, cfg, toy.montage);
  Trainer b(init, cfg, toy.montage);
  const auto ha = a.fit(s.source, s.target);
  const auto hb = b.fit(s.source, s.target);

  REQUIRE(ha.size() == hb.size());
  for (std::size_t e = 0; e < ha.size(); ++e) {
    CHECK(ha[e].classifier_loss == hb[e].classifier_loss);
    CHECK(ha[e].entropy_loss == hb[e].entropy_loss);
    CHECK(ha[e].local_disc_loss == hb[e].local_disc_loss);
    CHECK(ha[e].global_disc_loss == hb[e].global_disc_loss);
    CHECK(ha[e].train_acc == hb[e].train_acc);
    CHECK(ha[e].domain_acc == hb[e].domain_acc);
    CHECK(ha[e].lr == hb[e].lr);
  }
  CHECK(first_tensor_diff(a.params(), b.params()).empty());
  CHECK(first_tensor_diff(a.momentum(), b.momentum()).empty());

  // a different shuffle seed diverges
  TrainConfig other = cfg;
  other.seed = cfg.seed + 1;
  Trainer c(init, other, toy.montage);
  c.fit(s.source, s.target);
  CHECK_FALSE(first_tensor_diff(a.params(), c.params()).empty());
}

TEST_CASE("hooked full variant walks the plain variant's trajectory bitwise") {
  const AuditToy toy = make_audit_toy(7);
  const Split s = split_toy(toy);
  const ModelParams init = ModelParams::init(toy.dims, toy.montage, 33);

  TrainConfig plain = small_config();
  plain.variant = Variant::R1;
  plain.alpha = 0.0;
  plain.epochs = 5;

  TrainConfig hooked = plain;
  hooked.variant = Variant::Full;
  hooked.force_local_w_zero = true;
  hooked.detach_discriminators = true;

  Trainer a(init, plain, toy.montage);
  Trainer b(init, hooked, toy.montage);
  const auto ha = a.fit(s.source, s.target);
  const auto hb = b.fit(s.source, s.target);

  REQUIRE(ha.size() == hb.size());
  for (std::size_t e = 0; e < ha.size(); ++e) {
    CHECK(ha[e].classifier_loss == hb[e].classifier_loss);
    CHECK(ha[e].train_acc == hb[e].train_acc);
  }
  CHECK(first_tensor_diff(a.params(), b.params()).empty());
}

TEST_CASE("a non-finite parameter aborts with the tensor named") {
  const AuditToy toy = make_audit_toy(9);
  ModelParams p = ModelParams::init(toy.dims, toy.montage, 2);
  p.classifier.g(0, 0) = std::numeric_limits<double>::quiet_NaN();
  Trainer t(std::move(p), small_config(), toy.montage);
  CHECK_THROWS_WITH_AS(t.step(toy.batch), doctest::Contains("classifier.G"), NumericError);
}

TEST_CASE("a non-finite input is caught at the extractor boundary") {
  AuditToy toy = make_audit_toy(10);
  toy.xs[0](0, 0) = std::numeric_limits<double>::infinity();
  Trainer t(ModelParams::init(toy.dims, toy.montage, 2), small_config(), toy.montage);
  CHECK_THROWS_WITH_AS(t.step(toy.batch), doctest::Contains("extractor input"), NumericError);
}

TEST_CASE("global-norm clipping bounds the first parameter update") {
  const AuditToy toy = make_audit_toy(13);
  const ModelParams init = ModelParams::init(toy.dims, toy.montage, 8, true);

  TrainConfig cfg = small_config();
  cfg.clip_enabled = false;
  Trainer free(init, cfg, toy.montage);
  const StepReport rep_free = free.step(toy.batch);
  // from zero momentum the update is exactly lr * gradient
  CHECK(update_norm(init, free.params()) ==
        doctest::Approx(cfg.learning_rate * rep_free.grad_norm).epsilon(1e-12));

  TrainConfig clipped = cfg;
  clipped.clip_enabled = true;
  clipped.clip_norm = rep_free.grad_norm / 4.0;  // force the clip on
  Trainer bound(init, clipped, toy.montage);
  const StepReport rep_bound = bound.step(toy.batch);
  CHECK(rep_bound.grad_norm == rep_free.grad_norm);  // reported pre-clip
  CHECK(update_norm(init, bound.params()) ==
        doctest::Approx(cfg.learning_rate * clipped.clip_norm).epsilon(1e-12));

  // a generous threshold never fires
  TrainConfig loose = cfg;
  loose.clip_enabled = true;
  loose.clip_norm = rep_free.grad_norm * 2.0;
  Trainer untouched(init, loose, toy.montage);
  untouched.step(toy.batch);
  CHECK(first_tensor_diff(untouched.params(), free.params()).empty());
}

TEST_CASE("learning rate decays multiplicatively per epoch") {
  const AuditToy toy = make_audit_toy(15);
  const Split s = split_toy(toy);
  TrainConfig cfg = small_config();
  cfg.epochs = 4;
  cfg.lr_decay = 0.5;
  Trainer t(ModelParams::init(toy.dims, toy.montage, 5), cfg, toy.montage);
  const auto history = t.fit(s.source, s.target);
  REQUIRE(history.size() == 4);
  for (int e = 0; e < 4; ++e)
    CHECK(history[std::size_t(e)].lr ==
          doctest::Approx(cfg.learning_rate * std::pow(0.5, e)).epsilon(1e-14));
  CHECK(t.current_lr() == doctest::Approx(cfg.learning_rate * 0.0625).epsilon(1e-14));
}

TEST_CASE("resuming from a checkpoint state continues the exact trajectory") {
  const AuditToy toy = make_audit_toy(17);
  const Split s = split_toy(toy);
  const ModelParams init = ModelParams::init(toy.dims, toy.montage, 44);
  TrainConfig cfg = small_config();
  cfg.epochs = 4;

  Trainer straight(init, cfg, toy.montage);
  const auto h_straight = straight.fit(s.source, s.target);

  TrainConfig half = cfg;
  half.epochs = 2;
  Trainer first(init, half, toy.montage);
  const auto h_first = first.fit(s.source, s.target);
  CHECK(first.epochs_done() == 2);

  Trainer second(init, cfg, toy.montage);
  second.restore(first.params(), first.momentum(), first.epochs_done());
  const auto h_second = second.fit(s.source, s.target);
  CHECK(second.epochs_done() == 4);

  REQUIRE(h_first.size() + h_second.size() == h_straight.size());
  for (std::size_t e = 0; e < h_second.size(); ++e) {
    const EpochStats& want = h_straight[h_first.size() + e];
    CHECK(h_second[e].epoch == want.epoch);
    CHECK(h_second[e].classifier_loss == want.classifier_loss);
    CHECK(h_second[e].lr == want.lr);
    CHECK(h_second[e].domain_acc == want.domain_acc);
  }
  CHECK(first_tensor_diff(straight.params(), second.params()).empty());
  CHECK(first_tensor_diff(straight.momentum(), second.momentum()).empty());
}

TEST_CASE("freshly initialized heads score balanced domain accuracy exactly 0.5") {
  const AuditToy toy = make_audit_toy(19);
  const Split s = split_toy(toy);
  // default init: zero output layers, every sample scores (0.5, 0.5), ties
  // predict source, so accuracy is (1 + 0) / 2.
  Trainer t(ModelParams::init(toy.dims, toy.montage, 50), small_config(), toy.montage);
  CHECK(t.domain_accuracy(s.source, s.target) == 0.5);
}

TEST_CASE("step reports source accounting") {
  const AuditToy toy = make_audit_toy(21);
  Trainer t(ModelParams::init(toy.dims, toy.montage, 60), small_config(), toy.montage);
  const StepReport rep = t.step(toy.batch);
  CHECK(rep.source_count == 3);
  CHECK(rep.source_correct >= 0);
  CHECK(rep.source_correct <= rep.source_count);
  CHECK(rep.total == rep.losses.total(0.1, 0.1));
  CHECK(rep.grad_norm > 0.0);
}
