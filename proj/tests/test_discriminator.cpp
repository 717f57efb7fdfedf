#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "tann/discriminator.hpp"
#include "tann/error.hpp"
#include "tann/gradcheck.hpp"
#include "tann/matrix.hpp"
#include "tann/rng.hpp"

using namespace tann;

namespace {

Matrix random_input(int in_dim, int batch, Rng& rng) {
  Matrix x(in_dim, batch);
  fill_uniform(x, -1.0, 1.0, rng);
  return x;
}

}  // namespace

TEST_CASE("zero output layer gives exactly (0.5, 0.5) for any input") {
  Rng rng(5);
  const DiscParams p = DiscParams::init(3, 4, rng, /*zero_output=*/true);
  CHECK(p.in_dim() == 3);
  CHECK(p.hidden_dim() == 4);
  // hidden weights are live, output layer is zero
  CHECK(sumsq(p.w2) == 0.0);
  CHECK(sumsq(p.b2) == 0.0);
  CHECK(sumsq(p.w1) > 0.0);

  const DiscTape t = disc_forward(p, random_input(3, 7, rng));
  for (int j = 0; j < 7; ++j) {
    CHECK(t.probs(0, j) == 0.5);
    CHECK(t.probs(1, j) == 0.5);
  }
}

TEST_CASE("forward matches a per-sample recomputation") {
  Rng rng(11);
  DiscParams p = DiscParams::init(3, 4, rng, /*zero_output=*/false);
  const Matrix x = random_input(3, 5, rng);
  const DiscTape t = disc_forward(p, x);
  CHECK(t.in.cols() == 5);
  CHECK(t.hidden.rows() == 4);
  CHECK(t.probs.rows() == 2);

  for (int j = 0; j < 5; ++j) {
    std::vector<double> h(4), z(2);
    for (int i = 0; i < 4; ++i) {
      double a = p.b1(i, 0);
      for (int k = 0; k < 3; ++k) a += p.w1(i, k) * x(k, j);
      h[std::size_t(i)] = sigmoid_scalar(a);
      CHECK(t.hidden(i, j) == doctest::Approx(h[std::size_t(i)]).epsilon(1e-14));
    }
    for (int i = 0; i < 2; ++i) {
      double a = p.b2(i, 0);
      for (int k = 0; k < 4; ++k) a += p.w2(i, k) * h[std::size_t(k)];
      z[std::size_t(i)] = a;
    }
    const std::vector<double> q = softmax(z);
    CHECK(t.probs(0, j) == doctest::Approx(q[0]).epsilon(1e-14));
    CHECK(t.probs(1, j) == doctest::Approx(q[1]).epsilon(1e-14));
    CHECK(t.logp(0, j) == doctest::Approx(std::log(q[0])).epsilon(1e-12));
  }
}

TEST_CASE("nll at a neutral head is batch * ln 2") {
  Rng rng(2);
  const DiscParams p = DiscParams::init(4, 6, rng, /*zero_output=*/true);
  const DiscTape t = disc_forward(p, random_input(4, 9, rng));
  const std::vector<std::uint8_t> is_source = {1, 0, 1, 1, 0, 0, 1, 0, 1};
  CHECK(disc_nll(t, is_source) == doctest::Approx(9.0 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("nll matches the per-sample definition") {
  Rng rng(23);
  const DiscParams p = DiscParams::init(3, 5, rng, /*zero_output=*/false);
  const DiscTape t = disc_forward(p, random_input(3, 6, rng));
  const std::vector<std::uint8_t> is_source = {1, 1, 0, 1, 0, 0};
  double want = 0.0;
  for (int j = 0; j < 6; ++j) want -= t.logp(is_source[std::size_t(j)] ? 0 : 1, j);
  CHECK(disc_nll(t, is_source) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("both domains must be present") {
  const std::vector<std::uint8_t> all_src(4, 1), all_tgt(4, 0), empty;
  CHECK_THROWS_AS(require_both_domains(all_src, "head"), ValidationError);
  CHECK_THROWS_AS(require_both_domains(all_tgt, "head"), ValidationError);
  CHECK_THROWS_AS(require_both_domains(empty, "head"), ValidationError);
  const std::vector<std::uint8_t> mixed = {1, 0};
  CHECK_NOTHROW(require_both_domains(mixed, "head"));

  Rng rng(3);
  const DiscParams p = DiscParams::init(3, 4, rng, false);
  const DiscTape t = disc_forward(p, random_input(3, 4, rng));
  CHECK_THROWS_AS(disc_nll(t, all_src), ValidationError);
  CHECK_THROWS_AS(disc_nll(t, std::vector<std::uint8_t>(3, 1)), ShapeError);  // size mismatch
}

TEST_CASE("backward against central differences, with consumer scaling") {
  Rng rng(41);
  DiscParams p = DiscParams::init(3, 4, rng, /*zero_output=*/false);
  const Matrix x = random_input(3, 6, rng);
  const std::vector<std::uint8_t> is_source = {1, 0, 0, 1, 1, 0};

  const auto nll_of_params = [&](const DiscParams& q) {
    return disc_nll(disc_forward(q, x), is_source);
  };
  const auto nll_of_input = [&](const Matrix& cand) {
    return disc_nll(disc_forward(p, cand), is_source);
  };

  const DiscTape t = disc_forward(p, x);

  const double c_param = 0.7, c_input = -0.3;
  DiscParams grads = DiscParams::zeros(3, 4);
  Matrix d_in(3, 6);
  disc_backward_nll(p, t, is_source, c_param, &grads, c_input, &d_in);

  std::vector<std::pair<Matrix*, const Matrix*>> pairs = {
      {&p.w1, &grads.w1}, {&p.b1, &grads.b1}, {&p.w2, &grads.w2}, {&p.b2, &grads.b2}};
  for (auto [theta, g] : pairs) {
    const Matrix fd = finite_diff_grad(
        [&](const Matrix& cand) {
          const Matrix saved = *theta;
          *theta = cand;
          const double v = nll_of_params(p);
          *theta = saved;
          return v;
        },
        *theta, 1e-6);
    Matrix scaled = fd;
    scale_inplace(scaled, c_param);
    CHECK(max_rel_err(*g, scaled) < 1e-6);
  }

  Matrix fdx = finite_diff_grad(nll_of_input, x, 1e-6);
  scale_inplace(fdx, c_input);
  CHECK(max_rel_err(d_in, fdx) < 1e-6);

  // gradients accumulate; d_in accumulates too
  DiscParams grads2 = DiscParams::zeros(3, 4);
  Matrix d_in2(3, 6);
  disc_backward_nll(p, t, is_source, c_param, &grads2, c_input, &d_in2);
  disc_backward_nll(p, t, is_source, c_param, &grads2, c_input, &d_in2);
  CHECK(max_abs_diff(grads2.w1, add(grads.w1, grads.w1)) < 1e-15);
  CHECK(max_abs_diff(d_in2, add(d_in, d_in)) < 1e-15);

  // either consumer can be skipped
  Matrix d_in3(3, 6);
  disc_backward_nll(p, t, is_source, 0.0, nullptr, c_input, &d_in3);
  CHECK(max_abs_diff(d_in3, d_in) == 0.0);
  DiscParams grads3 = DiscParams::zeros(3, 4);
  disc_backward_nll(p, t, is_source, c_param, &grads3, 0.0, nullptr);
  CHECK(max_abs_diff(grads3.w2, grads.w2) == 0.0);
}

TEST_CASE("init is deterministic in the seed") {
  Rng a(9), b(9), c(10);
  const DiscParams pa = DiscParams::init(5, 3, a, false);
  const DiscParams pb = DiscParams::init(5, 3, b, false);
  const DiscParams pc = DiscParams::init(5, 3, c, false);
  CHECK(bitwise_equal(pa.w1, pb.w1));
  CHECK(bitwise_equal(pa.w2, pb.w2));
  CHECK_FALSE(bitwise_equal(pa.w1, pc.w1));
}
