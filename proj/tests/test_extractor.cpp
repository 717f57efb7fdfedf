#include <array>
#include <vector>

#include "doctest.h"
#include "tann/extractor.hpp"
#include "tann/gradcheck.hpp"
#include "tann/matrix.hpp"
#include "tann/montage.hpp"
#include "tann/rng.hpp"

using namespace tann;

namespace {

ElectrodeMontage grid2x2() {
  return make_montage({{"A", 0, 0, 0}, {"B", 0, 1, 1}, {"C", 1, 0, 0}, {"D", 1, 1, 1}},
                      {"left", "right"});
}

// Independent re-derivation, one sample and one electrode at a time: run each
// scan as an explicit state recurrence, sum the two directions per axis, then
// fuse. Shares no batching machinery with the implementation.
Matrix oracle_features(const Matrix& x, const ExtractorParams& p, const PredecessorMap& scans) {
  const int n = x.cols();
  const int d_f = p.h_fwd.U.rows();
  const int d_fp = p.P.rows();

  std::array<std::vector<int>, 4> seq;
  seq[0] = scans.horizontal;
  seq[1] = std::vector<int>(scans.horizontal.rbegin(), scans.horizontal.rend());
  seq[2] = scans.vertical;
  seq[3] = std::vector<int>(scans.vertical.rbegin(), scans.vertical.rend());

  Matrix sh(d_f, n), sv(d_f, n);
  for (int s = 0; s < 4; ++s) {
    const ScanParams& sp = p.scan(s);
    std::vector<double> state(std::size_t(d_f), 0.0);
    for (int k = 0; k < n; ++k) {
      const int e = seq[std::size_t(s)][std::size_t(k)];
      std::vector<double> a(std::size_t(d_f), 0.0);
      for (int i = 0; i < d_f; ++i) {
        double acc = sp.b(i, 0);
        for (int j = 0; j < x.rows(); ++j) acc += sp.U(i, j) * x(j, e);
        for (int j = 0; j < d_f; ++j) acc += sp.V(i, j) * state[std::size_t(j)];
        a[std::size_t(i)] = acc;
      }
      for (int i = 0; i < d_f; ++i) {
        state[std::size_t(i)] = sigmoid_scalar(a[std::size_t(i)]);
        ((s < 2) ? sh : sv)(i, e) += state[std::size_t(i)];
      }
    }
  }

  Matrix h(d_fp, n);
  for (int e = 0; e < n; ++e)
    for (int i = 0; i < d_fp; ++i) {
      double acc = p.b_out(i, 0);
      for (int j = 0; j < d_f; ++j)
        acc += p.P(i, j) * sh(j, e) + p.Q(i, j) * sv(j, e);
      h(i, e) = acc;
    }
  return h;
}

}  // namespace

TEST_CASE("forward pass matches the unrolled oracle") {
  const ElectrodeMontage m = grid2x2();
  Rng rng(17);
  const ExtractorParams p = ExtractorParams::init(2, 3, 2, rng);
  std::vector<Matrix> xs;
  for (int b = 0; b < 2; ++b) {
    Matrix x(2, 4);
    fill_uniform(x, -1.0, 1.0, rng);
    xs.push_back(std::move(x));
  }
  const ExtractorTape tape = extractor_forward({&xs[0], &xs[1]}, p, m.scans);
  CHECK(tape.h_all.rows() == 2);
  CHECK(tape.h_all.cols() == 8);

  for (int b = 0; b < 2; ++b) {
    const Matrix ref = oracle_features(xs[std::size_t(b)], p, m.scans);
    for (int e = 0; e < 4; ++e)
      for (int i = 0; i < 2; ++i)
        CHECK(tape.h_all(i, b * 4 + e) == doctest::Approx(ref(i, e)).epsilon(1e-12));
  }
}

TEST_CASE("with V = 0 the features are independent of the scan paths") {
  // Same electrodes and regions, different grid placements (hence different
  // serpentine orders). Without the recurrent term each electrode only sees
  // itself, so the outputs must agree exactly.
  const ElectrodeMontage ma = grid2x2();
  const ElectrodeMontage mb = make_montage(
      {{"A", 0, 0, 0}, {"B", 0, 1, 1}, {"C", 0, 2, 0}, {"D", 0, 3, 1}}, {"left", "right"});
  REQUIRE(ma.scans.horizontal != mb.scans.horizontal);

  Rng rng(3);
  ExtractorParams p = ExtractorParams::init(2, 3, 2, rng);
  for (int s = 0; s < 4; ++s) p.scan(s).V.set_all(0.0);

  Matrix x(2, 4);
  fill_uniform(x, -2.0, 2.0, rng);
  const ExtractorTape ta = extractor_forward({&x}, p, ma.scans);
  const ExtractorTape tb = extractor_forward({&x}, p, mb.scans);
  CHECK(max_abs_diff(ta.h_all, tb.h_all) == 0.0);
}

TEST_CASE("backward pass against central differences") {
  const ElectrodeMontage m = grid2x2();
  Rng rng(29);
  ExtractorParams p = ExtractorParams::init(2, 3, 2, rng);
  std::vector<Matrix> xs;
  for (int b = 0; b < 2; ++b) {
    Matrix x(2, 4);
    fill_uniform(x, -1.0, 1.0, rng);
    xs.push_back(std::move(x));
  }
  Matrix c(2, 8);  // fixed random upstream gradient
  fill_uniform(c, -1.0, 1.0, rng);

  const auto objective = [&](const ExtractorParams& q) {
    const ExtractorTape t = extractor_forward({&xs[0], &xs[1]}, q, m.scans);
    double L = 0.0;
    for (int i = 0; i < t.h_all.rows(); ++i)
      for (int j = 0; j < t.h_all.cols(); ++j) L += c(i, j) * t.h_all(i, j);
    return L;
  };

  const ExtractorTape tape = extractor_forward({&xs[0], &xs[1]}, p, m.scans);
  ExtractorParams grads = ExtractorParams::zeros(2, 3, 2);
  Matrix dx;
  extractor_backward(tape, c, p, grads, &dx);

  // every parameter tensor
  std::vector<std::pair<Matrix*, Matrix*>> pairs;
  for (int s = 0; s < 4; ++s) {
    pairs.push_back({&p.scan(s).U, &grads.scan(s).U});
    pairs.push_back({&p.scan(s).V, &grads.scan(s).V});
    pairs.push_back({&p.scan(s).b, &grads.scan(s).b});
  }
  pairs.push_back({&p.P, &grads.P});
  pairs.push_back({&p.Q, &grads.Q});
  pairs.push_back({&p.b_out, &grads.b_out});

  for (auto [theta, g] : pairs) {
    const Matrix fd = finite_diff_grad(
        [&](const Matrix& cand) {
          const Matrix saved = *theta;
          *theta = cand;
          const double v = objective(p);
          *theta = saved;
          return v;
        },
        *theta, 1e-5);
    CHECK(max_rel_err(*g, fd) < 1e-6);
  }

  // input gradient
  const Matrix fdx = finite_diff_grad(
      [&](const Matrix& cand) {
        std::vector<Matrix> ys = xs;
        for (int i = 0; i < 2; ++i)
          for (int e = 0; e < 4; ++e) ys[0](i, e) = cand(i, e);
        for (int i = 0; i < 2; ++i)
          for (int e = 0; e < 4; ++e) ys[1](i, e) = cand(i, 4 + e);
        const ExtractorTape t = extractor_forward({&ys[0], &ys[1]}, p, m.scans);
        double L = 0.0;
        for (int i = 0; i < t.h_all.rows(); ++i)
          for (int j = 0; j < t.h_all.cols(); ++j) L += c(i, j) * t.h_all(i, j);
        return L;
      },
      tape.x_all, 1e-5);
  CHECK(max_rel_err(dx, fdx) < 1e-6);
}

TEST_CASE("gradients accumulate across calls") {
  const ElectrodeMontage m = grid2x2();
  Rng rng(8);
  const ExtractorParams p = ExtractorParams::init(2, 3, 2, rng);
  Matrix x(2, 4);
  fill_uniform(x, -1.0, 1.0, rng);
  Matrix c(2, 4);
  fill_uniform(c, -1.0, 1.0, rng);

  const ExtractorTape tape = extractor_forward({&x}, p, m.scans);
  ExtractorParams g1 = ExtractorParams::zeros(2, 3, 2);
  extractor_backward(tape, c, p, g1);
  ExtractorParams g2 = ExtractorParams::zeros(2, 3, 2);
  extractor_backward(tape, c, p, g2);
  extractor_backward(tape, c, p, g2);
  CHECK(max_abs_diff(g2.P, add(g1.P, g1.P)) < 1e-15);
  CHECK(max_abs_diff(g2.h_fwd.U, add(g1.h_fwd.U, g1.h_fwd.U)) < 1e-15);
}

TEST_CASE("shape errors") {
  const ElectrodeMontage m = grid2x2();
  Rng rng(1);
  const ExtractorParams p = ExtractorParams::init(2, 3, 2, rng);
  CHECK_THROWS_AS(extractor_forward({}, p, m.scans), ValidationError);

  Matrix bad(3, 4);  // wrong feature dim
  CHECK_THROWS_AS(extractor_forward({&bad}, p, m.scans), ShapeError);
  Matrix narrow(2, 3);  // wrong electrode count
  CHECK_THROWS_AS(extractor_forward({&narrow}, p, m.scans), ShapeError);

  Matrix ok(2, 4), other(2, 4);
  ok.set_all(0.1);
  other.set_all(0.2);
  Matrix short_one(2, 3);
  CHECK_THROWS_AS(extractor_forward({&ok, &short_one}, p, m.scans), ShapeError);
}
