#include "tann/attention_local.hpp"

#include <cmath>

#include "tann/error.hpp"

namespace tann {

double entropy2(double d_s, double d_t) {
  if (d_s < 0.0 || d_t < 0.0)
    throw ValidationError("entropy2: negative probability (" + std::to_string(d_s) + ", " +
                          std::to_string(d_t) + ")");
  if (std::fabs(d_s + d_t - 1.0) > 1e-9)
    throw ValidationError("entropy2: probabilities sum to " + std::to_string(d_s + d_t));
  auto term = [](double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; };
  const double h = term(d_s) + term(d_t);
  return h < 0.0 ? 0.0 : (h > 1.0 ? 1.0 : h);
}

Matrix flatten_region_block(const Matrix& hhat, int batch, int n, const RegionSlice& slice) {
  const int d_fp = hhat.rows();
  Matrix flat(d_fp * slice.width, batch);
  for (int c = 0; c < slice.width; ++c) {
    for (int r = 0; r < d_fp; ++r) {
      const double* src = hhat.row(r);
      double* dst = flat.row(c * d_fp + r);
      for (int b = 0; b < batch; ++b) dst[b] = src[std::size_t(b) * n + slice.begin + c];
    }
  }
  return flat;
}

void unflatten_region_block_add(Matrix& d_hhat, const Matrix& d_flat, int batch, int n,
                                const RegionSlice& slice) {
  const int d_fp = d_hhat.rows();
  for (int c = 0; c < slice.width; ++c) {
    for (int r = 0; r < d_fp; ++r) {
      double* dst = d_hhat.row(r);
      const double* src = d_flat.row(c * d_fp + r);
      for (int b = 0; b < batch; ++b) dst[std::size_t(b) * n + slice.begin + c] += src[b];
    }
  }
}

LocalAttendResult local_attend(const Matrix& hhat, int batch,
                               const std::vector<RegionSlice>& slices,
                               const std::vector<DiscParams>& discs,
                               const LocalAttendOptions& opt) {
  const int N = int(slices.size());
  const int n = batch > 0 ? hhat.cols() / batch : 0;
  if (batch < 1 || hhat.cols() != batch * n)
    throw ShapeError("local_attend: features " + shape_str(hhat) + " for batch " +
                     std::to_string(batch));
  if (int(discs.size()) != N)
    throw ShapeError("local_attend: " + std::to_string(discs.size()) + " discriminators for " +
                     std::to_string(N) + " regions");
  if (opt.frozen_w && (opt.frozen_w->rows() != N || opt.frozen_w->cols() != batch))
    throw ShapeError("local_attend: frozen weights " + shape_str(*opt.frozen_w));

  LocalAttendResult out;
  out.w = Matrix(N, batch);
  out.entropy = Matrix(N, batch);
  out.hhat_prime = hhat;
  out.tapes.reserve(std::size_t(N));

  for (int i = 0; i < N; ++i) {
    const RegionSlice& sl = slices[std::size_t(i)];
    DiscTape tape = disc_forward(discs[std::size_t(i)], flatten_region_block(hhat, batch, n, sl));
    for (int b = 0; b < batch; ++b) {
      const double h = entropy2(tape.probs(0, b), tape.probs(1, b));
      out.entropy(i, b) = h;
      double w = 1.0 - h;
      if (opt.force_w_zero)
        w = 0.0;
      else if (opt.frozen_w)
        w = (*opt.frozen_w)(i, b);
      out.w(i, b) = w;
      // residual scaling of this sample's block
      const double scale = 1.0 + w;
      for (int r = 0; r < hhat.rows(); ++r) {
        double* row = out.hhat_prime.row(r) + std::size_t(b) * n;
        for (int c = sl.begin; c < sl.begin + sl.width; ++c) row[c] *= scale;
      }
    }
    out.tapes.push_back(std::move(tape));
  }
  return out;
}

double local_disc_loss(const std::vector<DiscTape>& tapes,
                       const std::vector<std::uint8_t>& is_source,
                       std::vector<double>* per_region) {
  if (tapes.empty()) throw ValidationError("local_disc_loss: no regions");
  if (per_region) per_region->clear();
  double sum = 0.0;
  for (const auto& t : tapes) {
    const double li = disc_nll(t, is_source);
    if (per_region) per_region->push_back(li);
    sum += li;
  }
  return sum / double(tapes.size());
}

void local_attend_backward_features(const LocalAttendResult& att, int batch,
                                    const std::vector<RegionSlice>& slices,
                                    const Matrix& d_hhat_prime, Matrix& d_hhat) {
  require_same_shape(d_hhat_prime, d_hhat, "local_attend backward");
  const int n = d_hhat.cols() / batch;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const RegionSlice& sl = slices[i];
    for (int b = 0; b < batch; ++b) {
      const double scale = 1.0 + att.w(int(i), b);
      for (int r = 0; r < d_hhat.rows(); ++r) {
        const double* src = d_hhat_prime.row(r) + std::size_t(b) * n;
        double* dst = d_hhat.row(r) + std::size_t(b) * n;
        for (int c = sl.begin; c < sl.begin + sl.width; ++c) dst[c] += scale * src[c];
      }
    }
  }
}

void local_disc_backward(const LocalAttendResult& att, int batch,
                         const std::vector<RegionSlice>& slices,
                         const std::vector<DiscParams>& discs,
                         const std::vector<std::uint8_t>& is_source, double c_param,
                         std::vector<DiscParams>* grads, double c_input, Matrix* d_hhat) {
  const int n = d_hhat ? d_hhat->cols() / batch : 0;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    Matrix d_flat;
    Matrix* d_flat_ptr = nullptr;
    if (d_hhat && c_input != 0.0) {
      d_flat = Matrix(att.tapes[i].in.rows(), batch);
      d_flat_ptr = &d_flat;
    }
    disc_backward_nll(discs[i], att.tapes[i], is_source, c_param,
                      grads ? &(*grads)[i] : nullptr, c_input, d_flat_ptr);
    if (d_flat_ptr) unflatten_region_block_add(*d_hhat, d_flat, batch, n, slices[i]);
  }
}

}  // namespace tann
