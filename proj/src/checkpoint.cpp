#include "tann/checkpoint.hpp"

#include <cstring>

#include "tann/csvio.hpp"
#include "tann/error.hpp"

namespace tann {

static const char kMagic[8] = {'T', 'A', 'N', 'N', 'C', 'K', 'P', '1'};

// ---- little-endian encoding ----------------------------------------------

static void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b += char((v >> (8 * i)) & 0xff);
}
static void put_u64(std::string& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b += char((v >> (8 * i)) & 0xff);
}
static void put_f64(std::string& b, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(b, v);
}
static void put_str(std::string& b, const std::string& s) {
  put_u32(b, std::uint32_t(s.size()));
  b += s;
}

struct Reader {
  const std::string& buf;
  std::size_t at = 0;
  const std::string& path;

  void need(std::size_t n) const {
    if (at + n > buf.size())
      throw ValidationError("checkpoint '" + path + "': truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t((unsigned char)buf[at + i]) << (8 * i);
    at += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t((unsigned char)buf[at + i]) << (8 * i);
    at += 8;
    return v;
  }
  double f64() {
    const std::uint64_t v = u64();
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = buf.substr(at, n);
    at += n;
    return s;
  }
};

static void put_tensor(std::string& b, const std::string& name, const Matrix& m) {
  put_str(b, name);
  put_u32(b, std::uint32_t(m.rows()));
  put_u32(b, std::uint32_t(m.cols()));
  for (std::size_t i = 0; i < m.size(); ++i) put_f64(b, m.data()[i]);
}

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const ModelParams& momentum, const CheckpointMeta& meta) {
  std::string b;
  b.append(kMagic, 8);
  put_u32(b, 1);  // version

  const ModelDims& d = params.dims;
  put_u32(b, std::uint32_t(d.d));
  put_u32(b, std::uint32_t(d.n));
  put_u32(b, std::uint32_t(d.d_f));
  put_u32(b, std::uint32_t(d.d_fp));
  put_u32(b, std::uint32_t(d.n_prime));
  put_u32(b, std::uint32_t(d.classes));
  put_u32(b, std::uint32_t(d.local_hidden));
  put_u32(b, std::uint32_t(d.global_hidden));
  put_u32(b, std::uint32_t(params.region_widths.size()));
  for (int w : params.region_widths) put_u32(b, std::uint32_t(w));

  const TrainConfig& c = meta.cfg;
  put_f64(b, c.alpha);
  put_f64(b, c.beta);
  put_f64(b, c.learning_rate);
  put_f64(b, c.momentum);
  put_f64(b, c.lr_decay);
  put_u32(b, std::uint32_t(c.batch_size));
  put_u32(b, std::uint32_t(c.epochs));
  put_u64(b, c.seed);
  b += char(int(c.variant));
  b += char(c.clip_enabled ? 1 : 0);
  put_f64(b, c.clip_norm);
  b += char(c.detach_discriminators ? 1 : 0);
  b += char(c.force_local_w_zero ? 1 : 0);

  put_u32(b, std::uint32_t(meta.epochs_done));
  put_str(b, meta.protocol);
  put_str(b, meta.rule);
  put_str(b, meta.fold);
  put_str(b, meta.dataset_name);

  std::uint32_t count = 0;
  for_each_tensor(params, [&](const std::string&, const Matrix&) { count += 2; });
  put_u32(b, count);
  for_each_tensor(params, [&](const std::string& name, const Matrix& m) { put_tensor(b, name, m); });
  for_each_tensor(momentum,
                  [&](const std::string& name, const Matrix& m) { put_tensor(b, "momentum:" + name, m); });

  write_file_atomic(path, b);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string buf = read_file(path);
  Reader r{buf, 0, path};
  r.need(8);
  if (std::memcmp(buf.data(), kMagic, 8) != 0)
    throw ValidationError("checkpoint '" + path + "': bad magic bytes");
  r.at = 8;
  const std::uint32_t version = r.u32();
  if (version != 1)
    throw ValidationError("checkpoint '" + path + "': unsupported version " +
                          std::to_string(version));

  ModelDims d;
  d.d = int(r.u32());
  d.n = int(r.u32());
  d.d_f = int(r.u32());
  d.d_fp = int(r.u32());
  d.n_prime = int(r.u32());
  d.classes = int(r.u32());
  d.local_hidden = int(r.u32());
  d.global_hidden = int(r.u32());
  const std::uint32_t n_regions = r.u32();
  if (n_regions == 0 || n_regions > 4096)
    throw ValidationError("checkpoint '" + path + "': implausible region count");
  std::vector<int> widths;
  for (std::uint32_t i = 0; i < n_regions; ++i) widths.push_back(int(r.u32()));

  Checkpoint out;
  out.meta.cfg.alpha = r.f64();
  out.meta.cfg.beta = r.f64();
  out.meta.cfg.learning_rate = r.f64();
  out.meta.cfg.momentum = r.f64();
  out.meta.cfg.lr_decay = r.f64();
  out.meta.cfg.batch_size = int(r.u32());
  out.meta.cfg.epochs = int(r.u32());
  out.meta.cfg.seed = r.u64();
  r.need(2);
  {
    const int v = int((unsigned char)buf[r.at++]);
    if (v > 3) throw ValidationError("checkpoint '" + path + "': bad variant byte");
    out.meta.cfg.variant = Variant(v);
    out.meta.cfg.clip_enabled = buf[r.at++] != 0;
  }
  out.meta.cfg.clip_norm = r.f64();
  r.need(2);
  out.meta.cfg.detach_discriminators = buf[r.at++] != 0;
  out.meta.cfg.force_local_w_zero = buf[r.at++] != 0;

  out.meta.epochs_done = int(r.u32());
  out.meta.protocol = r.str();
  out.meta.rule = r.str();
  out.meta.fold = r.str();
  out.meta.dataset_name = r.str();

  out.params = ModelParams::allocate(d, widths);
  out.momentum = ModelParams::allocate(d, widths);

  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const int rows = int(r.u32());
    const int cols = int(r.u32());
    ModelParams* dst = &out.params;
    if (name.rfind("momentum:", 0) == 0) {
      name = name.substr(9);
      dst = &out.momentum;
    }
    Matrix* t = find_tensor(*dst, name);
    if (!t) throw ValidationError("checkpoint '" + path + "': unknown tensor '" + name + "'");
    if (t->rows() != rows || t->cols() != cols)
      throw ValidationError("checkpoint '" + path + "': tensor '" + name + "' is " +
                            std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                            shape_str(*t));
    for (int rr = 0; rr < rows; ++rr)
      for (int cc = 0; cc < cols; ++cc) (*t)(rr, cc) = r.f64();
  }
  if (r.at != buf.size())
    throw ValidationError("checkpoint '" + path + "': trailing bytes");
  return out;
}

}  // namespace tann
