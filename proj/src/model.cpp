#include "can/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace can {

void CanConfig::validate() const {
  if (depth < 3) fail(errc::bad_argument, "depth must be >= 3");
  if (width < 1) fail(errc::bad_argument, "width must be >= 1");
  if (aux_channels < 0) fail(errc::bad_argument, "aux_channels must be >= 0");
  if (init_noise_std < 0) fail(errc::bad_argument, "init_noise_std must be >= 0");
  if (!(bn_eps > 0)) fail(errc::bad_argument, "bn_eps must be > 0");
  if (!(bn_momentum > 0 && bn_momentum < 1)) fail(errc::bad_argument, "bn_momentum must be in (0,1)");
}

bool CanModel::all_finite() const {
  auto ok = [](const std::vector<float> &v) {
    for (float x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  for (const ConvLayer &l : layers) {
    if (!ok(l.weights) || !ok(l.bias) || !ok(l.gamma) || !ok(l.beta) ||
        !ok(l.running_mean) || !ok(l.running_var))
      return false;
    if (!std::isfinite(l.lambda_s) || !std::isfinite(l.mu_s)) return false;
  }
  return true;
}

std::vector<int> dilation_schedule(const CanConfig &cfg) {
  cfg.validate();
  std::vector<int> r(cfg.depth - 1, 1);
  if (cfg.dilation == DilationMode::Exponential)
    for (int s = 1; s <= cfg.depth - 2; ++s) r[s - 1] = 1 << (s - 1);
  // r[d-2] stays 1: the last 3x3 layer is undilated
  return r;
}

int receptive_field(const CanConfig &cfg) {
  cfg.validate();
  if (cfg.dilation == DilationMode::Exponential) return (1 << (cfg.depth - 1)) + 1;
  return 2 * (cfg.depth - 1) + 1;
}

ParamCount param_count(const CanConfig &cfg) {
  cfg.validate();
  ParamCount pc;
  long long cin = cfg.input_channels();
  for (int s = 1; s <= cfg.depth - 1; ++s) {
    pc.conv_params += 9 * cin * cfg.width + cfg.width;
    cin = cfg.width;
  }
  pc.conv_params += static_cast<long long>(cfg.width) * 3 + 3;
  if (cfg.norm != NormMode::None) {
    pc.norm_params = 2LL * cfg.width * (cfg.depth - 1); // gamma, beta
    if (cfg.norm == NormMode::Adaptive) pc.norm_params += 2LL * (cfg.depth - 1);
  }
  return pc;
}

CanModel init_model(const CanConfig &cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  CanModel m;
  m.config = cfg;
  m.layers.resize(cfg.depth);

  int cin = cfg.input_channels();
  for (int s = 0; s < cfg.depth - 1; ++s) {
    ConvLayer &l = m.layers[s];
    l.in_channels = cin;
    l.out_channels = cfg.width;
    l.taps = 9;
    l.weights.assign(static_cast<size_t>(9) * cin * cfg.width, 0.0f);
    l.bias.assign(cfg.width, 0.0f);
    for (int i = 0; i < cfg.width; ++i)
      l.weights[(static_cast<size_t>(4) * cin + i % cin) * cfg.width + i] = 1.0f; // center tap
    if (cfg.norm != NormMode::None) {
      l.gamma.assign(cfg.width, 1.0f);
      l.beta.assign(cfg.width, 0.0f);
      l.running_mean.assign(cfg.width, 0.0f);
      l.running_var.assign(cfg.width, 1.0f);
    }
    cin = cfg.width;
  }
  ConvLayer &out = m.layers[cfg.depth - 1];
  out.in_channels = cfg.width;
  out.out_channels = 3;
  out.taps = 1;
  out.weights.assign(static_cast<size_t>(cfg.width) * 3, 0.0f);
  out.bias.assign(3, 0.0f);
  // each RGB channel averages the hidden channels that carry it
  for (int j = 0; j < cfg.width; ++j)
    out.weights[static_cast<size_t>(j) * 3 + j % 3] = 3.0f / cfg.width;

  std::vector<int> dil = dilation_schedule(cfg);
  for (int s = 0; s < cfg.depth - 1; ++s) m.layers[s].dilation = dil[s];

  if (cfg.init_noise_std > 0) {
    for (ConvLayer &l : m.layers)
      for (float &wv : l.weights)
        wv += static_cast<float>(rng.gaussian(0.0, cfg.init_noise_std));
  }
  return m;
}

namespace {

constexpr char kMagic[8] = {'C', 'A', 'N', 'N', 'E', 'T', '0', '1'};
constexpr uint32_t kFormatVersion = 1;

struct Writer {
  std::vector<uint8_t> buf;
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void floats(const std::vector<float> &v) {
    for (float x : v) f32(x);
  }
};

struct Reader {
  const std::vector<uint8_t> &buf;
  size_t pos = 0;
  explicit Reader(const std::vector<uint8_t> &b) : buf(b) {}
  void need(size_t n) const {
    if (pos + n > buf.size()) fail(errc::truncated_stream, "model stream truncated");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  float f32_finite() {
    float v = f32();
    if (!std::isfinite(v)) fail(errc::non_finite_value, "non-finite value in model stream");
    return v;
  }
  void floats(std::vector<float> &v, size_t n) {
    v.resize(n);
    for (size_t i = 0; i < n; ++i) v[i] = f32_finite();
  }
};

} // namespace

std::vector<uint8_t> serialize_model(const CanModel &model) {
  model.config.validate();
  Writer w;
  w.buf.insert(w.buf.end(), kMagic, kMagic + 8);
  w.u32(kFormatVersion);
  w.u32(static_cast<uint32_t>(model.config.depth));
  w.u32(static_cast<uint32_t>(model.config.width));
  w.u32(static_cast<uint32_t>(model.config.norm));
  w.u32(static_cast<uint32_t>(model.config.aux_channels));
  w.f32(model.config.lrelu_alpha);
  w.f32(model.config.bn_eps);
  w.f32(model.config.bn_momentum);
  w.u32(static_cast<uint32_t>(model.config.dilation));
  for (const ConvLayer &l : model.layers) {
    w.floats(l.weights);
    w.floats(l.bias);
    if (!l.gamma.empty()) {
      w.floats(l.gamma);
      w.floats(l.beta);
      w.f32(l.lambda_s);
      w.f32(l.mu_s);
    }
  }
  for (const ConvLayer &l : model.layers) {
    if (!l.running_mean.empty()) {
      w.floats(l.running_mean);
      w.floats(l.running_var);
    }
  }
  return w.buf;
}

CanModel deserialize_model(const std::vector<uint8_t> &bytes) {
  Reader r(bytes);
  r.need(8);
  if (std::memcmp(bytes.data(), kMagic, 8) != 0) fail(errc::bad_magic, "bad model magic");
  r.pos = 8;
  const uint32_t version = r.u32();
  if (version != kFormatVersion) fail(errc::bad_version, "unsupported model format version");

  CanConfig cfg;
  cfg.depth = static_cast<int>(r.u32());
  cfg.width = static_cast<int>(r.u32());
  const uint32_t norm = r.u32();
  if (norm > 2) fail(errc::bad_version, "unknown norm mode");
  cfg.norm = static_cast<NormMode>(norm);
  cfg.aux_channels = static_cast<int>(r.u32());
  cfg.lrelu_alpha = r.f32_finite();
  cfg.bn_eps = r.f32_finite();
  cfg.bn_momentum = r.f32_finite();
  const uint32_t dil = r.u32();
  if (dil > 1) fail(errc::bad_version, "unknown dilation mode");
  cfg.dilation = static_cast<DilationMode>(dil);
  cfg.validate();

  CanModel m;
  m.config = cfg;
  m.layers.resize(cfg.depth);
  std::vector<int> sched = dilation_schedule(cfg);
  int cin = cfg.input_channels();
  for (int s = 0; s < cfg.depth; ++s) {
    ConvLayer &l = m.layers[s];
    const bool output_layer = s == cfg.depth - 1;
    l.in_channels = output_layer ? cfg.width : cin;
    l.out_channels = output_layer ? 3 : cfg.width;
    l.taps = output_layer ? 1 : 9;
    l.dilation = output_layer ? 1 : sched[s];
    r.floats(l.weights, static_cast<size_t>(l.taps) * l.in_channels * l.out_channels);
    r.floats(l.bias, l.out_channels);
    if (!output_layer && cfg.norm != NormMode::None) {
      r.floats(l.gamma, cfg.width);
      r.floats(l.beta, cfg.width);
      l.lambda_s = r.f32_finite();
      l.mu_s = r.f32_finite();
    }
    cin = cfg.width;
  }
  for (int s = 0; s < cfg.depth - 1; ++s) {
    if (cfg.norm != NormMode::None) {
      r.floats(m.layers[s].running_mean, cfg.width);
      r.floats(m.layers[s].running_var, cfg.width);
    }
  }
  if (r.pos != bytes.size()) fail(errc::truncated_stream, "trailing bytes in model stream");
  return m;
}

void save_model(const CanModel &model, const std::string &path) {
  std::vector<uint8_t> bytes = serialize_model(model);
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(errc::file_write_failed, "cannot write " + path);
  f.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(errc::file_write_failed, "short write: " + path);
}

CanModel load_model(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(errc::file_not_found, "cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

const char *norm_mode_name(NormMode m) {
  switch (m) {
  case NormMode::None: return "none";
  case NormMode::Batch: return "batch";
  case NormMode::Adaptive: return "adaptive";
  }
  return "?";
}

NormMode parse_norm_mode(const std::string &s) {
  if (s == "none") return NormMode::None;
  if (s == "batch") return NormMode::Batch;
  if (s == "adaptive") return NormMode::Adaptive;
  fail(errc::bad_argument, "unknown norm mode: " + s);
}

} // namespace can
