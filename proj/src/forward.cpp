#include "can/forward.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "can/kernels.hpp"
#include "can/parallel.hpp"

namespace can {

namespace {

// Psi then LReLU, in place. Batch statistics are taken from stats when
// given (training mode), otherwise from the layer's running statistics.
void normalize_activate(Tensor &t, const ConvLayer &l, const CanConfig &cfg,
                        const std::vector<double> *batch_mean,
                        const std::vector<double> *batch_var) {
  const int c = t.channels;
  if (cfg.norm != NormMode::None) {
    // Psi(x) = lambda_s*x + mu_s*(gamma*(x-m)*inv + beta), folded to a*x + b.
    // Coefficients and the per-element multiply-add stay in double: inv can
    // be large for near-constant channels and the fold cancels.
    std::vector<double> scale(c), shift(c);
    for (int ch = 0; ch < c; ++ch) {
      const double m = batch_mean ? (*batch_mean)[ch] : l.running_mean[ch];
      const double v = batch_var ? (*batch_var)[ch] : l.running_var[ch];
      const double inv = 1.0 / std::sqrt(v + cfg.bn_eps);
      const double bn_a = l.gamma[ch] * inv;
      const double bn_b = l.beta[ch] - l.gamma[ch] * m * inv;
      if (cfg.norm == NormMode::Batch) {
        scale[ch] = bn_a;
        shift[ch] = bn_b;
      } else {
        scale[ch] = l.lambda_s + l.mu_s * bn_a;
        shift[ch] = l.mu_s * bn_b;
      }
    }
    const int nt = can::threads();
    const int h = t.height, w = t.width;
#pragma omp parallel for num_threads(nt) schedule(static)
    for (int y = 0; y < h; ++y) {
      float *row = t.row(y);
      for (int x = 0; x < w; ++x) {
        float *px = row + static_cast<size_t>(x) * c;
        for (int ch = 0; ch < c; ++ch)
          px[ch] = static_cast<float>(scale[ch] * px[ch] + shift[ch]);
      }
    }
  }
  kernels::lrelu_forward(t.data.data(), t.data.size(), cfg.lrelu_alpha);
}

void update_running(ConvLayer &l, const CanConfig &cfg,
                    const std::vector<double> &mean, const std::vector<double> &var) {
  const float mom = cfg.bn_momentum;
  for (size_t ch = 0; ch < l.running_mean.size(); ++ch) {
    l.running_mean[ch] = mom * l.running_mean[ch] + (1.0f - mom) * static_cast<float>(mean[ch]);
    l.running_var[ch] = mom * l.running_var[ch] + (1.0f - mom) * static_cast<float>(var[ch]);
  }
}

Tensor run_layers(const CanModel &model, CanModel *mutable_model, Tensor &&input,
                  bool training, bool update_stats, ForwardWorkspace &ws) {
  const CanConfig &cfg = model.config;
  const int h = input.height, w = input.width;
  const size_t cap = static_cast<size_t>(h) * w *
                     std::max(cfg.width, std::max(cfg.input_channels(), 3));

  ws.a = std::move(input);
  ws.a.data.reserve(cap);
  ws.b = Tensor(h, w, cfg.width);
  ws.b.data.reserve(cap);
  ws.buffers_allocated = 2;

  Tensor *src = &ws.a;
  Tensor *dst = &ws.b;
  for (int s = 0; s < cfg.depth - 1; ++s) {
    const ConvLayer &l = model.layers[s];
    dst->height = h;
    dst->width = w;
    dst->channels = l.out_channels;
    dst->data.resize(static_cast<size_t>(h) * w * l.out_channels);
    kernels::conv3x3_forward(src->data.data(), h, w, l.in_channels, l.weights.data(),
                             l.bias.data(), l.out_channels, l.dilation, dst->data.data());
    if (cfg.norm != NormMode::None && training) {
      std::vector<double> mean, var;
      kernels::channel_mean_var(dst->data.data(), h, w, l.out_channels, mean, var);
      if (update_stats && mutable_model) update_running(mutable_model->layers[s], cfg, mean, var);
      normalize_activate(*dst, l, cfg, &mean, &var);
    } else {
      normalize_activate(*dst, l, cfg, nullptr, nullptr);
    }
    std::swap(src, dst);
  }
  const ConvLayer &out = model.layers[cfg.depth - 1];
  dst->height = h;
  dst->width = w;
  dst->channels = 3;
  dst->data.resize(static_cast<size_t>(h) * w * 3);
  kernels::conv1x1_forward(src->data.data(), h, w, out.in_channels, out.weights.data(),
                           out.bias.data(), 3, dst->data.data());
  return *dst;
}

} // namespace

Tensor attach_aux_channels(const Image &img, std::span<const float> values) {
  if (img.channels != 3) fail(errc::bad_argument, "network input must be RGB");
  Tensor t(img.height, img.width, 3 + static_cast<int>(values.size()));
  const int c = t.channels;
  for (int y = 0; y < img.height; ++y) {
    const float *src = img.row(y);
    float *dst = t.row(y);
    for (int x = 0; x < img.width; ++x) {
      for (int ch = 0; ch < 3; ++ch) dst[x * c + ch] = src[x * 3 + ch];
      for (size_t a = 0; a < values.size(); ++a) dst[x * c + 3 + a] = values[a];
    }
  }
  return t;
}

Image forward(const CanModel &model, const Image &img, std::span<const float> aux,
              ForwardWorkspace *ws) {
  model.config.validate();
  if (static_cast<int>(aux.size()) != model.config.aux_channels)
    fail(errc::bad_argument, "aux plane count does not match the model");
  ForwardWorkspace local;
  ForwardWorkspace &w = ws ? *ws : local;
  Tensor out = run_layers(model, nullptr, attach_aux_channels(img, aux),
                          /*training=*/false, false, w);
  return to_image(out);
}

Image forward_training(CanModel &model, const Image &img, std::span<const float> aux,
                       bool update_stats) {
  model.config.validate();
  if (static_cast<int>(aux.size()) != model.config.aux_channels)
    fail(errc::bad_argument, "aux plane count does not match the model");
  ForwardWorkspace w;
  Tensor out = run_layers(model, &model, attach_aux_channels(img, aux),
                          /*training=*/true, update_stats, w);
  return to_image(out);
}

void forward_cached(CanModel &model, const Tensor &input, bool training,
                    bool update_stats, ForwardCache &cache) {
  const CanConfig &cfg = model.config;
  const int h = input.height, w = input.width;
  const int n3 = cfg.depth - 1;

  cache.x.assign(1, input);
  cache.x.resize(cfg.depth);
  cache.pre_norm.assign(n3, Tensor());
  cache.mean.assign(n3, {});
  cache.var.assign(n3, {});

  for (int s = 0; s < n3; ++s) {
    const ConvLayer &l = model.layers[s];
    Tensor u(h, w, l.out_channels);
    kernels::conv3x3_forward(cache.x[s].data.data(), h, w, l.in_channels, l.weights.data(),
                             l.bias.data(), l.out_channels, l.dilation, u.data.data());
    cache.pre_norm[s] = u;
    if (cfg.norm != NormMode::None && training) {
      kernels::channel_mean_var(u.data.data(), h, w, l.out_channels, cache.mean[s], cache.var[s]);
      if (update_stats) update_running(model.layers[s], cfg, cache.mean[s], cache.var[s]);
      normalize_activate(u, l, cfg, &cache.mean[s], &cache.var[s]);
    } else {
      normalize_activate(u, l, cfg, nullptr, nullptr);
    }
    cache.x[s + 1] = std::move(u);
  }
  const ConvLayer &out = model.layers[cfg.depth - 1];
  cache.output = Tensor(h, w, 3);
  kernels::conv1x1_forward(cache.x[n3].data.data(), h, w, out.in_channels,
                           out.weights.data(), out.bias.data(), 3, cache.output.data.data());
}

} // namespace can
