#include "can/reference.hpp"

#include <cmath>

namespace can::ref {

Tensor64 widen(const Tensor &t) {
  Tensor64 out(t.height, t.width, t.channels);
  for (size_t i = 0; i < t.data.size(); ++i) out.data[i] = t.data[i];
  return out;
}

Tensor64 widen(const Image &img) {
  Tensor64 out(img.height, img.width, img.channels);
  for (size_t i = 0; i < img.data.size(); ++i) out.data[i] = img.data[i];
  return out;
}

Model64 widen(const CanModel &m) {
  Model64 out;
  out.config = m.config;
  out.layers.resize(m.layers.size());
  auto copy = [](const std::vector<float> &src, std::vector<double> &dst) {
    dst.assign(src.begin(), src.end());
  };
  for (size_t s = 0; s < m.layers.size(); ++s) {
    const ConvLayer &l = m.layers[s];
    Model64::Layer &o = out.layers[s];
    o.in_channels = l.in_channels;
    o.out_channels = l.out_channels;
    o.dilation = l.dilation;
    o.taps = l.taps;
    copy(l.weights, o.weights);
    copy(l.bias, o.bias);
    copy(l.gamma, o.gamma);
    copy(l.beta, o.beta);
    copy(l.running_mean, o.running_mean);
    copy(l.running_var, o.running_var);
    o.lambda_s = l.lambda_s;
    o.mu_s = l.mu_s;
  }
  return out;
}

Tensor64 conv3x3(const Tensor64 &in, const std::vector<double> &k,
                 const std::vector<double> &bias, int cout, int r) {
  const int h = in.height, w = in.width, cin = in.channels;
  Tensor64 out(h, w, cout);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int o = 0; o < cout; ++o) {
        double acc = bias[o];
        for (int tr = -1; tr <= 1; ++tr)
          for (int tc = -1; tc <= 1; ++tc) {
            const int ys = y - r * tr, xs = x - r * tc;
            if (ys < 0 || ys >= h || xs < 0 || xs >= w) continue;
            for (int j = 0; j < cin; ++j)
              acc += in.at(ys, xs, j) *
                     k[(static_cast<size_t>((tr + 1) * 3 + (tc + 1)) * cin + j) * cout + o];
          }
        out.at(y, x, o) = acc;
      }
  return out;
}

Tensor64 conv1x1(const Tensor64 &in, const std::vector<double> &k,
                 const std::vector<double> &bias, int cout) {
  const int h = in.height, w = in.width, cin = in.channels;
  Tensor64 out(h, w, cout);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int o = 0; o < cout; ++o) {
        double acc = bias[o];
        for (int j = 0; j < cin; ++j) acc += in.at(y, x, j) * k[static_cast<size_t>(j) * cout + o];
        out.at(y, x, o) = acc;
      }
  return out;
}

void lrelu(Tensor64 &t, double alpha) {
  for (double &v : t.data) v = v > 0.0 ? v : alpha * v;
}

Tensor64 forward(const Model64 &m, const Tensor64 &input, bool training) {
  const CanConfig &cfg = m.config;
  Tensor64 x = input;
  for (int s = 0; s < cfg.depth - 1; ++s) {
    const Model64::Layer &l = m.layers[s];
    Tensor64 u = conv3x3(x, l.weights, l.bias, l.out_channels, l.dilation);
    if (cfg.norm != NormMode::None) {
      const int c = u.channels;
      const double n = static_cast<double>(u.height) * u.width;
      for (int ch = 0; ch < c; ++ch) {
        double mean, var;
        if (training) {
          double sum = 0.0, sq = 0.0;
          for (int y = 0; y < u.height; ++y)
            for (int x2 = 0; x2 < u.width; ++x2) {
              const double v = u.at(y, x2, ch);
              sum += v;
              sq += v * v;
            }
          mean = sum / n;
          var = std::max(0.0, sq / n - mean * mean);
        } else {
          mean = l.running_mean[ch];
          var = l.running_var[ch];
        }
        const double inv = 1.0 / std::sqrt(var + cfg.bn_eps);
        for (int y = 0; y < u.height; ++y)
          for (int x2 = 0; x2 < u.width; ++x2) {
            const double v = u.at(y, x2, ch);
            const double bn = l.gamma[ch] * (v - mean) * inv + l.beta[ch];
            u.at(y, x2, ch) = cfg.norm == NormMode::Batch ? bn : l.lambda_s * v + l.mu_s * bn;
          }
      }
    }
    lrelu(u, cfg.lrelu_alpha);
    x = std::move(u);
  }
  const Model64::Layer &out = m.layers[cfg.depth - 1];
  return conv1x1(x, out.weights, out.bias, 3);
}

double loss(const Tensor64 &output, const Image &target) {
  double acc = 0.0;
  for (size_t i = 0; i < output.data.size(); ++i) {
    const double d = output.data[i] - target.data[i];
    acc += d * d;
  }
  return acc / (static_cast<double>(output.height) * output.width);
}

double loss_for_model(const Model64 &m, const Tensor64 &input, const Image &target,
                      bool training) {
  return loss(forward(m, input, training), target);
}

} // namespace can::ref
