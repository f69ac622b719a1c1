#include "can/training.hpp"

#include <algorithm>
#include <cmath>

#include "can/forward.hpp"
#include "can/kernels.hpp"
#include "can/parallel.hpp"
#include "can/rng.hpp"

namespace can {

void TrainConfig::validate() const {
  if (iterations < 0) fail(errc::bad_argument, "iterations must be >= 0");
  if (!(lr > 0)) fail(errc::bad_argument, "lr must be > 0");
  if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1)
    fail(errc::bad_argument, "adam betas must be in [0,1)");
  if (!(adam_eps > 0)) fail(errc::bad_argument, "adam_eps must be > 0");
  if (min_res < 1 || min_res > max_res) fail(errc::bad_argument, "bad resolution bounds");
  if (checkpoint_every < 1 || log_every < 1) fail(errc::bad_argument, "bad logging intervals");
}

GradientSet GradientSet::zeros_like(const CanModel &m) {
  GradientSet g;
  g.layers.resize(m.layers.size());
  for (size_t s = 0; s < m.layers.size(); ++s) {
    g.layers[s].weights.assign(m.layers[s].weights.size(), 0.0f);
    g.layers[s].bias.assign(m.layers[s].bias.size(), 0.0f);
    g.layers[s].gamma.assign(m.layers[s].gamma.size(), 0.0f);
    g.layers[s].beta.assign(m.layers[s].beta.size(), 0.0f);
  }
  return g;
}

bool GradientSet::all_finite() const {
  auto ok = [](const std::vector<float> &v) {
    for (float x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  for (const LayerGrads &l : layers)
    if (!ok(l.weights) || !ok(l.bias) || !ok(l.gamma) || !ok(l.beta) ||
        !std::isfinite(l.lambda_s) || !std::isfinite(l.mu_s))
      return false;
  return true;
}

AdamState AdamState::init(const CanModel &model) {
  AdamState s;
  s.m = GradientSet::zeros_like(model);
  s.v = GradientSet::zeros_like(model);
  s.t = 0;
  return s;
}

namespace {

// residual scaled by 2/N, loss = sum(residual^2)/N with N = pixel count
double loss_and_dout(const Tensor &out, const Image &target, Tensor &dout) {
  const int h = out.height, w = out.width;
  const double n = static_cast<double>(h) * w;
  dout = Tensor(h, w, out.channels);
  std::vector<double> rowloss(h, 0.0);
  const int nt = can::threads();
  const float scale = static_cast<float>(2.0 / n);
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    const float *po = out.row(y);
    const float *pt = target.row(y);
    float *pd = dout.row(y);
    double acc = 0.0;
    for (int i = 0; i < w * out.channels; ++i) {
      const float r = po[i] - pt[i];
      acc += static_cast<double>(r) * r;
      pd[i] = scale * r;
    }
    rowloss[y] = acc;
  }
  double loss = 0.0;
  for (int y = 0; y < h; ++y) loss += rowloss[y];
  return loss / n;
}

// dx_{s+1} -> dn through the LReLU; sign taken from the cached activation
void lrelu_backward(Tensor &d, const Tensor &activated, float alpha) {
  const int nt = can::threads();
  const long long n = static_cast<long long>(d.data.size());
#pragma omp parallel for num_threads(nt) schedule(static)
  for (long long i = 0; i < n; ++i)
    if (!(activated.data[i] > 0.0f)) d.data[i] *= alpha;
}

// Backward through Psi for one 3x3 layer in training mode. dn is consumed
// and du is produced (may alias). Accumulates gamma/beta/lambda/mu grads.
void norm_backward(const CanConfig &cfg, const ConvLayer &l, const Tensor &u,
                   const std::vector<double> &mean, const std::vector<double> &var,
                   const Tensor &dn, Tensor &du, GradientSet::LayerGrads &g) {
  const int h = u.height, w = u.width, c = u.channels;
  const double npx = static_cast<double>(h) * w;
  const bool adaptive = cfg.norm == NormMode::Adaptive;
  const double lam = adaptive ? l.lambda_s : 0.0;
  const double mu = adaptive ? l.mu_s : 1.0;

  std::vector<double> inv(c);
  for (int ch = 0; ch < c; ++ch) inv[ch] = 1.0 / std::sqrt(var[ch] + cfg.bn_eps);

  // per-channel sums of dn, dn*xhat; scalar sums of dn*u and dn*bn(u)
  const int nt = can::threads();
  std::vector<double> rows(static_cast<size_t>(h) * (2 * c + 2), 0.0);
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    double *pr = rows.data() + static_cast<size_t>(y) * (2 * c + 2);
    double *sum_dn = pr;
    double *sum_dnx = pr + c;
    double &sum_dnu = pr[2 * c];
    double &sum_dnb = pr[2 * c + 1];
    const float *pu = u.row(y);
    const float *pd = dn.row(y);
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        const double uv = pu[x * c + ch];
        const double dv = pd[x * c + ch];
        const double xhat = (uv - mean[ch]) * inv[ch];
        sum_dn[ch] += dv;
        sum_dnx[ch] += dv * xhat;
        sum_dnu += dv * uv;
        sum_dnb += dv * (l.gamma[ch] * xhat + l.beta[ch]);
      }
  }
  std::vector<double> sum_dn(c, 0.0), sum_dnx(c, 0.0);
  double sum_dnu = 0.0, sum_dnb = 0.0;
  for (int y = 0; y < h; ++y) {
    const double *pr = rows.data() + static_cast<size_t>(y) * (2 * c + 2);
    for (int ch = 0; ch < c; ++ch) {
      sum_dn[ch] += pr[ch];
      sum_dnx[ch] += pr[c + ch];
    }
    sum_dnu += pr[2 * c];
    sum_dnb += pr[2 * c + 1];
  }

  for (int ch = 0; ch < c; ++ch) {
    g.gamma[ch] += static_cast<float>(mu * sum_dnx[ch]);
    g.beta[ch] += static_cast<float>(mu * sum_dn[ch]);
  }
  if (adaptive) {
    g.lambda_s += static_cast<float>(sum_dnu);
    g.mu_s += static_cast<float>(sum_dnb);
  }

  // du = lam*dn + (mu*gamma*inv) * (dn - mean(dn) - xhat*mean(dn*xhat))
  std::vector<double> mean_dxhat(c), mean_dxhat_x(c), coeff(c);
  for (int ch = 0; ch < c; ++ch) {
    const double s = mu * l.gamma[ch]; // dxhat = s * dn
    mean_dxhat[ch] = s * sum_dn[ch] / npx;
    mean_dxhat_x[ch] = s * sum_dnx[ch] / npx;
    coeff[ch] = s;
  }
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    const float *pu = u.row(y);
    const float *pd = dn.row(y);
    float *po = du.row(y);
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        const double uv = pu[x * c + ch];
        const double dv = pd[x * c + ch];
        const double xhat = (uv - mean[ch]) * inv[ch];
        const double dxhat = coeff[ch] * dv;
        const double dbn = inv[ch] * (dxhat - mean_dxhat[ch] - xhat * mean_dxhat_x[ch]);
        po[x * c + ch] = static_cast<float>(lam * dv + dbn);
      }
  }
}

} // namespace

LossGrad loss_and_grad(CanModel &model, const Image &input, std::span<const float> aux,
                       const Image &target, bool update_running_stats) {
  model.config.validate();
  if (input.height != target.height || input.width != target.width || target.channels != 3)
    fail(errc::dimension_mismatch, "input/target shapes do not match");
  if (static_cast<int>(aux.size()) != model.config.aux_channels)
    fail(errc::bad_argument, "aux plane count does not match the model");

  const CanConfig &cfg = model.config;
  ForwardCache cache;
  forward_cached(model, attach_aux_channels(input, aux), /*training=*/true,
                 update_running_stats, cache);

  LossGrad result;
  result.grads = GradientSet::zeros_like(model);
  Tensor dout;
  result.loss = loss_and_dout(cache.output, target, dout);
  if (!std::isfinite(result.loss)) fail(errc::divergence, "non-finite training loss");

  const int h = input.height, w = input.width;
  const int last = cfg.depth - 1;

  // 1x1 projection
  {
    const ConvLayer &l = model.layers[last];
    GradientSet::LayerGrads &g = result.grads.layers[last];
    kernels::conv1x1_backward_weights(cache.x[last].data.data(), dout.data.data(), h, w,
                                      l.in_channels, 3, g.weights.data(), g.bias.data());
    Tensor dx(h, w, l.in_channels);
    kernels::conv1x1_backward_data(dout.data.data(), h, w, 3, l.weights.data(),
                                   l.in_channels, dx.data.data());
    dout = std::move(dx);
  }

  for (int s = last - 1; s >= 0; --s) {
    const ConvLayer &l = model.layers[s];
    GradientSet::LayerGrads &g = result.grads.layers[s];
    lrelu_backward(dout, cache.x[s + 1], cfg.lrelu_alpha);
    if (cfg.norm != NormMode::None)
      norm_backward(cfg, l, cache.pre_norm[s], cache.mean[s], cache.var[s], dout, dout, g);
    kernels::conv3x3_backward_weights(cache.x[s].data.data(), dout.data.data(), h, w,
                                      l.in_channels, l.out_channels, l.dilation,
                                      g.weights.data(), g.bias.data());
    if (s > 0) {
      Tensor dx(h, w, l.in_channels);
      kernels::conv3x3_backward_data(dout.data.data(), h, w, l.out_channels,
                                     l.weights.data(), l.in_channels, l.dilation,
                                     dx.data.data());
      dout = std::move(dx);
    }
  }

  if (!result.grads.all_finite()) fail(errc::divergence, "non-finite gradients");
  return result;
}

namespace {

inline void adam_update(std::vector<float> &p, const std::vector<float> &g,
                        std::vector<float> &m, std::vector<float> &v, double lr,
                        double b1, double b2, double eps, double bc1, double bc2) {
  for (size_t i = 0; i < p.size(); ++i) {
    const double gd = g[i];
    m[i] = static_cast<float>(b1 * m[i] + (1.0 - b1) * gd);
    v[i] = static_cast<float>(b2 * v[i] + (1.0 - b2) * gd * gd);
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] = static_cast<float>(p[i] - lr * mhat / (std::sqrt(vhat) + eps));
  }
}

inline void adam_update_scalar(float &p, float g, float &m, float &v, double lr,
                               double b1, double b2, double eps, double bc1, double bc2) {
  const double gd = g;
  m = static_cast<float>(b1 * m + (1.0 - b1) * gd);
  v = static_cast<float>(b2 * v + (1.0 - b2) * gd * gd);
  p = static_cast<float>(p - lr * (m / bc1) / (std::sqrt(v / bc2) + eps));
}

} // namespace

void adam_step(CanModel &model, const GradientSet &grads, AdamState &state,
               const TrainConfig &cfg) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));
  for (size_t s = 0; s < model.layers.size(); ++s) {
    ConvLayer &l = model.layers[s];
    const GradientSet::LayerGrads &g = grads.layers[s];
    GradientSet::LayerGrads &m = state.m.layers[s];
    GradientSet::LayerGrads &v = state.v.layers[s];
    adam_update(l.weights, g.weights, m.weights, v.weights, cfg.lr, cfg.adam_beta1,
                cfg.adam_beta2, cfg.adam_eps, bc1, bc2);
    adam_update(l.bias, g.bias, m.bias, v.bias, cfg.lr, cfg.adam_beta1, cfg.adam_beta2,
                cfg.adam_eps, bc1, bc2);
    if (!l.gamma.empty()) {
      adam_update(l.gamma, g.gamma, m.gamma, v.gamma, cfg.lr, cfg.adam_beta1,
                  cfg.adam_beta2, cfg.adam_eps, bc1, bc2);
      adam_update(l.beta, g.beta, m.beta, v.beta, cfg.lr, cfg.adam_beta1, cfg.adam_beta2,
                  cfg.adam_eps, bc1, bc2);
      if (model.config.norm == NormMode::Adaptive) {
        adam_update_scalar(l.lambda_s, g.lambda_s, m.lambda_s, v.lambda_s, cfg.lr,
                           cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bc1, bc2);
        adam_update_scalar(l.mu_s, g.mu_s, m.mu_s, v.mu_s, cfg.lr, cfg.adam_beta1,
                           cfg.adam_beta2, cfg.adam_eps, bc1, bc2);
      }
    }
  }
}

std::vector<ParamRef> enumerate_params(const CanModel &m) {
  std::vector<ParamRef> refs;
  for (int s = 0; s < static_cast<int>(m.layers.size()); ++s) {
    const ConvLayer &l = m.layers[s];
    for (size_t i = 0; i < l.weights.size(); ++i) refs.push_back({s, ParamKind::Weights, i});
    for (size_t i = 0; i < l.bias.size(); ++i) refs.push_back({s, ParamKind::Bias, i});
    for (size_t i = 0; i < l.gamma.size(); ++i) refs.push_back({s, ParamKind::Gamma, i});
    for (size_t i = 0; i < l.beta.size(); ++i) refs.push_back({s, ParamKind::Beta, i});
    if (!l.gamma.empty() && m.config.norm == NormMode::Adaptive) {
      refs.push_back({s, ParamKind::LambdaS, 0});
      refs.push_back({s, ParamKind::MuS, 0});
    }
  }
  return refs;
}

float &param_at(CanModel &m, const ParamRef &p) {
  ConvLayer &l = m.layers[p.layer];
  switch (p.kind) {
  case ParamKind::Weights: return l.weights[p.index];
  case ParamKind::Bias: return l.bias[p.index];
  case ParamKind::Gamma: return l.gamma[p.index];
  case ParamKind::Beta: return l.beta[p.index];
  case ParamKind::LambdaS: return l.lambda_s;
  case ParamKind::MuS: return l.mu_s;
  }
  fail(errc::bad_argument, "bad param ref");
}

double &param_at(ref::Model64 &m, const ParamRef &p) {
  ref::Model64::Layer &l = m.layers[p.layer];
  switch (p.kind) {
  case ParamKind::Weights: return l.weights[p.index];
  case ParamKind::Bias: return l.bias[p.index];
  case ParamKind::Gamma: return l.gamma[p.index];
  case ParamKind::Beta: return l.beta[p.index];
  case ParamKind::LambdaS: return l.lambda_s;
  case ParamKind::MuS: return l.mu_s;
  }
  fail(errc::bad_argument, "bad param ref");
}

float grad_at(const GradientSet &g, const ParamRef &p) {
  const GradientSet::LayerGrads &l = g.layers[p.layer];
  switch (p.kind) {
  case ParamKind::Weights: return l.weights[p.index];
  case ParamKind::Bias: return l.bias[p.index];
  case ParamKind::Gamma: return l.gamma[p.index];
  case ParamKind::Beta: return l.beta[p.index];
  case ParamKind::LambdaS: return l.lambda_s;
  case ParamKind::MuS: return l.mu_s;
  }
  fail(errc::bad_argument, "bad param ref");
}

const char *param_kind_name(ParamKind k) {
  switch (k) {
  case ParamKind::Weights: return "kernels";
  case ParamKind::Bias: return "bias";
  case ParamKind::Gamma: return "gamma";
  case ParamKind::Beta: return "beta";
  case ParamKind::LambdaS: return "lambda_s";
  case ParamKind::MuS: return "mu_s";
  }
  return "?";
}

GradCheckReport gradient_check(const GradCheckOptions &opt) {
  Rng rng(opt.seed);
  GradCheckReport report;
  const NormMode modes[3] = {NormMode::None, NormMode::Batch, NormMode::Adaptive};

  for (int trial = 0; trial < opt.trials; ++trial) {
    CanConfig cfg;
    cfg.depth = rng.uniform_int(3, opt.max_depth);
    cfg.width = rng.uniform_int(2, opt.max_width);
    cfg.norm = modes[trial % 3];
    cfg.aux_channels = trial % 2;
    CanModel model = init_model(cfg, opt.seed * 1000 + trial);
    // check at a generic random point: identity-centered weights can leave a
    // channel nearly constant (tiny batch variance), which finite differences
    // cannot resolve at a fixed step
    for (ConvLayer &l : model.layers) {
      const double std = 0.5 / std::sqrt(static_cast<double>(l.taps) * l.in_channels);
      for (float &v : l.weights) v = static_cast<float>(rng.gaussian(0.0, std));
      for (float &v : l.bias) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    }
    if (cfg.norm == NormMode::Adaptive) {
      for (int s = 0; s < cfg.depth - 1; ++s) {
        model.layers[s].lambda_s = static_cast<float>(rng.uniform(0.5, 1.2));
        model.layers[s].mu_s = static_cast<float>(rng.uniform(0.2, 0.8));
      }
    }

    const int h = rng.uniform_int(3, opt.max_size);
    const int w = rng.uniform_int(3, opt.max_size);
    Image input(h, w, 3), target(h, w, 3);
    for (float &v : input.data) v = static_cast<float>(rng.uniform());
    for (float &v : target.data) v = static_cast<float>(rng.uniform());
    std::vector<float> aux(cfg.aux_channels);
    for (float &v : aux) v = static_cast<float>(rng.uniform(-1.0, 1.0));

    LossGrad lg = loss_and_grad(model, input, aux, target, /*update_running_stats=*/false);
    if (opt.mutate_grads) opt.mutate_grads(lg.grads);

    ref::Model64 m64 = ref::widen(model);
    const ref::Tensor64 in64 = ref::widen(attach_aux_channels(input, aux));
    for (const ParamRef &p : enumerate_params(model)) {
      double &theta = param_at(m64, p);
      const double theta0 = theta;
      theta = theta0 + opt.fd_step;
      const double lp = ref::loss_for_model(m64, in64, target, /*training=*/true);
      theta = theta0 - opt.fd_step;
      const double lm = ref::loss_for_model(m64, in64, target, /*training=*/true);
      theta = theta0;
      const double numeric = (lp - lm) / (2.0 * opt.fd_step);
      const double analytic = grad_at(lg.grads, p);
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1.0});
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = p;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
        report.worst_trial = trial;
      }
      double &by_kind = report.max_by_kind[static_cast<int>(p.kind)];
      by_kind = std::max(by_kind, rel);
    }
    report.trials += 1;
  }
  return report;
}

} // namespace can
