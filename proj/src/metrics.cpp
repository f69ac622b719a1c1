#include "can/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "can/forward.hpp"
#include "can/image_io.hpp"
#include "can/image_ops.hpp"
#include "can/parallel.hpp"

namespace can {

namespace {

double ssim_luma(const Image &ga, const Image &gb) {
  constexpr int kRadius = 5; // 11x11 window
  constexpr double kSigma = 1.5;
  constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

  double kern[2 * kRadius + 1];
  double ksum = 0.0;
  for (int t = -kRadius; t <= kRadius; ++t) {
    kern[t + kRadius] = std::exp(-0.5 * t * t / (kSigma * kSigma));
    ksum += kern[t + kRadius];
  }
  for (double &v : kern) v /= ksum;

  const int h = ga.height, w = ga.width;
  auto clampi = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };

  // separable weighted moments: horizontal pass into 5 running planes
  std::vector<double> ha(static_cast<size_t>(h) * w), hb(ha.size()), haa(ha.size()),
      hbb(ha.size()), hab(ha.size());
  const int nt = can::threads();
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int t = -kRadius; t <= kRadius; ++t) {
        const int xs = clampi(x + t, w - 1);
        const double va = 255.0 * ga.at(y, xs, 0);
        const double vb = 255.0 * gb.at(y, xs, 0);
        const double kw = kern[t + kRadius];
        sa += kw * va;
        sb += kw * vb;
        saa += kw * va * va;
        sbb += kw * vb * vb;
        sab += kw * va * vb;
      }
      const size_t i = static_cast<size_t>(y) * w + x;
      ha[i] = sa;
      hb[i] = sb;
      haa[i] = saa;
      hbb[i] = sbb;
      hab[i] = sab;
    }
  }

  std::vector<double> rowsum(h, 0.0);
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    double acc = 0.0;
    for (int x = 0; x < w; ++x) {
      double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
      for (int t = -kRadius; t <= kRadius; ++t) {
        const size_t i = static_cast<size_t>(clampi(y + t, h - 1)) * w + x;
        const double kw = kern[t + kRadius];
        ma += kw * ha[i];
        mb += kw * hb[i];
        maa += kw * haa[i];
        mbb += kw * hbb[i];
        mab += kw * hab[i];
      }
      const double var_a = maa - ma * ma;
      const double var_b = mbb - mb * mb;
      const double cov = mab - ma * mb;
      const double num = (2.0 * ma * mb + kC1) * (2.0 * cov + kC2);
      const double den = (ma * ma + mb * mb + kC1) * (var_a + var_b + kC2);
      acc += num / den;
    }
    rowsum[y] = acc;
  }
  double total = 0.0;
  for (int y = 0; y < h; ++y) total += rowsum[y];
  return total / (static_cast<double>(h) * w);
}

MetricReport mean_of(const std::vector<MetricReport> &reports) {
  MetricReport m;
  if (reports.empty()) return m;
  for (const MetricReport &r : reports) {
    m.mse255 += r.mse255;
    m.psnr += r.psnr;
    m.ssim += r.ssim;
    m.dssim += r.dssim;
  }
  const double n = static_cast<double>(reports.size());
  m.mse255 /= n;
  m.psnr /= n;
  m.ssim /= n;
  m.dssim /= n;
  return m;
}

void csv_row(std::ofstream &f, const std::string &path, const MetricReport &r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s,%.6g,%.6g,%.6g,%.6g\n", path.c_str(), r.mse255,
                r.psnr, r.ssim, r.dssim);
  f << buf;
}

} // namespace

MetricReport metric_report(const Image &a, const Image &b) {
  if (!a.same_shape(b)) fail(errc::dimension_mismatch, "metric operands must share dimensions");
  if (!all_finite(a) || !all_finite(b))
    fail(errc::non_finite_value, "metric input contains NaN/Inf samples");
  const Image ca = clamp01(a);
  const Image cb = clamp01(b);

  double se = 0.0;
  for (size_t i = 0; i < ca.data.size(); ++i) {
    const double d = 255.0 * (static_cast<double>(ca.data[i]) - cb.data[i]);
    se += d * d;
  }
  MetricReport r;
  r.mse255 = se / static_cast<double>(ca.data.size());
  r.psnr = r.mse255 > 0.0 ? 10.0 * std::log10(255.0 * 255.0 / r.mse255) : 100.0;
  r.ssim = ssim_luma(to_gray(ca), to_gray(cb));
  r.dssim = (1.0 - r.ssim) / 2.0;
  return r;
}

Image error_map(const Image &a, const Image &b) {
  if (!a.same_shape(b) || a.channels != 3)
    fail(errc::dimension_mismatch, "error_map expects matching RGB images");
  const Image ca = clamp01(a);
  const Image cb = clamp01(b);
  Image out(a.height, a.width, 1);
  for (size_t p = 0; p < out.pixel_count(); ++p) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double d = 255.0 * (static_cast<double>(ca.data[p * 3 + c]) - cb.data[p * 3 + c]);
      s += d * d;
    }
    out.data[p] = static_cast<float>(std::min(1.0, std::sqrt(s) / 100.0));
  }
  return out;
}

int empirical_receptive_field(const CanModel &model, int probe_size) {
  if (probe_size <= receptive_field(model.config))
    fail(errc::bad_argument, "probe smaller than the theoretical receptive field");
  Image zero(probe_size, probe_size, 3, 0.0f);
  Image poked = zero;
  const int c = probe_size / 2;
  for (int ch = 0; ch < 3; ++ch) poked.at(c, c, ch) = 1e4f;

  std::vector<float> aux(model.config.aux_channels, 0.5f);
  const Image a = forward(model, zero, aux);
  const Image b = forward(model, poked, aux);

  int ymin = probe_size, ymax = -1, xmin = probe_size, xmax = -1;
  for (int y = 0; y < probe_size; ++y)
    for (int x = 0; x < probe_size; ++x)
      for (int ch = 0; ch < 3; ++ch)
        if (a.at(y, x, ch) != b.at(y, x, ch)) {
          ymin = std::min(ymin, y);
          ymax = std::max(ymax, y);
          xmin = std::min(xmin, x);
          xmax = std::max(xmax, x);
          break;
        }
  if (ymax < 0) return 0;
  return std::max(ymax - ymin + 1, xmax - xmin + 1);
}

CorpusEval evaluate_corpus(const CanModel &model, const DatasetIndex &ds) {
  CorpusEval eval;
  std::vector<MetricReport> models, inputs;
  for (const DatasetEntry &e : ds.entries) {
    try {
      const Image input = load_image(e.input_path);
      const Image target = load_image(e.target_path);
      const Image predicted = forward(model, input, e.aux);
      CorpusRow row;
      row.path = e.input_path;
      row.model = metric_report(predicted, target);
      row.input_baseline = metric_report(input, target);
      models.push_back(row.model);
      inputs.push_back(row.input_baseline);
      eval.rows.push_back(std::move(row));
    } catch (const Error &err) {
      eval.failures.emplace_back(e.input_path, err.what());
    }
  }
  eval.mean_model = mean_of(models);
  eval.mean_input = mean_of(inputs);
  return eval;
}

void write_corpus_csv(const CorpusEval &eval, const std::string &path) {
  std::ofstream f(path);
  if (!f) fail(errc::file_write_failed, "cannot write " + path);
  f << "path,mse255,psnr_db,ssim,dssim\n";
  for (const CorpusRow &row : eval.rows) csv_row(f, row.path, row.model);
  for (const CorpusRow &row : eval.rows) csv_row(f, "input:" + row.path, row.input_baseline);
  csv_row(f, "input:MEAN", eval.mean_input);
  csv_row(f, "MEAN", eval.mean_model);
  if (!f) fail(errc::file_write_failed, "short write: " + path);
}

} // namespace can
