#include "solver_util.hpp"

#include <algorithm>

namespace can::solver {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

void conv_rows(const Plane &in, Plane &out, const std::vector<double> &k, int radius) {
  const int h = in.h, w = in.w;
  out = Plane(h, w);
  const int nt = can::threads();
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    const double *r = in.row(y);
    double *o = out.row(y);
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int t = -radius; t <= radius; ++t) s += k[t + radius] * r[clampi(x + t, 0, w - 1)];
      o[x] = s;
    }
  }
}

void conv_cols(const Plane &in, Plane &out, const std::vector<double> &k, int radius) {
  const int h = in.h, w = in.w;
  out = Plane(h, w);
  const int nt = can::threads();
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    double *o = out.row(y);
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int t = -radius; t <= radius; ++t) s += k[t + radius] * in.at(clampi(y + t, 0, h - 1), x);
      o[x] = s;
    }
  }
}

} // namespace

void gaussian_blur(const Plane &in, Plane &out, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    k[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
    sum += k[t + radius];
  }
  for (double &v : k) v /= sum;
  Plane tmp;
  conv_rows(in, tmp, k, radius);
  conv_cols(tmp, out, k, radius);
}

void box_mean(const Plane &in, Plane &out, int radius) {
  const int h = in.h, w = in.w;
  const double norm = 1.0 / ((2.0 * radius + 1) * (2.0 * radius + 1));
  Plane tmp(h, w);
  const int nt = can::threads();
  // horizontal running sums with clamped reads
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    const double *r = in.row(y);
    double *o = tmp.row(y);
    double s = 0.0;
    for (int t = -radius; t <= radius; ++t) s += r[clampi(t, 0, w - 1)];
    o[0] = s;
    for (int x = 1; x < w; ++x) {
      s += r[clampi(x + radius, 0, w - 1)] - r[clampi(x - radius - 1, 0, w - 1)];
      o[x] = s;
    }
  }
  out = Plane(h, w);
  // vertical pass, column-wise running sums split across row blocks
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int x = 0; x < w; ++x) {
    double s = 0.0;
    for (int t = -radius; t <= radius; ++t) s += tmp.at(clampi(t, 0, h - 1), x);
    out.at(0, x) = s * norm;
    for (int y = 1; y < h; ++y) {
      s += tmp.at(clampi(y + radius, 0, h - 1), x) - tmp.at(clampi(y - radius - 1, 0, h - 1), x);
      out.at(y, x) = s * norm;
    }
  }
}

void patch_min(const Plane &in, Plane &out, int radius) {
  const int h = in.h, w = in.w;
  Plane tmp(h, w);
  const int nt = can::threads();
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    const double *r = in.row(y);
    double *o = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      double m = r[clampi(x - radius, 0, w - 1)];
      for (int t = -radius + 1; t <= radius; ++t) m = std::min(m, r[clampi(x + t, 0, w - 1)]);
      o[x] = m;
    }
  }
  out = Plane(h, w);
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    double *o = out.row(y);
    for (int x = 0; x < w; ++x) {
      double m = tmp.at(clampi(y - radius, 0, h - 1), x);
      for (int t = -radius + 1; t <= radius; ++t) m = std::min(m, tmp.at(clampi(y + t, 0, h - 1), x));
      o[x] = m;
    }
  }
}

} // namespace can::solver
