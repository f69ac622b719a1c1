#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "can/image.hpp"
#include "can/parallel.hpp"

// Shared double-precision machinery for the variational solvers. All loops
// are row-parallel; reductions combine per-row partials in row order so
// results do not depend on the thread count.
namespace can::solver {

struct Plane {
  int h = 0, w = 0;
  std::vector<double> v;
  Plane() = default;
  Plane(int hh, int ww, double fill = 0.0) : h(hh), w(ww), v(static_cast<size_t>(hh) * ww, fill) {}
  double &at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
  const double *row(int y) const { return v.data() + static_cast<size_t>(y) * w; }
  double *row(int y) { return v.data() + static_cast<size_t>(y) * w; }
};

inline Plane get_channel(const Image &img, int c) {
  Plane p(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) p.at(y, x) = img.at(y, x, c);
  return p;
}

inline void set_channel(Image &img, int c, const Plane &p) {
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) img.at(y, x, c) = static_cast<float>(p.at(y, x));
}

// forward differences, replicate boundary: zero at the last column/row
inline void grad_forward(const Plane &j, Plane &gx, Plane &gy) {
  const int h = j.h, w = j.w;
  gx = Plane(h, w);
  gy = Plane(h, w);
  const int nt = can::threads();
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    const double *r = j.row(y);
    const double *rn = y < h - 1 ? j.row(y + 1) : r;
    double *px = gx.row(y);
    double *py = gy.row(y);
    for (int x = 0; x < w; ++x) {
      px[x] = x < w - 1 ? r[x + 1] - r[x] : 0.0;
      py[x] = rn[x] - r[x]; // 0 on the last row since rn aliases r
    }
  }
}

// adjoint of grad_forward
inline void grad_adjoint(const Plane &gx, const Plane &gy, Plane &out) {
  const int h = gx.h, w = gx.w;
  out = Plane(h, w);
  const int nt = can::threads();
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    const double *rx = gx.row(y);
    const double *ry = gy.row(y);
    const double *ryp = y > 0 ? gy.row(y - 1) : nullptr;
    double *po = out.row(y);
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      if (x > 0) s += rx[x - 1];
      if (x < w - 1) s -= rx[x];
      if (ryp) s += ryp[x];
      if (y < h - 1) s -= ry[x];
      po[x] = s;
    }
  }
}

inline double dot(const Plane &a, const Plane &b) {
  const int h = a.h, w = a.w;
  std::vector<double> rowsum(h, 0.0);
  const int nt = can::threads();
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    const double *pa = a.row(y);
    const double *pb = b.row(y);
    double s = 0.0;
    for (int x = 0; x < w; ++x) s += pa[x] * pb[x];
    rowsum[y] = s;
  }
  double acc = 0.0;
  for (int y = 0; y < h; ++y) acc += rowsum[y];
  return acc;
}

struct CgResult {
  int iters = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

// CG for SPD systems; x holds the initial guess and the solution.
inline CgResult conjugate_gradient(const std::function<void(const Plane &, Plane &)> &apply,
                                   const Plane &b, Plane &x, double tol, int max_iters) {
  const int h = b.h, w = b.w;
  const int nt = can::threads();
  Plane r(h, w), p(h, w), ap(h, w);
  apply(x, ap);
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      r.at(y, xx) = b.at(y, xx) - ap.at(y, xx);
      p.at(y, xx) = r.at(y, xx);
    }
  const double nb = std::sqrt(dot(b, b));
  const double stop = tol * (nb > 0 ? nb : 1.0);
  double rs = dot(r, r);
  CgResult res;
  res.rel_residual = nb > 0 ? std::sqrt(rs) / nb : std::sqrt(rs);
  if (std::sqrt(rs) <= stop) {
    res.converged = true;
    return res;
  }
  for (int it = 0; it < max_iters; ++it) {
    apply(p, ap);
    const double alpha = rs / dot(p, ap);
#pragma omp parallel for num_threads(nt) schedule(static)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        x.at(y, xx) += alpha * p.at(y, xx);
        r.at(y, xx) -= alpha * ap.at(y, xx);
      }
    const double rs_new = dot(r, r);
    res.iters = it + 1;
    if (std::sqrt(rs_new) <= stop) {
      res.converged = true;
      res.rel_residual = nb > 0 ? std::sqrt(rs_new) / nb : std::sqrt(rs_new);
      return res;
    }
    const double beta = rs_new / rs;
    rs = rs_new;
#pragma omp parallel for num_threads(nt) schedule(static)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) p.at(y, xx) = r.at(y, xx) + beta * p.at(y, xx);
  }
  res.rel_residual = nb > 0 ? std::sqrt(rs) / nb : std::sqrt(rs);
  return res;
}

// separable Gaussian, replicate boundary, normalized kernel
void gaussian_blur(const Plane &in, Plane &out, double sigma);

// mean over a (2r+1)^2 window with replicate boundary
void box_mean(const Plane &in, Plane &out, int radius);

// min over a (2r+1)^2 window with replicate boundary
void patch_min(const Plane &in, Plane &out, int radius);

} // namespace can::solver
