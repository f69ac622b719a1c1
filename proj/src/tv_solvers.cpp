#include <cmath>

#include "can/operators.hpp"
#include "can/parallel.hpp"
#include "solver_util.hpp"

namespace can {

void RofParams::validate() const {
  if (!(lambda > 0) || !(sigma > 0) || !(tau > 0) || theta < 0 || theta > 1 || iters < 1)
    fail(errc::bad_argument, "bad ROF params");
  if (sigma * tau * 8.0 > 1.0 + 1e-12)
    fail(errc::bad_argument, "sigma*tau*8 must be <= 1");
}

void TvL1Params::validate() const {
  if (!(lambda > 0) || !(sigma > 0) || !(tau > 0) || theta < 0 || theta > 1 || iters < 1)
    fail(errc::bad_argument, "bad TV-L1 params");
  if (sigma * tau * 8.0 > 1.0 + 1e-12)
    fail(errc::bad_argument, "sigma*tau*8 must be <= 1");
}

namespace {

enum class DataTerm { L2, L1 };

// Chambolle-Pock primal-dual for min_J TV(J) + lambda*D(I-J), isotropic TV
// per channel, forward differences with replicate boundary.
void primal_dual_channel(solver::Plane &j, const solver::Plane &input, double lambda,
                         double sigma, double tau, double theta, int iters, DataTerm term) {
  using solver::Plane;
  const int h = j.h, w = j.w;
  Plane jbar = j, px(h, w), py(h, w);
  const int nt = can::threads();
  const double shrink = tau * lambda;

  for (int it = 0; it < iters; ++it) {
    // dual ascent + projection onto the unit ball
#pragma omp parallel for num_threads(nt) schedule(static)
    for (int y = 0; y < h; ++y) {
      const double *r = jbar.row(y);
      const double *rn = y < h - 1 ? jbar.row(y + 1) : r;
      double *qx = px.row(y);
      double *qy = py.row(y);
      for (int x = 0; x < w; ++x) {
        const double gx = x < w - 1 ? r[x + 1] - r[x] : 0.0;
        const double gy = rn[x] - r[x];
        double ax = qx[x] + sigma * gx;
        double ay = qy[x] + sigma * gy;
        const double nrm = std::sqrt(ax * ax + ay * ay);
        if (nrm > 1.0) {
          ax /= nrm;
          ay /= nrm;
        }
        qx[x] = ax;
        qy[x] = ay;
      }
    }
    // primal descent with the data proximal step, then over-relaxation
#pragma omp parallel for num_threads(nt) schedule(static)
    for (int y = 0; y < h; ++y) {
      const double *qx = px.row(y);
      const double *qy = py.row(y);
      const double *qyp = y > 0 ? py.row(y - 1) : nullptr;
      double *rj = j.row(y);
      double *rb = jbar.row(y);
      const double *ri = input.row(y);
      for (int x = 0; x < w; ++x) {
        double div = qx[x] + qy[x];
        if (x > 0) div -= qx[x - 1];
        if (qyp) div -= qyp[x];
        const double v = rj[x] + tau * div;
        double jn;
        if (term == DataTerm::L2) {
          jn = (v + 2.0 * tau * lambda * ri[x]) / (1.0 + 2.0 * tau * lambda);
        } else {
          const double d = v - ri[x];
          jn = ri[x] + (d > shrink ? d - shrink : (d < -shrink ? d + shrink : 0.0));
        }
        rb[x] = jn + theta * (jn - rj[x]);
        rj[x] = jn;
      }
    }
  }
}

Image run_primal_dual(const Image &img, double lambda, double sigma, double tau,
                      double theta, int iters, DataTerm term) {
  Image out(img.height, img.width, img.channels);
  for (int c = 0; c < img.channels; ++c) {
    solver::Plane input = solver::get_channel(img, c);
    solver::Plane j = input;
    primal_dual_channel(j, input, lambda, sigma, tau, theta, iters, term);
    solver::set_channel(out, c, j);
  }
  return out;
}

} // namespace

Image rof(const Image &img, const RofParams &p) {
  p.validate();
  return run_primal_dual(img, p.lambda, p.sigma, p.tau, p.theta, p.iters, DataTerm::L2);
}

Image tvl1(const Image &img, const TvL1Params &p) {
  p.validate();
  return run_primal_dual(img, p.lambda, p.sigma, p.tau, p.theta, p.iters, DataTerm::L1);
}

} // namespace can
