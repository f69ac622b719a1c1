#include <cmath>

#include "can/operators.hpp"
#include "can/parallel.hpp"
#include "solver_util.hpp"

namespace can {

void RtvParams::validate() const {
  if (!(lambda > 0) || !(sigma > 0) || eps < 0 || !(eps_s > 0) || outer_iters < 1 ||
      !(cg_tol > 0) || cg_max_iters < 1)
    fail(errc::bad_argument, "bad RTV params");
}

// IRLS: each outer iteration builds per-pixel gradient weights
//   w_x = (G_sigma * 1) / (|G_sigma * dxJ| + eps) * 1 / (|dxJ| + eps_s)
// (analogously w_y) and solves (Id + (1/lambda)(dx^T Wx dx + dy^T Wy dy)) J = I.
Image rtv(const Image &img, const RtvParams &p) {
  using solver::Plane;
  p.validate();
  const int h = img.height, w = img.width;
  const int nt = can::threads();

  Plane ones(h, w, 1.0), gone;
  solver::gaussian_blur(ones, gone, p.sigma);

  Image out(h, w, img.channels);
  for (int c = 0; c < img.channels; ++c) {
    Plane input = solver::get_channel(img, c);
    Plane j = input;
    for (int outer = 0; outer < p.outer_iters; ++outer) {
      Plane gx, gy;
      solver::grad_forward(j, gx, gy);
      Plane lx, ly;
      solver::gaussian_blur(gx, lx, p.sigma);
      solver::gaussian_blur(gy, ly, p.sigma);
      Plane wx(h, w), wy(h, w);
#pragma omp parallel for num_threads(nt) schedule(static)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          wx.at(y, x) = gone.at(y, x) / (std::abs(lx.at(y, x)) + p.eps) /
                        (std::abs(gx.at(y, x)) + p.eps_s);
          wy.at(y, x) = gone.at(y, x) / (std::abs(ly.at(y, x)) + p.eps) /
                        (std::abs(gy.at(y, x)) + p.eps_s);
        }

      const double inv_lambda = 1.0 / p.lambda;
      auto apply = [&](const Plane &x, Plane &outp) {
        Plane ax, ay, at;
        solver::grad_forward(x, ax, ay);
#pragma omp parallel for num_threads(nt) schedule(static)
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx) {
            ax.at(y, xx) *= wx.at(y, xx);
            ay.at(y, xx) *= wy.at(y, xx);
          }
        solver::grad_adjoint(ax, ay, at);
        outp = Plane(h, w);
#pragma omp parallel for num_threads(nt) schedule(static)
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx)
            outp.at(y, xx) = x.at(y, xx) + inv_lambda * at.at(y, xx);
      };
      solver::CgResult cg = solver::conjugate_gradient(apply, input, j, p.cg_tol, p.cg_max_iters);
      if (!cg.converged)
        fail(errc::solver_failure, "RTV conjugate gradient stalled, relative residual " +
                                       std::to_string(cg.rel_residual));
    }
    solver::set_channel(out, c, j);
  }
  return out;
}

} // namespace can
