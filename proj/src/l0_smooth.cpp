#include <cmath>

#include "can/operators.hpp"
#include "can/parallel.hpp"
#include "solver_util.hpp"

namespace can {

void L0Params::validate() const {
  if (!(lambda > 0) || !(beta0 > 0) || !(kappa > 1) || !(beta_max > beta0))
    fail(errc::bad_argument, "bad L0 params");
}

// Half-quadratic splitting. The auxiliary gradient field g is the gradient
// of J where the squared magnitude (summed over channels) exceeds 1/beta,
// zero elsewhere; the J-subproblem (lambda*Id + beta*grad^T grad) J =
// lambda*I + beta*grad^T g is solved by CG per channel.
Image l0_smooth(const Image &img, const L0Params &p) {
  using solver::Plane;
  p.validate();
  const int h = img.height, w = img.width, ch = img.channels;
  const int nt = can::threads();

  std::vector<Plane> input(ch), j(ch);
  for (int c = 0; c < ch; ++c) {
    input[c] = solver::get_channel(img, c);
    j[c] = input[c];
  }

  std::vector<Plane> gx(ch), gy(ch);
  Plane mask(h, w);
  for (double beta = p.beta0; beta <= p.beta_max; beta *= p.kappa) {
    for (int c = 0; c < ch; ++c) solver::grad_forward(j[c], gx[c], gy[c]);
    const double thresh = 1.0 / beta;
#pragma omp parallel for num_threads(nt) schedule(static)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int c = 0; c < ch; ++c) {
          const double dx = gx[c].at(y, x), dy = gy[c].at(y, x);
          s += dx * dx + dy * dy;
        }
        mask.at(y, x) = s > thresh ? 1.0 : 0.0;
      }

    for (int c = 0; c < ch; ++c) {
      Plane hx(h, w), hy(h, w);
#pragma omp parallel for num_threads(nt) schedule(static)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double m = mask.at(y, x);
          hx.at(y, x) = m * gx[c].at(y, x);
          hy.at(y, x) = m * gy[c].at(y, x);
        }
      Plane adj;
      solver::grad_adjoint(hx, hy, adj);
      Plane b(h, w);
#pragma omp parallel for num_threads(nt) schedule(static)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          b.at(y, x) = p.lambda * input[c].at(y, x) + beta * adj.at(y, x);

      auto apply = [&](const Plane &x, Plane &out) {
        Plane ax, ay, at;
        solver::grad_forward(x, ax, ay);
        solver::grad_adjoint(ax, ay, at);
        out = Plane(h, w);
#pragma omp parallel for num_threads(nt) schedule(static)
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx)
            out.at(y, xx) = p.lambda * x.at(y, xx) + beta * at.at(y, xx);
      };
      solver::conjugate_gradient(apply, b, j[c], 1e-6, 200);
    }
  }

  Image out(h, w, ch);
  for (int c = 0; c < ch; ++c) solver::set_channel(out, c, j[c]);
  return out;
}

} // namespace can
