#include <algorithm>
#include <cmath>
#include <numeric>

#include "can/image_ops.hpp"
#include "can/operators.hpp"
#include "can/parallel.hpp"
#include "solver_util.hpp"

namespace can {

void DehazeParams::validate() const {
  if (patch_radius < 0 || !(omega > 0 && omega <= 1) || !(t0 > 0 && t0 < 1) ||
      !(top_fraction > 0 && top_fraction < 1) || guided_radius < 0 || !(guided_eps > 0))
    fail(errc::bad_argument, "bad dehaze params");
}

Image guided_filter(const Image &guide, const Image &src, int radius, double eps) {
  using solver::Plane;
  if (guide.channels != 1 || src.channels != 1 || guide.height != src.height ||
      guide.width != src.width)
    fail(errc::dimension_mismatch, "guided_filter expects matching 1-channel images");
  const int h = guide.height, w = guide.width;
  const int nt = can::threads();

  Plane gp = solver::get_channel(guide, 0);
  Plane sp = solver::get_channel(src, 0);
  Plane gg(h, w), gs(h, w);
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      gg.at(y, x) = gp.at(y, x) * gp.at(y, x);
      gs.at(y, x) = gp.at(y, x) * sp.at(y, x);
    }

  Plane mean_g, mean_s, corr_gg, corr_gs;
  solver::box_mean(gp, mean_g, radius);
  solver::box_mean(sp, mean_s, radius);
  solver::box_mean(gg, corr_gg, radius);
  solver::box_mean(gs, corr_gs, radius);

  Plane a(h, w), b(h, w);
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double var = corr_gg.at(y, x) - mean_g.at(y, x) * mean_g.at(y, x);
      const double cov = corr_gs.at(y, x) - mean_g.at(y, x) * mean_s.at(y, x);
      a.at(y, x) = cov / (var + eps);
      b.at(y, x) = mean_s.at(y, x) - a.at(y, x) * mean_g.at(y, x);
    }

  Plane mean_a, mean_b;
  solver::box_mean(a, mean_a, radius);
  solver::box_mean(b, mean_b, radius);

  Image out(h, w, 1);
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.at(y, x, 0) = static_cast<float>(mean_a.at(y, x) * gp.at(y, x) + mean_b.at(y, x));
  return out;
}

std::pair<Image, DehazeDecomposition> dehaze_dark_channel(const Image &img,
                                                          const DehazeParams &p) {
  using solver::Plane;
  p.validate();
  if (img.channels != 3) fail(errc::bad_argument, "dehazing expects an RGB image");
  const int h = img.height, w = img.width;
  const int nt = can::threads();

  // dark channel of the input: min over channels, then min over the patch
  Plane minc(h, w);
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      minc.at(y, x) = std::min({img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)});
  Plane dark;
  solver::patch_min(minc, dark, p.patch_radius);

  // atmospheric light: per-channel max of the input over the brightest
  // dark-channel pixels (ties broken by pixel index for determinism)
  const size_t npix = static_cast<size_t>(h) * w;
  const size_t top = std::max<size_t>(1, static_cast<size_t>(std::ceil(npix * p.top_fraction)));
  std::vector<uint32_t> idx(npix);
  std::iota(idx.begin(), idx.end(), 0u);
  std::partial_sort(idx.begin(), idx.begin() + top, idx.end(), [&](uint32_t a, uint32_t b) {
    const double da = dark.v[a], db = dark.v[b];
    return da != db ? da > db : a < b;
  });
  std::array<float, 3> airlight = {0.0f, 0.0f, 0.0f};
  for (size_t i = 0; i < top; ++i)
    for (int c = 0; c < 3; ++c)
      airlight[c] = std::max(airlight[c], img.data[static_cast<size_t>(idx[i]) * 3 + c]);
  for (int c = 0; c < 3; ++c)
    if (airlight[c] <= 0.0f)
      fail(errc::solver_failure, "degenerate atmospheric light (zero channel)");

  // raw transmission from the dark channel of I/A
  Plane norm_minc(h, w);
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      norm_minc.at(y, x) = std::min({img.at(y, x, 0) / airlight[0],
                                     img.at(y, x, 1) / airlight[1],
                                     img.at(y, x, 2) / airlight[2]});
  Plane dark_norm;
  solver::patch_min(norm_minc, dark_norm, p.patch_radius);

  Image t_raw(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      t_raw.at(y, x, 0) = static_cast<float>(1.0 - p.omega * dark_norm.at(y, x));

  Image t_ref = guided_filter(to_gray(img), t_raw, p.guided_radius, p.guided_eps);

  DehazeDecomposition dec;
  dec.atmospheric_light = airlight;
  dec.transmission = Image(h, w, 1);
  Image j(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double t = std::clamp(static_cast<double>(t_ref.at(y, x, 0)), p.t0, 1.0);
      dec.transmission.at(y, x, 0) = static_cast<float>(t);
      for (int c = 0; c < 3; ++c)
        j.at(y, x, c) = static_cast<float>((img.at(y, x, c) - airlight[c]) / t + airlight[c]);
    }
  dec.radiance = clamp01(j);
  return {dec.radiance, dec};
}

} // namespace can
