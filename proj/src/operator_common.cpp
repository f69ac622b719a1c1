#include <cmath>

#include "can/operators.hpp"
#include "solver_util.hpp"

namespace can {

OperatorSpec OperatorSpec::make(OperatorId id) {
  switch (id) {
  case OperatorId::Rof: return {RofParams{}};
  case OperatorId::TvL1: return {TvL1Params{}};
  case OperatorId::L0Smooth: return {L0Params{}};
  case OperatorId::Rtv: return {RtvParams{}};
  case OperatorId::DarkChannelDehaze: return {DehazeParams{}};
  }
  fail(errc::bad_argument, "bad operator id");
}

const char *operator_name(OperatorId id) {
  switch (id) {
  case OperatorId::Rof: return "rof";
  case OperatorId::TvL1: return "tvl1";
  case OperatorId::L0Smooth: return "l0";
  case OperatorId::Rtv: return "rtv";
  case OperatorId::DarkChannelDehaze: return "dehaze";
  }
  return "?";
}

OperatorId parse_operator(const std::string &name) {
  if (name == "rof") return OperatorId::Rof;
  if (name == "tvl1") return OperatorId::TvL1;
  if (name == "l0") return OperatorId::L0Smooth;
  if (name == "rtv") return OperatorId::Rtv;
  if (name == "dehaze") return OperatorId::DarkChannelDehaze;
  fail(errc::bad_argument, "unknown operator: " + name);
}

double operator_lambda(const OperatorSpec &spec) {
  switch (spec.id()) {
  case OperatorId::Rof: return std::get<RofParams>(spec.params).lambda;
  case OperatorId::TvL1: return std::get<TvL1Params>(spec.params).lambda;
  case OperatorId::L0Smooth: return std::get<L0Params>(spec.params).lambda;
  case OperatorId::Rtv: return std::get<RtvParams>(spec.params).lambda;
  case OperatorId::DarkChannelDehaze:
    fail(errc::bad_argument, "dehazing has no lambda parameter");
  }
  fail(errc::bad_argument, "bad operator id");
}

OperatorSpec with_lambda(OperatorSpec spec, double lambda) {
  switch (spec.id()) {
  case OperatorId::Rof: std::get<RofParams>(spec.params).lambda = lambda; break;
  case OperatorId::TvL1: std::get<TvL1Params>(spec.params).lambda = lambda; break;
  case OperatorId::L0Smooth: std::get<L0Params>(spec.params).lambda = lambda; break;
  case OperatorId::Rtv: std::get<RtvParams>(spec.params).lambda = lambda; break;
  case OperatorId::DarkChannelDehaze:
    fail(errc::bad_argument, "dehazing has no lambda parameter");
  }
  return spec;
}

namespace {

struct EnergyTerms {
  double tv_iso = 0.0;     // sum of per-channel isotropic gradient magnitudes
  double l0_count = 0.0;   // pixels whose channel-summed gradient energy is "on"
  double data_l2 = 0.0;
  double data_l1 = 0.0;
};

EnergyTerms energy_terms(const Image &input, const Image &candidate, double l0_thresh) {
  using solver::Plane;
  EnergyTerms t;
  const int h = input.height, w = input.width, ch = input.channels;
  std::vector<Plane> gx(ch), gy(ch);
  for (int c = 0; c < ch; ++c) {
    Plane j = solver::get_channel(candidate, c);
    solver::grad_forward(j, gx[c], gy[c]);
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int c = 0; c < ch; ++c) {
        const double dx = gx[c].at(y, x), dy = gy[c].at(y, x);
        t.tv_iso += std::sqrt(dx * dx + dy * dy);
        s += dx * dx + dy * dy;
      }
      if (s > l0_thresh) t.l0_count += 1.0;
    }
  for (size_t i = 0; i < input.data.size(); ++i) {
    const double d = static_cast<double>(input.data[i]) - candidate.data[i];
    t.data_l2 += d * d;
    t.data_l1 += std::abs(d);
  }
  return t;
}

double rtv_energy(const Image &input, const Image &candidate, const RtvParams &p) {
  using solver::Plane;
  const int h = input.height, w = input.width;
  double e = 0.0;
  for (int c = 0; c < input.channels; ++c) {
    Plane j = solver::get_channel(candidate, c);
    Plane gx, gy;
    solver::grad_forward(j, gx, gy);
    Plane agx(h, w), agy(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        agx.at(y, x) = std::abs(gx.at(y, x));
        agy.at(y, x) = std::abs(gy.at(y, x));
      }
    Plane dx, dy, lx, ly;
    solver::gaussian_blur(agx, dx, p.sigma);
    solver::gaussian_blur(agy, dy, p.sigma);
    solver::gaussian_blur(gx, lx, p.sigma);
    solver::gaussian_blur(gy, ly, p.sigma);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        e += dx.at(y, x) / (std::abs(lx.at(y, x)) + p.eps) +
             dy.at(y, x) / (std::abs(ly.at(y, x)) + p.eps);
  }
  for (size_t i = 0; i < input.data.size(); ++i) {
    const double d = static_cast<double>(input.data[i]) - candidate.data[i];
    e += p.lambda * d * d;
  }
  return e;
}

} // namespace

double operator_energy(const OperatorSpec &spec, const Image &input, const Image &candidate) {
  if (!input.same_shape(candidate))
    fail(errc::dimension_mismatch, "energy operands must share dimensions");
  switch (spec.id()) {
  case OperatorId::Rof: {
    const RofParams &p = std::get<RofParams>(spec.params);
    EnergyTerms t = energy_terms(input, candidate, 0.0);
    return t.tv_iso + p.lambda * t.data_l2;
  }
  case OperatorId::TvL1: {
    const TvL1Params &p = std::get<TvL1Params>(spec.params);
    EnergyTerms t = energy_terms(input, candidate, 0.0);
    return t.tv_iso + p.lambda * t.data_l1;
  }
  case OperatorId::L0Smooth: {
    const L0Params &p = std::get<L0Params>(spec.params);
    // a gradient counts as nonzero above the solver's terminal resolution
    // 1/beta_max; exact zero tests are meaningless on iterative output
    EnergyTerms t = energy_terms(input, candidate, 1.0 / p.beta_max);
    return t.l0_count + p.lambda * t.data_l2;
  }
  case OperatorId::Rtv:
    return rtv_energy(input, candidate, std::get<RtvParams>(spec.params));
  case OperatorId::DarkChannelDehaze:
    fail(errc::bad_argument, "dehazing has no variational objective");
  }
  fail(errc::bad_argument, "bad operator id");
}

Image apply_operator(const OperatorSpec &spec, const Image &img) {
  switch (spec.id()) {
  case OperatorId::Rof: return rof(img, std::get<RofParams>(spec.params));
  case OperatorId::TvL1: return tvl1(img, std::get<TvL1Params>(spec.params));
  case OperatorId::L0Smooth: return l0_smooth(img, std::get<L0Params>(spec.params));
  case OperatorId::Rtv: return rtv(img, std::get<RtvParams>(spec.params));
  case OperatorId::DarkChannelDehaze:
    return dehaze_dark_channel(img, std::get<DehazeParams>(spec.params)).first;
  }
  fail(errc::bad_argument, "bad operator id");
}

} // namespace can
