#pragma once

#include <array>
#include <string>
#include <utility>
#include <variant>

#include "can/image.hpp"

namespace can {

// Chambolle-Pock settings sigma = tau = 1/sqrt(8), theta = 1 satisfy the
// convergence condition sigma*tau*8 <= 1 for the forward-difference gradient.
struct RofParams {
  double lambda = 10.0; // data-term weight
  double sigma = 0.35355339059327373;
  double tau = 0.35355339059327373;
  double theta = 1.0;
  int iters = 300;
  void validate() const;
};

struct TvL1Params {
  double lambda = 1.0;
  double sigma = 0.35355339059327373;
  double tau = 0.35355339059327373;
  double theta = 1.0;
  int iters = 300;
  void validate() const;
};

struct L0Params {
  double lambda = 20.0; // data-term weight
  double beta0 = 2.0;
  double kappa = 2.0;
  double beta_max = 1e5;
  void validate() const;
};

struct RtvParams {
  double lambda = 100.0; // data-term weight
  double sigma = 3.0;    // Gaussian scale in pixels
  double eps = 1e-3;
  double eps_s = 0.02;
  int outer_iters = 4;
  double cg_tol = 1e-5;
  int cg_max_iters = 1000;
  void validate() const;
};

struct DehazeParams {
  int patch_radius = 7;
  double omega = 0.95;       // haze retention in (0,1]
  double t0 = 0.1;           // transmission floor
  double top_fraction = 0.001;
  int guided_radius = 30;
  double guided_eps = 1e-3;
  void validate() const;
};

struct DehazeDecomposition {
  std::array<float, 3> atmospheric_light{};
  Image transmission; // 1 channel, values in [t0, 1]
  Image radiance;
};

enum class OperatorId { Rof, TvL1, L0Smooth, Rtv, DarkChannelDehaze };

struct OperatorSpec {
  std::variant<RofParams, TvL1Params, L0Params, RtvParams, DehazeParams> params;
  OperatorId id() const { return static_cast<OperatorId>(params.index()); }
  static OperatorSpec make(OperatorId id);
};

const char *operator_name(OperatorId id);
OperatorId parse_operator(const std::string &name);
double operator_lambda(const OperatorSpec &spec); // errors for dehaze
OperatorSpec with_lambda(OperatorSpec spec, double lambda);

// Appendix-style variational restorations; RGB images are processed
// channel-wise (the L0 gradient test couples channels).
Image rof(const Image &img, const RofParams &p);
Image tvl1(const Image &img, const TvL1Params &p);
Image l0_smooth(const Image &img, const L0Params &p);
Image rtv(const Image &img, const RtvParams &p);

std::pair<Image, DehazeDecomposition> dehaze_dark_channel(const Image &img,
                                                          const DehazeParams &p);

// Local linear model a = cov/(var+eps), b = mean(src) - a*mean(guide);
// box means over (2r+1)^2 windows with replicate boundary.
Image guided_filter(const Image &guide, const Image &src, int radius, double eps);

// Value of the variational objective under the shared discretization
// (forward differences, replicate boundary). Errors for dehaze.
double operator_energy(const OperatorSpec &spec, const Image &input,
                       const Image &candidate);

Image apply_operator(const OperatorSpec &spec, const Image &img);

} // namespace can
