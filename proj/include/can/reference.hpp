#pragma once

#include <vector>

#include "can/forward.hpp"
#include "can/model.hpp"
#include "can/tensor.hpp"

// Serial double-precision reference implementations. Slow, single-threaded,
// naive loops; used as oracles in tests, by gradient_check, and as the
// baseline in the kernel benchmark.
namespace can::ref {

struct Tensor64 {
  int height = 0, width = 0, channels = 0;
  std::vector<double> data;
  Tensor64() = default;
  Tensor64(int h, int w, int c) : height(h), width(w), channels(c),
                                  data(static_cast<size_t>(h) * w * c, 0.0) {}
  double &at(int y, int x, int ch) { return data[(static_cast<size_t>(y) * width + x) * channels + ch]; }
  double at(int y, int x, int ch) const { return data[(static_cast<size_t>(y) * width + x) * channels + ch]; }
};

Tensor64 widen(const Tensor &t);
Tensor64 widen(const Image &img);

// A CanModel with every parameter held in double.
struct Model64 {
  CanConfig config;
  struct Layer {
    int in_channels = 0, out_channels = 0, dilation = 1, taps = 9;
    std::vector<double> weights, bias, gamma, beta, running_mean, running_var;
    double lambda_s = 1.0, mu_s = 0.0;
  };
  std::vector<Layer> layers;
};

Model64 widen(const CanModel &m);

// Naive triple-loop dilated 3x3 convolution, zero padding of width r.
Tensor64 conv3x3(const Tensor64 &in, const std::vector<double> &k,
                 const std::vector<double> &bias, int cout, int r);
Tensor64 conv1x1(const Tensor64 &in, const std::vector<double> &k,
                 const std::vector<double> &bias, int cout);
void lrelu(Tensor64 &t, double alpha);

// Full forward pass in double; training selects batch statistics.
Tensor64 forward(const Model64 &m, const Tensor64 &input, bool training);

// Mean-squared regression loss, channels summed, divided by pixel count.
double loss(const Tensor64 &output, const Image &target);

double loss_for_model(const Model64 &m, const Tensor64 &input, const Image &target,
                      bool training);

} // namespace can::ref
