#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "can/error.hpp"
#include "can/rng.hpp"

namespace can {

enum class NormMode : uint32_t { None = 0, Batch = 1, Adaptive = 2 };

// None = "plain" ablation: same structure, every dilation forced to 1.
enum class DilationMode : uint32_t { Exponential = 0, None = 1 };

struct CanConfig {
  int depth = 9; // layer count d, including the 1x1 output layer
  int width = 24;
  NormMode norm = NormMode::Adaptive;
  DilationMode dilation = DilationMode::Exponential;
  float lrelu_alpha = 0.2f;
  int aux_channels = 0;
  float init_noise_std = 0.01f;
  float bn_eps = 1e-5f;
  float bn_momentum = 0.99f;

  int input_channels() const { return 3 + aux_channels; }
  void validate() const;
};

struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int dilation = 1;
  int taps = 9; // 9 for 3x3 layers, 1 for the output projection
  std::vector<float> weights; // [tap][in][out]
  std::vector<float> bias;    // [out]
  // normalization state; empty on the output layer and when norm == None
  std::vector<float> gamma, beta, running_mean, running_var;
  float lambda_s = 1.0f; // identity branch weight
  float mu_s = 0.0f;     // batch-norm branch weight
};

struct CanModel {
  CanConfig config;
  std::vector<ConvLayer> layers; // depth entries; last is the 1x1 projection

  bool all_finite() const;
};

// [2^0, 2^1, ..., 2^(d-3), 1] for the exponential schedule (all ones for
// plain); one entry per 3x3 layer, the 1x1 output layer carries none.
std::vector<int> dilation_schedule(const CanConfig &cfg);

// Side length of the input window one output pixel can see.
int receptive_field(const CanConfig &cfg);

struct ParamCount {
  long long conv_params = 0; // kernel weights + biases, output layer included
  long long norm_params = 0; // gamma/beta (+ lambda_s/mu_s); running stats excluded
};
ParamCount param_count(const CanConfig &cfg);

// Identity-centered init plus Gaussian noise of std init_noise_std on every
// tap. With noise 0, norm None and 3 | width the model is an exact identity
// on [0,1] inputs.
CanModel init_model(const CanConfig &cfg, uint64_t seed);

// CANNET01 container: 8-byte magic, little-endian header, parameter arrays
// in layer order with kernels in (tap_row, tap_col, in, out) order, then
// running statistics. Bit-exact round trip.
std::vector<uint8_t> serialize_model(const CanModel &model);
CanModel deserialize_model(const std::vector<uint8_t> &bytes);

void save_model(const CanModel &model, const std::string &path);
CanModel load_model(const std::string &path);

const char *norm_mode_name(NormMode m);
NormMode parse_norm_mode(const std::string &s);

} // namespace can
