#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "can/dataset.hpp"
#include "can/image.hpp"
#include "can/model.hpp"
#include "can/reference.hpp"

namespace can {

struct TrainConfig {
  long long iterations = 20000; // desk default; paper scale is 500k
  double lr = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int min_res = 128; // desk defaults; paper scale is 320/1440
  int max_res = 256;
  uint64_t seed = 0;
  long long checkpoint_every = 5000;
  long long log_every = 100;
  void validate() const;
};

// One buffer per model parameter buffer, same shapes.
struct GradientSet {
  struct LayerGrads {
    std::vector<float> weights, bias, gamma, beta;
    float lambda_s = 0.0f, mu_s = 0.0f;
  };
  std::vector<LayerGrads> layers;

  static GradientSet zeros_like(const CanModel &m);
  bool all_finite() const;
};

struct AdamState {
  GradientSet m, v; // first and second moments
  long long t = 0;
  static AdamState init(const CanModel &model);
};

struct LossGrad {
  double loss = 0.0;
  GradientSet grads;
};

// Training-mode forward plus reverse-mode differentiation through the 1x1
// projection, LReLU, normalization (including the single-image batch
// statistics and lambda_s/mu_s) and all dilated convolutions.
// loss = sum over pixels and channels of squared error, over pixel count.
LossGrad loss_and_grad(CanModel &model, const Image &input, std::span<const float> aux,
                       const Image &target, bool update_running_stats = true);

// Standard Adam with bias correction; increments state.t.
void adam_step(CanModel &model, const GradientSet &grads, AdamState &state,
               const TrainConfig &cfg);

// Uniform addressing of every trainable parameter (tests, finite differences).
enum class ParamKind { Weights, Bias, Gamma, Beta, LambdaS, MuS };
struct ParamRef {
  int layer = 0;
  ParamKind kind = ParamKind::Weights;
  size_t index = 0;
};
std::vector<ParamRef> enumerate_params(const CanModel &m);
float &param_at(CanModel &m, const ParamRef &p);
double &param_at(ref::Model64 &m, const ParamRef &p);
float grad_at(const GradientSet &g, const ParamRef &p);
const char *param_kind_name(ParamKind k);

struct GradCheckOptions {
  int trials = 21; // split across the three norm modes
  int max_depth = 5;
  int max_width = 8;
  int max_size = 8;
  // small enough to resolve batch-norm curvature on tiny images, large
  // enough that double-precision cancellation stays near 1e-10
  double fd_step = 3e-6;
  uint64_t seed = 1;
  // test hook: applied to the analytic gradients before comparison
  std::function<void(GradientSet &)> mutate_grads;
};

struct GradCheckReport {
  int trials = 0;
  double max_rel_error = 0.0;
  double max_by_kind[6] = {0, 0, 0, 0, 0, 0}; // indexed by ParamKind
  ParamRef worst;                             // where max_rel_error occurred
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  int worst_trial = -1;
};

// Compares every analytic gradient against central finite differences of
// the double-precision reference forward. Relative error is
// |a - n| / max(|a|, |n|, 1).
GradCheckReport gradient_check(const GradCheckOptions &opt);

struct LossLogEntry {
  long long iteration = 0;
  double loss = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  std::vector<LossLogEntry> log;
};

// One sampled image per iteration: sample -> loss_and_grad -> adam_step.
// The model is serialized to checkpoint_path every checkpoint_every
// iterations and at the end; a divergent loss aborts with the last good
// checkpoint left on disk. Loss CSV columns: iteration,loss,wall_ms.
TrainResult train(CanModel &model, const LoadedDataset &ds, const TrainConfig &cfg,
                  const std::string &checkpoint_path = "",
                  const std::string &loss_csv_path = "");

} // namespace can
