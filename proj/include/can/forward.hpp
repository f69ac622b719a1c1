#pragma once

#include <span>
#include <vector>

#include "can/model.hpp"
#include "can/tensor.hpp"

namespace can {

// Appends one constant full-resolution plane per value after RGB.
Tensor attach_aux_channels(const Image &img, std::span<const float> values);

// Ping-pong workspace for inference. Exactly two full-resolution activation
// buffers are ever allocated; buffers_allocated records it.
struct ForwardWorkspace {
  Tensor a, b;
  int buffers_allocated = 0;
};

// Inference-mode forward: dilated conv + normalization + LReLU per layer,
// 1x1 linear projection at the end, no clamping. Batch-norm layers use
// running statistics. Pure function of (model, img, aux).
Image forward(const CanModel &model, const Image &img,
              std::span<const float> aux = {}, ForwardWorkspace *ws = nullptr);

// Training-mode forward: batch norm uses the current image's spatial
// statistics; running statistics are updated in place when update_stats.
Image forward_training(CanModel &model, const Image &img,
                       std::span<const float> aux, bool update_stats);

// Per-layer intermediates kept for backpropagation.
struct ForwardCache {
  std::vector<Tensor> x;           // x[0] = network input, x[s+1] = LReLU output of layer s
  std::vector<Tensor> pre_norm;    // conv output u_s per 3x3 layer
  std::vector<std::vector<double>> mean, var; // batch statistics per 3x3 layer
  Tensor output;                   // 1x1 projection result
};

void forward_cached(CanModel &model, const Tensor &input, bool training,
                    bool update_stats, ForwardCache &cache);

} // namespace can
