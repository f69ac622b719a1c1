#pragma once

#include <cstddef>
#include <vector>

namespace can::kernels {

// 3x3 dilated convolution, zero padding of width r on all sides.
//   out(y,x,o) = bias[o] + sum_{b in {-1,0,1}^2} sum_j in(y - r*b.row, x - r*b.col, j) * k[b][j][o]
// Weight layout: k[(tap_row*3 + tap_col) * cin * cout + j * cout + o], the
// serialized order. Products in float32, per-pixel accumulation in float64.
// Row-parallel; output is bit-identical for any thread count.
void conv3x3_forward(const float *in, int h, int w, int cin, const float *k,
                     const float *bias, int cout, int r, float *out);

// 1x1 projection: out(y,x,o) = bias[o] + sum_j in(y,x,j) * k[j*cout + o]
void conv1x1_forward(const float *in, int h, int w, int cin, const float *k,
                     const float *bias, int cout, float *out);

// din(y,x,j) = sum_b sum_o k[b][j][o] * dout(y + r*b.row, x + r*b.col, o)
void conv3x3_backward_data(const float *dout, int h, int w, int cout,
                           const float *k, int cin, int r, float *din);

// dk[b][j][o] = sum_{y,x} in(y - r*b.row, x - r*b.col, j) * dout(y,x,o)
// db[o] = sum_{y,x} dout(y,x,o)
// Per-row partials combined in row index order (deterministic reduction).
void conv3x3_backward_weights(const float *in, const float *dout, int h, int w,
                              int cin, int cout, int r, float *dk, float *db);

void conv1x1_backward_data(const float *dout, int h, int w, int cout,
                           const float *k, int cin, float *din);
void conv1x1_backward_weights(const float *in, const float *dout, int h, int w,
                              int cin, int cout, float *dk, float *db);

void lrelu_forward(float *x, size_t n, float alpha);

// Per-channel spatial mean and biased variance, double accumulation with
// row-ordered partial sums.
void channel_mean_var(const float *x, int h, int w, int c,
                      std::vector<double> &mean, std::vector<double> &var);

} // namespace can::kernels
