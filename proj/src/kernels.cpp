#include "can/kernels.hpp"

#include <algorithm>
#include <cstring>

#include "can/parallel.hpp"

namespace can::kernels {

void conv3x3_forward(const float *in, int h, int w, int cin, const float *k,
                     const float *bias, int cout, int r, float *out) {
  const int nt = can::threads();
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    std::vector<double> acc(static_cast<size_t>(w) * cout);
    for (int x = 0; x < w; ++x)
      for (int o = 0; o < cout; ++o) acc[static_cast<size_t>(x) * cout + o] = bias[o];
    for (int tr = -1; tr <= 1; ++tr) {
      const int ys = y - r * tr;
      if (ys < 0 || ys >= h) continue;
      const float *inrow = in + static_cast<size_t>(ys) * w * cin;
      for (int tc = -1; tc <= 1; ++tc) {
        // x - r*tc must land inside the row; outside is zero padding
        const int x0 = std::max(0, r * tc);
        const int x1 = std::min(w, w + r * tc);
        const float *kt = k + static_cast<size_t>((tr + 1) * 3 + (tc + 1)) * cin * cout;
        for (int x = x0; x < x1; ++x) {
          const float *px = inrow + static_cast<size_t>(x - r * tc) * cin;
          double *a = acc.data() + static_cast<size_t>(x) * cout;
          for (int j = 0; j < cin; ++j) {
            const float v = px[j];
            const float *kj = kt + static_cast<size_t>(j) * cout;
            for (int o = 0; o < cout; ++o) a[o] += static_cast<double>(v * kj[o]);
          }
        }
      }
    }
    float *orow = out + static_cast<size_t>(y) * w * cout;
    for (size_t i = 0; i < static_cast<size_t>(w) * cout; ++i) orow[i] = static_cast<float>(acc[i]);
  }
}

void conv1x1_forward(const float *in, int h, int w, int cin, const float *k,
                     const float *bias, int cout, float *out) {
  const int nt = can::threads();
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    const float *irow = in + static_cast<size_t>(y) * w * cin;
    float *orow = out + static_cast<size_t>(y) * w * cout;
    std::vector<double> acc(cout);
    for (int x = 0; x < w; ++x) {
      for (int o = 0; o < cout; ++o) acc[o] = bias[o];
      const float *px = irow + static_cast<size_t>(x) * cin;
      for (int j = 0; j < cin; ++j) {
        const float v = px[j];
        const float *kj = k + static_cast<size_t>(j) * cout;
        for (int o = 0; o < cout; ++o) acc[o] += static_cast<double>(v * kj[o]);
      }
      for (int o = 0; o < cout; ++o) orow[static_cast<size_t>(x) * cout + o] = static_cast<float>(acc[o]);
    }
  }
}

void conv3x3_backward_data(const float *dout, int h, int w, int cout,
                           const float *k, int cin, int r, float *din) {
  // transpose to kt[tap][o][j] so the inner loop is unit-stride over j
  std::vector<float> ktr(static_cast<size_t>(9) * cout * cin);
  for (int t = 0; t < 9; ++t)
    for (int j = 0; j < cin; ++j)
      for (int o = 0; o < cout; ++o)
        ktr[(static_cast<size_t>(t) * cout + o) * cin + j] =
            k[(static_cast<size_t>(t) * cin + j) * cout + o];

  const int nt = can::threads();
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    std::vector<double> acc(static_cast<size_t>(w) * cin, 0.0);
    for (int tr = -1; tr <= 1; ++tr) {
      const int yd = y + r * tr;
      if (yd < 0 || yd >= h) continue;
      const float *drow = dout + static_cast<size_t>(yd) * w * cout;
      for (int tc = -1; tc <= 1; ++tc) {
        // x + r*tc must land inside the dout row
        const int x0 = std::max(0, -r * tc);
        const int x1 = std::min(w, w - r * tc);
        const float *kt = ktr.data() + static_cast<size_t>((tr + 1) * 3 + (tc + 1)) * cin * cout;
        for (int x = x0; x < x1; ++x) {
          const float *pd = drow + static_cast<size_t>(x + r * tc) * cout;
          double *a = acc.data() + static_cast<size_t>(x) * cin;
          for (int o = 0; o < cout; ++o) {
            const float v = pd[o];
            const float *ko = kt + static_cast<size_t>(o) * cin;
            for (int j = 0; j < cin; ++j) a[j] += static_cast<double>(v * ko[j]);
          }
        }
      }
    }
    float *orow = din + static_cast<size_t>(y) * w * cin;
    for (size_t i = 0; i < static_cast<size_t>(w) * cin; ++i) orow[i] = static_cast<float>(acc[i]);
  }
}

void conv3x3_backward_weights(const float *in, const float *dout, int h, int w,
                              int cin, int cout, int r, float *dk, float *db) {
  const size_t ksize = static_cast<size_t>(9) * cin * cout;
  std::vector<double> rowk(static_cast<size_t>(h) * ksize, 0.0);
  std::vector<double> rowb(static_cast<size_t>(h) * cout, 0.0);
  const int nt = can::threads();
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    double *pk = rowk.data() + static_cast<size_t>(y) * ksize;
    double *pb = rowb.data() + static_cast<size_t>(y) * cout;
    const float *drow = dout + static_cast<size_t>(y) * w * cout;
    for (int x = 0; x < w; ++x) {
      const float *pd = drow + static_cast<size_t>(x) * cout;
      for (int o = 0; o < cout; ++o) pb[o] += static_cast<double>(pd[o]);
    }
    for (int tr = -1; tr <= 1; ++tr) {
      const int ys = y - r * tr;
      if (ys < 0 || ys >= h) continue;
      const float *irow = in + static_cast<size_t>(ys) * w * cin;
      for (int tc = -1; tc <= 1; ++tc) {
        const int x0 = std::max(0, r * tc);
        const int x1 = std::min(w, w + r * tc);
        double *kt = pk + static_cast<size_t>((tr + 1) * 3 + (tc + 1)) * cin * cout;
        for (int x = x0; x < x1; ++x) {
          const float *px = irow + static_cast<size_t>(x - r * tc) * cin;
          const float *pd = drow + static_cast<size_t>(x) * cout;
          for (int j = 0; j < cin; ++j) {
            const float v = px[j];
            double *kj = kt + static_cast<size_t>(j) * cout;
            for (int o = 0; o < cout; ++o) kj[o] += static_cast<double>(v * pd[o]);
          }
        }
      }
    }
  }
  // combine per-row partials in row order
  std::vector<double> acck(ksize, 0.0), accb(cout, 0.0);
  for (int y = 0; y < h; ++y) {
    const double *pk = rowk.data() + static_cast<size_t>(y) * ksize;
    const double *pb = rowb.data() + static_cast<size_t>(y) * cout;
    for (size_t i = 0; i < ksize; ++i) acck[i] += pk[i];
    for (int o = 0; o < cout; ++o) accb[o] += pb[o];
  }
  for (size_t i = 0; i < ksize; ++i) dk[i] = static_cast<float>(acck[i]);
  for (int o = 0; o < cout; ++o) db[o] = static_cast<float>(accb[o]);
}

void conv1x1_backward_data(const float *dout, int h, int w, int cout,
                           const float *k, int cin, float *din) {
  const int nt = can::threads();
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    const float *drow = dout + static_cast<size_t>(y) * w * cout;
    float *orow = din + static_cast<size_t>(y) * w * cin;
    for (int x = 0; x < w; ++x) {
      const float *pd = drow + static_cast<size_t>(x) * cout;
      float *po = orow + static_cast<size_t>(x) * cin;
      for (int j = 0; j < cin; ++j) {
        const float *kj = k + static_cast<size_t>(j) * cout;
        double s = 0.0;
        for (int o = 0; o < cout; ++o) s += static_cast<double>(kj[o] * pd[o]);
        po[j] = static_cast<float>(s);
      }
    }
  }
}

void conv1x1_backward_weights(const float *in, const float *dout, int h, int w,
                              int cin, int cout, float *dk, float *db) {
  const size_t ksize = static_cast<size_t>(cin) * cout;
  std::vector<double> rowk(static_cast<size_t>(h) * ksize, 0.0);
  std::vector<double> rowb(static_cast<size_t>(h) * cout, 0.0);
  const int nt = can::threads();
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    double *pk = rowk.data() + static_cast<size_t>(y) * ksize;
    double *pb = rowb.data() + static_cast<size_t>(y) * cout;
    const float *irow = in + static_cast<size_t>(y) * w * cin;
    const float *drow = dout + static_cast<size_t>(y) * w * cout;
    for (int x = 0; x < w; ++x) {
      const float *px = irow + static_cast<size_t>(x) * cin;
      const float *pd = drow + static_cast<size_t>(x) * cout;
      for (int o = 0; o < cout; ++o) pb[o] += static_cast<double>(pd[o]);
      for (int j = 0; j < cin; ++j) {
        const float v = px[j];
        double *kj = pk + static_cast<size_t>(j) * cout;
        for (int o = 0; o < cout; ++o) kj[o] += static_cast<double>(v * pd[o]);
      }
    }
  }
  std::vector<double> acck(ksize, 0.0), accb(cout, 0.0);
  for (int y = 0; y < h; ++y) {
    const double *pk = rowk.data() + static_cast<size_t>(y) * ksize;
    const double *pb = rowb.data() + static_cast<size_t>(y) * cout;
    for (size_t i = 0; i < ksize; ++i) acck[i] += pk[i];
    for (int o = 0; o < cout; ++o) accb[o] += pb[o];
  }
  for (size_t i = 0; i < ksize; ++i) dk[i] = static_cast<float>(acck[i]);
  for (int o = 0; o < cout; ++o) db[o] = static_cast<float>(accb[o]);
}

void lrelu_forward(float *x, size_t n, float alpha) {
  const int nt = can::threads();
  const long long ln = static_cast<long long>(n);
#pragma omp parallel for num_threads(nt) schedule(static)
  for (long long i = 0; i < ln; ++i) x[i] = x[i] > 0.0f ? x[i] : alpha * x[i];
}

void channel_mean_var(const float *x, int h, int w, int c,
                      std::vector<double> &mean, std::vector<double> &var) {
  std::vector<double> rowsum(static_cast<size_t>(h) * c, 0.0);
  std::vector<double> rowsq(static_cast<size_t>(h) * c, 0.0);
  const int nt = can::threads();
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int y = 0; y < h; ++y) {
    double *ps = rowsum.data() + static_cast<size_t>(y) * c;
    double *pq = rowsq.data() + static_cast<size_t>(y) * c;
    const float *row = x + static_cast<size_t>(y) * w * c;
    for (int xx = 0; xx < w; ++xx) {
      const float *px = row + static_cast<size_t>(xx) * c;
      for (int ch = 0; ch < c; ++ch) {
        const double v = px[ch];
        ps[ch] += v;
        pq[ch] += v * v;
      }
    }
  }
  mean.assign(c, 0.0);
  var.assign(c, 0.0);
  for (int y = 0; y < h; ++y) {
    const double *ps = rowsum.data() + static_cast<size_t>(y) * c;
    const double *pq = rowsq.data() + static_cast<size_t>(y) * c;
    for (int ch = 0; ch < c; ++ch) {
      mean[ch] += ps[ch];
      var[ch] += pq[ch];
    }
  }
  const double n = static_cast<double>(h) * w;
  for (int ch = 0; ch < c; ++ch) {
    mean[ch] /= n;
    var[ch] = std::max(0.0, var[ch] / n - mean[ch] * mean[ch]);
  }
}

} // namespace can::kernels
