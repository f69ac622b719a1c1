#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "can/forward.hpp"
#include "can/kernels.hpp"
#include "can/model.hpp"
#include "can/parallel.hpp"
#include "can/reference.hpp"
#include "can/rng.hpp"
#include "can/synthetic.hpp"

using namespace can;

namespace {

Image random_image(int h, int w, uint64_t seed) {
  Rng rng(seed);
  Image img(h, w, 3);
  for (float &v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

errc code_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("expected an error");
  return errc::bad_argument;
}

} // namespace

TEST_CASE("dilation schedule doubles then drops to 1") {
  CanConfig cfg;
  cfg.depth = 10;
  CHECK(dilation_schedule(cfg) == std::vector<int>{1, 2, 4, 8, 16, 32, 64, 128, 1});
  cfg.depth = 9;
  CHECK(dilation_schedule(cfg) == std::vector<int>{1, 2, 4, 8, 16, 32, 64, 1});
  cfg.depth = 3;
  CHECK(dilation_schedule(cfg) == std::vector<int>{1, 1});
  cfg.depth = 10;
  cfg.dilation = DilationMode::None;
  CHECK(dilation_schedule(cfg) == std::vector<int>(9, 1));
}

TEST_CASE("receptive field closed forms") {
  CanConfig cfg;
  cfg.depth = 10;
  CHECK(receptive_field(cfg) == 513);
  cfg.depth = 9;
  CHECK(receptive_field(cfg) == 257);
  cfg.depth = 10;
  cfg.dilation = DilationMode::None;
  CHECK(receptive_field(cfg) == 19);
}

TEST_CASE("parameter accounting") {
  CanConfig cfg;
  cfg.depth = 9;
  cfg.width = 24;
  CHECK(param_count(cfg).conv_params == 37203);
  cfg.depth = 10;
  cfg.width = 32;
  CHECK(param_count(cfg).conv_params == 74979);
  cfg.norm = NormMode::None;
  CHECK(param_count(cfg).norm_params == 0);
  cfg.norm = NormMode::Batch;
  CHECK(param_count(cfg).norm_params == 2 * 32 * 9);
  cfg.norm = NormMode::Adaptive;
  CHECK(param_count(cfg).norm_params == 2 * 32 * 9 + 2 * 9);
}

TEST_CASE("dilated convolution: delta response enumerates the taps") {
  Tensor in(5, 5, 1, 0.0f);
  in.at(2, 2, 0) = 1.0f;
  std::vector<float> k(9, 1.0f), bias(1, 0.0f);
  Tensor out(5, 5, 1);
  kernels::conv3x3_forward(in.data.data(), 5, 5, 1, k.data(), bias.data(), 1, 2,
                           out.data.data());
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      const bool tap = (y % 2 == 0) && (x % 2 == 0);
      CHECK(out.at(y, x, 0) == (tap ? 1.0f : 0.0f));
    }
}

TEST_CASE("dilated convolution matches the naive 64-bit oracle") {
  Rng rng(101);
  for (int r : {1, 2, 3}) {
    const int cin = 3, cout = 4;
    Tensor in(9, 9, cin);
    for (float &v : in.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    std::vector<float> k(9 * cin * cout), bias(cout);
    for (float &v : k) v = static_cast<float>(rng.uniform(-0.5, 0.5));
    for (float &v : bias) v = static_cast<float>(rng.uniform(-0.5, 0.5));
    Tensor out(9, 9, cout);
    kernels::conv3x3_forward(in.data.data(), 9, 9, cin, k.data(), bias.data(), cout, r,
                             out.data.data());
    ref::Tensor64 ref_out = ref::conv3x3(ref::widen(in), {k.begin(), k.end()},
                                         {bias.begin(), bias.end()}, cout, r);
    for (size_t i = 0; i < out.data.size(); ++i)
      CHECK(out.data[i] == doctest::Approx(ref_out.data[i]).epsilon(1e-6));
  }
}

TEST_CASE("zero kernels give constant bias output") {
  Tensor in(4, 6, 2);
  Rng rng(5);
  for (float &v : in.data) v = static_cast<float>(rng.uniform());
  std::vector<float> k(9 * 2 * 3, 0.0f), bias = {0.25f, -1.5f, 3.0f};
  Tensor out(4, 6, 3);
  kernels::conv3x3_forward(in.data.data(), 4, 6, 2, k.data(), bias.data(), 3, 1,
                           out.data.data());
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x)
      for (int c = 0; c < 3; ++c) CHECK(out.at(y, x, c) == bias[c]);
}

TEST_CASE("lrelu is pointwise exact") {
  std::vector<float> v = {-2.0f, -0.5f, 0.0f, 0.5f, 3.0f};
  kernels::lrelu_forward(v.data(), v.size(), 0.2f);
  CHECK(v[0] == -0.4f);
  CHECK(v[1] == -0.1f);
  CHECK(v[2] == 0.0f);
  CHECK(v[3] == 0.5f);
  CHECK(v[4] == 3.0f);
}

TEST_CASE("identity initialization gives an identity network") {
  for (NormMode norm : {NormMode::None, NormMode::Adaptive}) {
    CanConfig cfg;
    cfg.depth = 5;
    cfg.width = 12; // divisible by 3 so the output averaging is exact
    cfg.norm = norm;
    cfg.init_noise_std = 0.0f;
    CanModel model = init_model(cfg, 0);
    Image img = random_image(16, 13, 77);
    Image out = forward(model, img);
    REQUIRE(out.same_shape(img));
    for (size_t i = 0; i < img.data.size(); ++i)
      CHECK(out.data[i] == doctest::Approx(img.data[i]).epsilon(1e-5));
  }
}

TEST_CASE("adaptive norm: lambda 1 mu 0 is the identity path") {
  CanConfig cfg;
  cfg.depth = 3;
  cfg.width = 3;
  cfg.norm = NormMode::Adaptive;
  cfg.init_noise_std = 0.0f;
  CanModel model = init_model(cfg, 0); // lambda_s = 1, mu_s = 0
  Image img = random_image(8, 8, 3);
  Image out = forward(model, img);
  for (size_t i = 0; i < img.data.size(); ++i)
    CHECK(out.data[i] == doctest::Approx(img.data[i]).epsilon(1e-5));
}

TEST_CASE("adaptive norm: pure batch branch standardizes the channel") {
  CanConfig cfg;
  cfg.depth = 3;
  cfg.width = 3;
  cfg.norm = NormMode::Adaptive;
  cfg.init_noise_std = 0.0f;
  cfg.lrelu_alpha = 1.0f; // identity nonlinearity so the cache exposes Psi output
  CanModel model = init_model(cfg, 0);
  model.layers[0].lambda_s = 0.0f;
  model.layers[0].mu_s = 1.0f;

  Image img = random_image(10, 9, 19);
  ForwardCache cache;
  CanModel copy = model;
  forward_cached(copy, to_tensor(img), /*training=*/true, false, cache);
  const Tensor &psi = cache.x[1];
  for (int c = 0; c < 3; ++c) {
    double sum = 0, sq = 0;
    for (int y = 0; y < psi.height; ++y)
      for (int x = 0; x < psi.width; ++x) {
        sum += psi.at(y, x, c);
        sq += static_cast<double>(psi.at(y, x, c)) * psi.at(y, x, c);
      }
    const double n = static_cast<double>(psi.height) * psi.width;
    CHECK(sum / n == doctest::Approx(0.0).epsilon(1e-5));
    CHECK(sq / n - (sum / n) * (sum / n) == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("adaptive norm on a constant channel reduces to lambda scaling") {
  CanConfig cfg;
  cfg.depth = 3;
  cfg.width = 3;
  cfg.norm = NormMode::Adaptive;
  cfg.init_noise_std = 0.0f;
  cfg.lrelu_alpha = 1.0f;
  cfg.bn_eps = 1e-5f;
  CanModel model = init_model(cfg, 0);
  model.layers[0].lambda_s = 2.0f;
  model.layers[0].mu_s = 1.0f;

  const float c = 0.4f;
  Image img(6, 6, 3, c);
  ForwardCache cache;
  forward_cached(model, to_tensor(img), /*training=*/true, false, cache);
  for (int ch = 0; ch < 3; ++ch)
    CHECK(cache.x[1].at(3, 3, ch) == doctest::Approx(2.0 * c).epsilon(1e-6));
}

TEST_CASE("forward matches the layer-by-layer 64-bit composition oracle") {
  for (NormMode norm : {NormMode::None, NormMode::Batch, NormMode::Adaptive}) {
    CanConfig cfg;
    cfg.depth = 3;
    cfg.width = 2;
    cfg.norm = norm;
    cfg.init_noise_std = 0.3f;
    CanModel model = init_model(cfg, 42);
    if (norm == NormMode::Adaptive) {
      model.layers[0].lambda_s = 0.8f;
      model.layers[0].mu_s = 0.5f;
      model.layers[1].lambda_s = 1.1f;
      model.layers[1].mu_s = 0.2f;
    }
    Image img = random_image(6, 6, 6);
    Image out = forward(model, img); // inference: running stats
    ref::Tensor64 ref_out = ref::forward(ref::widen(model), ref::widen(to_tensor(img)), false);
    for (size_t i = 0; i < out.data.size(); ++i)
      CHECK(out.data[i] == doctest::Approx(ref_out.data[i]).epsilon(1e-5));
  }
}

TEST_CASE("locality: pixels beyond the receptive field are untouched") {
  CanConfig cfg;
  cfg.depth = 9;
  cfg.width = 24;
  cfg.norm = NormMode::None;
  cfg.init_noise_std = 0.05f;
  CanModel model = init_model(cfg, 9);
  Image img = random_image(300, 300, 4);
  Image base = forward(model, img);
  Image poked = img;
  poked.at(150, 150, 1) += 0.1f;
  Image moved = forward(model, poked);
  const int radius = (receptive_field(cfg) - 1) / 2; // 128
  for (int y = 0; y < 300; ++y)
    for (int x = 0; x < 300; ++x) {
      if (std::max(std::abs(y - 150), std::abs(x - 150)) <= radius) continue;
      for (int c = 0; c < 3; ++c) REQUIRE(base.at(y, x, c) == moved.at(y, x, c));
    }
}

TEST_CASE("forward uses exactly two activation buffers") {
  CanConfig cfg;
  cfg.depth = 6;
  cfg.width = 9;
  CanModel model = init_model(cfg, 1);
  ForwardWorkspace ws;
  (void)forward(model, random_image(20, 20, 2), {}, &ws);
  CHECK(ws.buffers_allocated == 2);
}

TEST_CASE("inference forward is pure and thread-count independent") {
  CanConfig cfg;
  cfg.depth = 5;
  cfg.width = 8;
  cfg.norm = NormMode::Adaptive;
  cfg.init_noise_std = 0.1f;
  CanModel model = init_model(cfg, 31);
  Image img = random_image(33, 47, 8);
  set_threads(1);
  Image a = forward(model, img);
  Image b = forward(model, img);
  CHECK(a.data == b.data);
  set_threads(2);
  Image c = forward(model, img);
  set_threads(1);
  CHECK(a.data == c.data);
}

TEST_CASE("init determinism and symmetry breaking") {
  CanConfig cfg;
  cfg.depth = 9;
  cfg.width = 24;
  CanModel a = init_model(cfg, 123);
  CanModel b = init_model(cfg, 123);
  for (size_t s = 0; s < a.layers.size(); ++s) CHECK(a.layers[s].weights == b.layers[s].weights);

  // noise 0.01: all hidden kernels pairwise distinct
  const ConvLayer &l = a.layers[1];
  const size_t ksz = 9 * static_cast<size_t>(l.in_channels);
  for (int i = 0; i < l.out_channels; ++i)
    for (int j = i + 1; j < l.out_channels; ++j) {
      bool differ = false;
      for (size_t t = 0; t < ksz && !differ; ++t)
        differ = l.weights[t * l.out_channels + i] != l.weights[t * l.out_channels + j];
      REQUIRE(differ);
    }
}

TEST_CASE("serialization round trip is bit-exact, with validation") {
  CanConfig cfg;
  cfg.depth = 4;
  cfg.width = 6;
  cfg.norm = NormMode::Adaptive;
  cfg.aux_channels = 2;
  cfg.init_noise_std = 0.2f;
  CanModel model = init_model(cfg, 55);
  model.layers[0].running_mean[3] = 0.25f; // non-default state must survive

  std::vector<uint8_t> bytes = serialize_model(model);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "CANNET01");

  CanModel back = deserialize_model(bytes);
  CHECK(back.config.depth == cfg.depth);
  CHECK(back.config.aux_channels == 2);
  for (size_t s = 0; s < model.layers.size(); ++s) {
    CHECK(back.layers[s].weights == model.layers[s].weights);
    CHECK(back.layers[s].bias == model.layers[s].bias);
    CHECK(back.layers[s].gamma == model.layers[s].gamma);
    CHECK(back.layers[s].running_mean == model.layers[s].running_mean);
    CHECK(back.layers[s].running_var == model.layers[s].running_var);
    CHECK(back.layers[s].lambda_s == model.layers[s].lambda_s);
  }

  SUBCASE("bad magic") {
    std::vector<uint8_t> bad = bytes;
    bad[0] = 'X';
    CHECK(code_of([&] { (void)deserialize_model(bad); }) == errc::bad_magic);
  }
  SUBCASE("bad version") {
    std::vector<uint8_t> bad = bytes;
    bad[8] = 99;
    CHECK(code_of([&] { (void)deserialize_model(bad); }) == errc::bad_version);
  }
  SUBCASE("truncation") {
    std::vector<uint8_t> bad(bytes.begin(), bytes.end() - 5);
    CHECK(code_of([&] { (void)deserialize_model(bad); }) == errc::truncated_stream);
  }
  SUBCASE("nan payload") {
    std::vector<uint8_t> bad = bytes;
    // first float of the first kernel follows the 44-byte header
    bad[44] = 0x00;
    bad[45] = 0x00;
    bad[46] = 0xc0;
    bad[47] = 0x7f;
    CHECK(code_of([&] { (void)deserialize_model(bad); }) == errc::non_finite_value);
  }
}

TEST_CASE("aux channels become constant planes") {
  Image img = random_image(4, 5, 14);
  std::vector<float> onehot = {0.0f, 0.0f, 1.0f, 0.0f, 0.0f};
  Tensor t = attach_aux_channels(img, onehot);
  CHECK(t.channels == 8);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) {
      for (int c = 0; c < 3; ++c) CHECK(t.at(y, x, c) == img.at(y, x, c));
      for (int a = 0; a < 5; ++a) CHECK(t.at(y, x, 3 + a) == onehot[a]);
    }
}

TEST_CASE("parameter-channel encoding spans -1..1 over the sampled decade") {
  // value = log10(lambda / lambda_bar)
  const double lambda_bar = 8.0;
  CHECK(std::log10(lambda_bar / lambda_bar) == doctest::Approx(0.0));
  CHECK(std::log10(10.0 * lambda_bar / lambda_bar) == doctest::Approx(1.0));
  CHECK(std::log10(0.1 * lambda_bar / lambda_bar) == doctest::Approx(-1.0));
}
