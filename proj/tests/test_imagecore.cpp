#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>

#include <png.h>

#include "can/image.hpp"
#include "can/image_io.hpp"
#include "can/image_ops.hpp"
#include "can/rng.hpp"

using namespace can;
namespace fs = std::filesystem;

namespace {

std::string tmp_dir() {
  static std::string dir = [] {
    std::string d = (fs::temp_directory_path() / "can_imagecore_tests").string();
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// minimal libpng writer for color types / bit depths save_image refuses to produce
void write_png_raw(const std::string &path, int w, int h, int bit_depth, int color_type,
                   const std::vector<unsigned char> &bytes) {
  FILE *f = std::fopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  REQUIRE(setjmp(png_jmpbuf(png)) == 0);
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const size_t stride = bytes.size() / h;
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = const_cast<unsigned char *>(bytes.data()) + y * stride;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
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

TEST_CASE("png endpoints map to 0 and 1") {
  const std::string p = tmp_dir() + "/white.png";
  save_image(Image(1, 1, 3, 1.0f), p);
  Image white = load_image(p);
  CHECK(white.height == 1);
  CHECK(white.channels == 3);
  for (float v : white.data) CHECK(v == 1.0f);

  save_image(Image(1, 1, 3, 0.0f), p);
  for (float v : load_image(p).data) CHECK(v == 0.0f);
}

TEST_CASE("quantization: round-half-up and clamping") {
  const std::string p = tmp_dir() + "/quant.png";
  Image img(1, 3, 1);
  img.data = {0.5f, 1.7f, -0.2f};
  save_image(img, p);
  Image back = load_image(p);
  CHECK(back.data[0] == 128.0f / 255.0f); // round(127.5) half-up
  CHECK(back.data[1] == 1.0f);
  CHECK(back.data[2] == 0.0f);
}

TEST_CASE("load-save-load is exact for any 8-bit png") {
  Rng rng(42);
  for (int trial = 0; trial < 4; ++trial) {
    const int h = rng.uniform_int(1, 13), w = rng.uniform_int(1, 17);
    const int c = trial % 2 ? 1 : 3;
    Image img(h, w, c);
    for (float &v : img.data) v = static_cast<float>(rng.uniform());
    const std::string p1 = tmp_dir() + "/rt1.png";
    const std::string p2 = tmp_dir() + "/rt2.png";
    save_image(img, p1);
    Image a = load_image(p1);
    save_image(a, p2);
    Image b = load_image(p2);
    REQUIRE(a.same_shape(b));
    CHECK(a.data == b.data); // bit-identical samples
  }
}

TEST_CASE("unsupported pngs are rejected with distinct errors") {
  const std::string p16 = tmp_dir() + "/deep.png";
  write_png_raw(p16, 2, 2, 16, PNG_COLOR_TYPE_GRAY, std::vector<unsigned char>(16, 0x40));
  CHECK(code_of([&] { (void)load_image(p16); }) == errc::png_unsupported);

  const std::string prgba = tmp_dir() + "/alpha.png";
  write_png_raw(prgba, 2, 2, 8, PNG_COLOR_TYPE_RGBA, std::vector<unsigned char>(16, 0x80));
  CHECK(code_of([&] { (void)load_image(prgba); }) == errc::png_unsupported);

  const std::string pbad = tmp_dir() + "/garbage.png";
  std::ofstream(pbad) << "definitely not a png";
  CHECK(code_of([&] { (void)load_image(pbad); }) == errc::png_malformed);

  CHECK(code_of([&] { (void)load_image(tmp_dir() + "/missing.png"); }) == errc::file_not_found);
}

TEST_CASE("bilinear resize: identity, constants, half-pixel centers") {
  Rng rng(7);
  Image img(5, 9, 3);
  for (float &v : img.data) v = static_cast<float>(rng.uniform());
  Image same = resize_bilinear(img, 5, 9);
  CHECK(same.data == img.data);

  Image constant(6, 4, 1, 0.37f);
  Image up = resize_bilinear(constant, 13, 29);
  for (float v : up.data) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));

  Image row(1, 2, 1);
  row.data = {0.0f, 1.0f};
  Image wide = resize_bilinear(row, 1, 4);
  CHECK(wide.data[0] == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(wide.data[1] == doctest::Approx(0.25).epsilon(1e-7));
  CHECK(wide.data[2] == doctest::Approx(0.75).epsilon(1e-7));
  CHECK(wide.data[3] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("resize output stays within the input range") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Image img(rng.uniform_int(2, 12), rng.uniform_int(2, 12), 1);
    for (float &v : img.data) v = static_cast<float>(rng.uniform(-1.0, 2.0));
    const float lo = *std::min_element(img.data.begin(), img.data.end());
    const float hi = *std::max_element(img.data.begin(), img.data.end());
    Image out = resize_bilinear(img, rng.uniform_int(1, 20), rng.uniform_int(1, 20));
    for (float v : out.data) {
      CHECK(v >= lo - 1e-6f);
      CHECK(v <= hi + 1e-6f);
    }
  }
}

TEST_CASE("random_resize draws heights uniformly and deterministically") {
  Image src(100, 1, 1, 0.5f);
  {
    Rng rng(3);
    Image out = random_resize(src, 320, 320, rng);
    CHECK(out.height == 320);
  }
  {
    Rng a(5), b(5);
    Image ra = random_resize(src, 10, 50, a);
    Image rb = random_resize(src, 10, 50, b);
    CHECK(ra.height == rb.height);
    CHECK(ra.data == rb.data);
  }
  {
    Rng rng(9);
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      Image out = random_resize(src, 320, 1440, rng);
      REQUIRE(out.height >= 320);
      REQUIRE(out.height <= 1440);
      sum += out.height;
    }
    // uniform over [320,1440]: mean 880, sd of the sample mean 3.236
    CHECK(std::abs(sum / n - 880.0) < 3.0 * 3.236);
  }
}

TEST_CASE("aspect ratio preserved within rounding") {
  Image src(64, 48, 1, 0.1f);
  Rng rng(17);
  for (int i = 0; i < 20; ++i) {
    Image out = random_resize(src, 20, 200, rng);
    const double expect = out.height * 48.0 / 64.0;
    CHECK(std::abs(out.width - expect) <= 0.5 + 1e-9);
  }
}

TEST_CASE("to_gray uses bt601 weights and passes gray through") {
  Image white(1, 1, 3, 1.0f);
  CHECK(to_gray(white).data[0] == doctest::Approx(1.0).epsilon(1e-6));

  Image red(1, 1, 3);
  red.data = {1.0f, 0.0f, 0.0f};
  CHECK(to_gray(red).data[0] == doctest::Approx(0.299).epsilon(1e-6));

  Image gray(3, 4, 1);
  Rng rng(23);
  for (float &v : gray.data) v = static_cast<float>(rng.uniform());
  CHECK(to_gray(gray).data == gray.data);

  Rng rng2(29);
  Image img(4, 4, 3);
  for (float &v : img.data) v = static_cast<float>(rng2.uniform());
  for (float v : to_gray(img).data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}
