#include "can/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include <png.h>

namespace can {

namespace {

struct FileHandle {
  FILE *f = nullptr;
  explicit FileHandle(const std::string &path, const char *mode) { f = std::fopen(path.c_str(), mode); }
  ~FileHandle() {
    if (f) std::fclose(f);
  }
  FileHandle(const FileHandle &) = delete;
  FileHandle &operator=(const FileHandle &) = delete;
};

} // namespace

Image load_image(const std::string &path) {
  FileHandle file(path, "rb");
  if (!file.f) fail(errc::file_not_found, "cannot open " + path);

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.f) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    fail(errc::png_malformed, "not a PNG stream: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(errc::png_malformed, "libpng init failed");
  }

  // libpng reports errors through longjmp; keep everything reachable from
  // here in plain storage so no destructor is skipped.
  std::vector<unsigned char> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0, h = 0;
  int bit_depth = 0, color_type = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(errc::png_malformed, "malformed PNG: " + path);
  }

  png_init_io(png, file.f);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);

  if (bit_depth != 8 ||
      (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB)) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(errc::png_unsupported,
         "unsupported PNG (need 8-bit gray or RGB, no alpha): " + path);
  }

  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const int channels = color_type == PNG_COLOR_TYPE_GRAY ? 1 : 3;
  pixels.resize(static_cast<size_t>(h) * w * channels);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y)
    rows[y] = pixels.data() + static_cast<size_t>(y) * w * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(static_cast<int>(h), static_cast<int>(w), channels);
  for (size_t i = 0; i < pixels.size(); ++i)
    img.data[i] = static_cast<float>(pixels[i]) / 255.0f;
  return img;
}

void save_image(const Image &img, const std::string &path) {
  if (img.channels != 1 && img.channels != 3)
    fail(errc::bad_argument, "save_image expects 1 or 3 channels");
  if (!all_finite(img)) fail(errc::non_finite_value, "image contains NaN/Inf samples");

  std::vector<unsigned char> pixels(img.sample_count());
  for (size_t i = 0; i < pixels.size(); ++i) {
    double v = std::clamp(static_cast<double>(img.data[i]), 0.0, 1.0);
    pixels[i] = static_cast<unsigned char>(static_cast<int>(v * 255.0 + 0.5));
  }

  FileHandle file(path, "wb");
  if (!file.f) fail(errc::file_write_failed, "cannot write " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(errc::file_write_failed, "libpng init failed");
  }

  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = pixels.data() + static_cast<size_t>(y) * img.width * img.channels;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(errc::file_write_failed, "PNG write failed: " + path);
  }

  png_init_io(png, file.f);
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

} // namespace can
