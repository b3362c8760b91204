#include "chromacode/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "chromacode/errors.hpp"

namespace chromacode::io {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = msg;
  std::longjmp(png_jmpbuf(png), 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

RgbImage read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw DataError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw DataError("not a PNG file: " + path.string());

  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng init failed");
  }
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("PNG decode failed for " + path.string() + ": " + err);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int out_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  RgbImage img(width, height);
  if (out_depth == 16) {
    for (int y = 0; y < height; ++y) {
      const auto* row = reinterpret_cast<const std::uint16_t*>(rows[y]);
      for (int x = 0; x < width; ++x)
        for (int c = 0; c < 3; ++c) img[c](x, y) = row[3 * x + c] / 65535.0;
    }
  } else {
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        for (int c = 0; c < 3; ++c) img[c](x, y) = rows[y][3 * x + c] / 255.0;
  }
  return img;
}

void write_png(const std::filesystem::path& path, const RgbImage& img, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ValidationError("PNG bit depth must be 8 or 16");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw DataError("cannot write " + path.string());
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng init failed");
  }
  const int width = img.width();
  const int height = img.height();
  const std::size_t bytes_per_sample = bit_depth / 8;
  std::vector<png_byte> buffer(static_cast<std::size_t>(width) * height * 3 * bytes_per_sample);
  std::vector<png_bytep> rows(height);
  const double scale = bit_depth == 16 ? 65535.0 : 255.0;
  for (int y = 0; y < height; ++y) {
    png_byte* row = buffer.data() + static_cast<std::size_t>(y) * width * 3 * bytes_per_sample;
    rows[y] = row;
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) {
        const auto q = static_cast<unsigned>(std::lround(std::clamp(img[c](x, y), 0.0, 1.0) * scale));
        if (bit_depth == 16) {
          row[2 * (3 * x + c)] = static_cast<png_byte>(q >> 8);
          row[2 * (3 * x + c) + 1] = static_cast<png_byte>(q & 0xff);
        } else {
          row[3 * x + c] = static_cast<png_byte>(q);
        }
      }
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("PNG encode failed for " + path.string() + ": " + err);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_png(const std::filesystem::path& path, const Image& gray, int bit_depth) {
  RgbImage rgb;
  rgb.planes = {gray, gray, gray};
  write_png(path, rgb, bit_depth);
}

namespace {

void write_pfm_planes(const std::filesystem::path& path, const std::vector<const Image*>& planes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const int w = planes[0]->width();
  const int h = planes[0]->height();
  out << (planes.size() == 3 ? "PF" : "Pf") << "\n" << w << " " << h << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(w) * planes.size());
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x)
      for (std::size_t c = 0; c < planes.size(); ++c)
        row[x * planes.size() + c] = static_cast<float>((*planes[c])(x, y));
    if constexpr (std::endian::native == std::endian::big) {
      for (float& f : row) f = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(f)));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw DataError("short write on " + path.string());
}

std::vector<Image> read_pfm_planes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0;
  in >> magic >> w >> h >> scale;
  in.get();
  if ((magic != "PF" && magic != "Pf") || w <= 0 || h <= 0 || scale == 0)
    throw DataError("malformed PFM header in " + path.string());
  const std::size_t nc = magic == "PF" ? 3 : 1;
  const bool little = scale < 0;
  std::vector<Image> planes(nc, Image(w, h));
  std::vector<float> row(static_cast<std::size_t>(w) * nc);
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw DataError("truncated PFM " + path.string());
    const bool swap = little != (std::endian::native == std::endian::little);
    for (int x = 0; x < w; ++x)
      for (std::size_t c = 0; c < nc; ++c) {
        float f = row[x * nc + c];
        if (swap) f = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<std::uint32_t>(f)));
        planes[c](x, y) = f;
      }
  }
  return planes;
}

}  // namespace

void write_pfm(const std::filesystem::path& path, const RgbImage& img) {
  write_pfm_planes(path, {&img[0], &img[1], &img[2]});
}

void write_pfm(const std::filesystem::path& path, const Image& gray) { write_pfm_planes(path, {&gray}); }

RgbImage read_pfm_rgb(const std::filesystem::path& path) {
  auto planes = read_pfm_planes(path);
  RgbImage img;
  if (planes.size() == 3)
    img.planes = {planes[0], planes[1], planes[2]};
  else
    img.planes = {planes[0], planes[0], planes[0]};
  return img;
}

Image read_pfm_gray(const std::filesystem::path& path) {
  auto planes = read_pfm_planes(path);
  if (planes.size() != 1) throw DataError("expected single-channel PFM: " + path.string());
  return planes[0];
}

}  // namespace chromacode::io
