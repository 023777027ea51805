// Copyright Contributors to the sxf Project
// SPDX-License-Identifier: Apache-2.0

#include "sxf/image_io.h"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "sxf/error.h"

namespace sxf {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

Tensor read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) raise(ErrorCategory::io, "png: cannot open " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) raise(ErrorCategory::internal, "png: reader allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    raise(ErrorCategory::internal, "png: info allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    raise(ErrorCategory::format, "png: malformed file " + path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::vector<uint8_t> raw(static_cast<size_t>(w) * h * 3);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<size_t>(y) * w * 3;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  std::vector<float> data(3 * static_cast<size_t>(h) * w);
  const size_t plane = static_cast<size_t>(h) * w;
  for (size_t p = 0; p < plane; ++p)
    for (int k = 0; k < 3; ++k)
      data[k * plane + p] = static_cast<float>(raw[p * 3 + k]) / 255.0f;
  return Tensor::from_vector({1, 3, static_cast<int>(h), static_cast<int>(w)},
                             std::move(data));
}

void write_png(const std::string& path, const Tensor& image) {
  const Shape& s = image.shape();
  if (s.n != 1 || (s.c != 3 && s.c != 1))
    raise(ErrorCategory::shape, "png: image must be (1,3,H,W) or (1,1,H,W), got " +
                                    s.str());

  const size_t plane = static_cast<size_t>(s.h) * s.w;
  std::vector<uint8_t> raw(plane * 3);
  const float* d = image.data();
  for (size_t p = 0; p < plane; ++p)
    for (int k = 0; k < 3; ++k) {
      const float v = d[(s.c == 3 ? k : 0) * plane + p];
      const float c = std::min(std::max(v, 0.0f), 1.0f);
      raw[p * 3 + k] = static_cast<uint8_t>(std::lround(c * 255.0f));
    }

  const std::string tmp = path + ".tmp";
  {
    FilePtr fp(std::fopen(tmp.c_str(), "wb"));
    if (!fp) raise(ErrorCategory::io, "png: cannot write " + tmp);
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) raise(ErrorCategory::internal, "png: writer allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
      png_destroy_write_struct(&png, nullptr);
      raise(ErrorCategory::internal, "png: info allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      raise(ErrorCategory::io, "png: write failed for " + tmp);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(s.w),
                 static_cast<png_uint_32>(s.h), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(s.h);
    for (int y = 0; y < s.h; ++y)
      rows[y] = raw.data() + static_cast<size_t>(y) * s.w * 3;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    raise(ErrorCategory::io, "png: cannot rename " + tmp + " to " + path);
}

}  // namespace sxf
