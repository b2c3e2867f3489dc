// Copyright 2026 The boxseg Authors
// SPDX-License-Identifier: Apache-2.0
//
// 8-bit single-channel PNG I/O for label rasters. Palette PNGs are read as
// raw indices (the VOC convention); nothing is colour-converted.

#pragma once

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "boxseg/error.hpp"
#include "boxseg/maskgeom.hpp"

namespace boxseg {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline void png_warning_silent(png_structp, png_const_charp) {}

inline thread_local std::string png_last_error;

[[noreturn]] inline void png_error_capture(png_structp png, png_const_charp msg) {
  png_last_error = msg != nullptr ? msg : "unknown libpng error";
  png_longjmp(png, 1);
}

}  // namespace detail

inline LabelRaster read_png_labels(const std::string& path) {
  detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_error_capture,
                                           detail::png_warning_silent);
  if (png == nullptr) throw IoError("libpng init failed for " + path);
  png_infop info = png_create_info_struct(png);
  // Everything libpng may longjmp over is declared before setjmp.
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("cannot decode PNG " + path + ": " + detail::png_last_error);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  const bool single_channel = color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_PALETTE;
  if (!single_channel || bit_depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError(path + ": expected an 8-bit grayscale or palette PNG");
  }
  pixels.resize(static_cast<std::size_t>(width) * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * width;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return LabelRaster(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

/// Writes an 8-bit grayscale PNG. Output bytes depend only on the raster
/// (no timestamps or text chunks).
inline void write_png_labels(const std::string& path, const LabelRaster& raster) {
  detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot create " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_error_capture,
                                            detail::png_warning_silent);
  if (png == nullptr) throw IoError("libpng init failed for " + path);
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(static_cast<std::size_t>(raster.height()));
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("cannot encode PNG " + path + ": " + detail::png_last_error);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(raster.width()),
               static_cast<png_uint_32>(raster.height()), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 9);
  png_write_info(png, info);
  auto* base = const_cast<std::uint8_t*>(raster.pixels().data());
  for (int y = 0; y < raster.height(); ++y) {
    rows[static_cast<std::size_t>(y)] = base + static_cast<std::size_t>(y) * raster.width();
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(fp.get()) != 0) throw IoError("write failed for " + path);
}

}  // namespace boxseg
