/* Copyright 2026 The wavedge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "wavedge/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace wavedge::io {
namespace {

std::string extension(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// PNM header token, skipping whitespace and # comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const std::string magic = pnm_token(in);
  Image img;
  if (magic == "P5") {
    img.channels = 1;
  } else if (magic == "P6") {
    img.channels = 3;
  } else {
    throw std::runtime_error(path + ": unsupported PNM type '" + magic + "' (need P5 or P6)");
  }
  try {
    img.width = std::stoll(pnm_token(in));
    img.height = std::stoll(pnm_token(in));
    const int maxval = std::stoi(pnm_token(in));
    if (maxval != 255) throw std::runtime_error("only maxval 255 is supported");
  } catch (const std::logic_error&) {
    throw std::runtime_error(path + ": malformed PNM header");
  }
  if (img.width <= 0 || img.height <= 0) throw std::runtime_error(path + ": empty image");
  img.pixels.resize(static_cast<size_t>(img.width * img.height * img.channels));
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw std::runtime_error(path + ": truncated pixel data");
  }
  return img;
}

void write_pnm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << (img.channels == 1 ? "P5" : "P6") << "\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw std::runtime_error("failed writing " + path);
}

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  *static_cast<std::string*>(png_get_error_ptr(png)) = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

Image read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open " + path);
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) throw std::runtime_error("libpng init failed");
  png_infop info = png_create_info_struct(png);
  Image img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error(path + ": " + err);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_packing(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.channels = png_get_channels(png, info);
  if (img.channels != 1 && img.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error(path + ": unsupported channel count " + std::to_string(img.channels));
  }
  img.pixels.resize(static_cast<size_t>(img.width * img.height * img.channels));
  rows.resize(static_cast<size_t>(img.height));
  for (int64_t y = 0; y < img.height; ++y) {
    rows[static_cast<size_t>(y)] = img.pixels.data() + y * img.width * img.channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::string& path, const Image& img) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write " + path);
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) throw std::runtime_error("libpng init failed");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(static_cast<size_t>(img.height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error(path + ": " + err);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               8, img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int64_t y = 0; y < img.height; ++y) {
    rows[static_cast<size_t>(y)] =
        const_cast<png_bytep>(img.pixels.data() + y * img.width * img.channels);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void check_image(const Image& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument("image must have 1 or 3 channels");
  }
  if (img.pixels.size() != static_cast<size_t>(img.width * img.height * img.channels)) {
    throw std::invalid_argument("image pixel buffer does not match its dimensions");
  }
}

uint8_t quantize(Real v) {
  if (!(v > 0)) return 0;
  if (v >= 1) return 255;
  return static_cast<uint8_t>(std::lround(v * 255));
}

}  // namespace

Image read_image(const std::string& path) {
  const std::string ext = extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
  throw std::runtime_error(path + ": unsupported image extension '" + ext + "'");
}

void write_image(const std::string& path, const Image& image) {
  check_image(image);
  const std::string ext = extension(path);
  if (ext == ".png") {
    write_png(path, image);
  } else if ((ext == ".pgm" && image.channels == 1) || (ext == ".ppm" && image.channels == 3) ||
             ext == ".pnm") {
    write_pnm(path, image);
  } else {
    throw std::runtime_error(path + ": cannot write a " + std::to_string(image.channels) +
                             "-channel image with extension '" + ext + "'");
  }
}

bool is_image_path(const std::string& path) {
  const std::string ext = extension(path);
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

Tensor image_to_tensor(const Image& image) {
  check_image(image);
  Tensor t(Shape{1, 3, image.height, image.width});
  for (int c = 0; c < 3; ++c) {
    const int src = image.channels == 1 ? 0 : c;
    for (int64_t y = 0; y < image.height; ++y) {
      for (int64_t x = 0; x < image.width; ++x) {
        t.at(0, c, y, x) = static_cast<Real>(image.at(y, x, src)) / 255;
      }
    }
  }
  return t;
}

Tensor mask_to_tensor(const Image& image) {
  check_image(image);
  Tensor t(Shape{1, 1, image.height, image.width});
  for (int64_t y = 0; y < image.height; ++y) {
    for (int64_t x = 0; x < image.width; ++x) {
      t.at(0, 0, y, x) = image.at(y, x) > kMaskThreshold ? 1 : 0;
    }
  }
  return t;
}

Tensor gray_to_tensor(const Image& image) {
  check_image(image);
  Tensor t(Shape{1, 1, image.height, image.width});
  for (int64_t y = 0; y < image.height; ++y) {
    for (int64_t x = 0; x < image.width; ++x) {
      t.at(0, 0, y, x) = static_cast<Real>(image.at(y, x)) / 255;
    }
  }
  return t;
}

Image to_gray(const Tensor& t, int64_t n, int64_t c) {
  const Shape& s = t.shape();
  Image img{s.w, s.h, 1, std::vector<uint8_t>(static_cast<size_t>(s.h * s.w))};
  for (int64_t y = 0; y < s.h; ++y) {
    for (int64_t x = 0; x < s.w; ++x) img.pixels[static_cast<size_t>(y * s.w + x)] = quantize(t.at(n, c, y, x));
  }
  return img;
}

Image to_mask(const Tensor& probs, int64_t n) {
  const Shape& s = probs.shape();
  Image img{s.w, s.h, 1, std::vector<uint8_t>(static_cast<size_t>(s.h * s.w))};
  for (int64_t y = 0; y < s.h; ++y) {
    for (int64_t x = 0; x < s.w; ++x) {
      img.pixels[static_cast<size_t>(y * s.w + x)] = probs.at(n, 0, y, x) >= Real(0.5) ? 255 : 0;
    }
  }
  return img;
}

Image to_gray_scaled(const Tensor& t, int64_t n, int64_t c) {
  const Shape& s = t.shape();
  Real lo = t.at(n, c, 0, 0), hi = lo;
  for (int64_t y = 0; y < s.h; ++y) {
    for (int64_t x = 0; x < s.w; ++x) {
      lo = std::min(lo, t.at(n, c, y, x));
      hi = std::max(hi, t.at(n, c, y, x));
    }
  }
  Image img{s.w, s.h, 1, std::vector<uint8_t>(static_cast<size_t>(s.h * s.w), 0)};
  if (hi > lo) {
    for (int64_t y = 0; y < s.h; ++y) {
      for (int64_t x = 0; x < s.w; ++x) {
        img.pixels[static_cast<size_t>(y * s.w + x)] = quantize((t.at(n, c, y, x) - lo) / (hi - lo));
      }
    }
  }
  return img;
}

Image to_rgb(const Tensor& t) {
  const Shape& s = t.shape();
  if (s.c != 3) throw ShapeError("to_rgb needs 3 channels, got " + s.str());
  Image img{s.w, s.h, 3, std::vector<uint8_t>(static_cast<size_t>(s.h * s.w * 3))};
  for (int64_t y = 0; y < s.h; ++y) {
    for (int64_t x = 0; x < s.w; ++x) {
      for (int c = 0; c < 3; ++c) {
        img.pixels[static_cast<size_t>((y * s.w + x) * 3 + c)] = quantize(t.at(0, c, y, x));
      }
    }
  }
  return img;
}

}  // namespace wavedge::io
