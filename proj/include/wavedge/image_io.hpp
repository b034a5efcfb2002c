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

#ifndef WAVEDGE_IMAGE_IO_HPP_
#define WAVEDGE_IMAGE_IO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "wavedge/tensor.hpp"

namespace wavedge::io {

// 8-bit rasters. Readers accept binary PGM (P5), PPM (P6) and PNG (gray, gray+alpha,
// RGB, RGBA, palette; 16-bit is reduced to 8). Writers pick the format from the
// extension: .pgm / .ppm / .png.

struct Image {
  int64_t width = 0;
  int64_t height = 0;
  int channels = 1;  // 1 or 3
  std::vector<uint8_t> pixels;  // row-major, interleaved

  uint8_t at(int64_t y, int64_t x, int c = 0) const {
    return pixels[static_cast<size_t>((y * width + x) * channels + c)];
  }
};

/// Mask pixels strictly above this value are foreground.
inline constexpr uint8_t kMaskThreshold = 127;

Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& image);

/// (1, 3, H, W) in [0, 1]; grayscale is replicated.
Tensor image_to_tensor(const Image& image);
/// (1, 1, H, W) in {0, 1}. RGB masks use the first channel.
Tensor mask_to_tensor(const Image& image);
/// (1, 1, H, W) grayscale in [0, 1], unbinarized (predicted probability maps).
Tensor gray_to_tensor(const Image& image);

/// Plane (n, c) of a tensor scaled by 255 and rounded, clamped to [0, 255].
Image to_gray(const Tensor& t, int64_t n = 0, int64_t c = 0);
/// Binary mask at probability threshold 0.5 written as 0 / 255.
Image to_mask(const Tensor& probs, int64_t n = 0);
/// Min-max scaled plane; a constant plane maps to 0.
Image to_gray_scaled(const Tensor& t, int64_t n = 0, int64_t c = 0);
/// (1, 3, H, W) in [0, 1] to RGB.
Image to_rgb(const Tensor& t);

bool is_image_path(const std::string& path);

}  // namespace wavedge::io

#endif  // WAVEDGE_IMAGE_IO_HPP_
