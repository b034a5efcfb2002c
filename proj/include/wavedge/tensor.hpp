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

#ifndef WAVEDGE_TENSOR_HPP_
#define WAVEDGE_TENSOR_HPP_

#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavedge {

#ifdef WAVEDGE_FLOAT32
using Real = float;
#else
using Real = double;
#endif

/// Raised for any shape or argument contract violation. The message names
/// the offending dimension or argument.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Shape {
  int64_t n = 0;
  int64_t c = 0;
  int64_t h = 0;
  int64_t w = 0;

  int64_t numel() const { return n * c * h * w; }
  int64_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense (batch, channel, height, width) array, row-major.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = 0);
  Tensor(Shape shape, std::vector<Real> values);
  Tensor(int64_t n, int64_t c, int64_t h, int64_t w, Real fill = 0)
      : Tensor(Shape{n, c, h, w}, fill) {}

  static Tensor scalar(Real v) { return Tensor(Shape{1, 1, 1, 1}, v); }

  const Shape& shape() const { return shape_; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }
  const std::vector<Real>& vec() const { return data_; }

  int64_t index(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  Real& at(int64_t n, int64_t c, int64_t h, int64_t w) { return data_[index(n, c, h, w)]; }
  Real at(int64_t n, int64_t c, int64_t h, int64_t w) const { return data_[index(n, c, h, w)]; }
  Real& operator[](int64_t i) { return data_[i]; }
  Real operator[](int64_t i) const { return data_[i]; }

  /// Pointer to the (n, c) plane.
  Real* plane(int64_t n, int64_t c) { return data_.data() + (n * shape_.c + c) * shape_.plane(); }
  const Real* plane(int64_t n, int64_t c) const {
    return data_.data() + (n * shape_.c + c) * shape_.plane();
  }

  Real item() const;
  Tensor reshaped(Shape shape) const;
  void fill(Real v);

 private:
  Shape shape_{};
  std::vector<Real> data_;
};

struct Conv2dSpec {
  int64_t stride_h = 1;
  int64_t stride_w = 1;
  int64_t pad_h = 0;
  int64_t pad_w = 0;
  int64_t groups = 1;
};

/// floor((size + 2 * pad - kernel) / stride) + 1
int64_t conv_output_size(int64_t size, int64_t kernel, int64_t stride, int64_t pad);

/// Output shape of conv2d, validating every contract of the spec.
Shape conv2d_output_shape(const Shape& x, const Shape& kernel, const Conv2dSpec& spec);

// Convolution is cross-correlation (no kernel flip) with zero padding.
// kernel has shape (outC, inC / groups, kH, kW); bias, if non-empty, has outC values.
Tensor conv2d(const Tensor& x, const Tensor& kernel, const Conv2dSpec& spec,
              std::span<const Real> bias = {});
Tensor conv2d_grad_input(const Tensor& grad_out, const Tensor& kernel, const Shape& x_shape,
                         const Conv2dSpec& spec);
Tensor conv2d_grad_kernel(const Tensor& grad_out, const Tensor& x, const Shape& kernel_shape,
                          const Conv2dSpec& spec);

// Bilinear resampling by an integer factor, align-corners = false, edge clamped.
Tensor bilinear_upsample(const Tensor& x, int64_t scale);
Tensor bilinear_upsample_grad(const Tensor& grad_out, const Shape& x_shape, int64_t scale);

// Elementwise. Binary ops broadcast any axis whose extent is 1 on one side.
Shape broadcast_shape(const Shape& a, const Shape& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, Real s);
Tensor mul(const Tensor& a, Real s);
/// Sums grad (shaped like the broadcast result) down to `target`.
Tensor reduce_to(const Tensor& grad, const Shape& target);

Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor abs(const Tensor& x);
Real sigmoid(Real x);

// Reductions. channel_* collapse C to 1, global_* collapse H x W to 1 x 1.
Tensor channel_sum(const Tensor& x);
Tensor channel_mean(const Tensor& x);
Tensor channel_max(const Tensor& x);
Tensor global_avg_pool(const Tensor& x);
Tensor global_max_pool(const Tensor& x);
Real sum(const Tensor& x);
Real max_abs_diff(const Tensor& a, const Tensor& b);
Real squared_norm(const Tensor& x);

/// Concatenate along channels; all parts share n, h, w.
Tensor concat_channels(std::span<const Tensor> parts);
Tensor slice_channels(const Tensor& x, int64_t begin, int64_t count);
/// Stack single-sample tensors along the batch axis.
Tensor concat_batch(std::span<const Tensor> parts);
Tensor slice_batch(const Tensor& x, int64_t index);

enum class BnMode { kTrain, kEval };

struct BatchNormResult {
  Tensor output;
  Tensor running_mean;  // updated copies; inputs are never mutated
  Tensor running_var;
  std::vector<Real> batch_mean;
  std::vector<Real> batch_inv_std;
};

/// Per-channel parameters are (1, C, 1, 1) tensors. In train mode the
/// running statistics move toward the batch statistics by `momentum`
/// (running = (1 - momentum) * running + momentum * batch, unbiased var).
BatchNormResult batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                           const Tensor& running_mean, const Tensor& running_var, BnMode mode,
                           Real momentum, Real eps);

/// Spatial gather used for reflect padding and cropping: out(h, w) = x(rows[h], cols[w]).
Tensor gather_spatial(const Tensor& x, std::span<const int64_t> rows,
                      std::span<const int64_t> cols);
Tensor gather_spatial_grad(const Tensor& grad_out, const Shape& x_shape,
                           std::span<const int64_t> rows, std::span<const int64_t> cols);
/// Mirror index i into [0, n) without repeating the edge sample.
int64_t reflect_index(int64_t i, int64_t n);

bool all_finite(const Tensor& x);

}  // namespace wavedge

#endif  // WAVEDGE_TENSOR_HPP_
