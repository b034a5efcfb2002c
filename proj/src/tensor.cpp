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

#include "wavedge/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace wavedge {
namespace {

using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

// Geometry of one grouped convolution, shared by forward and both adjoints.
struct ConvGeometry {
  int64_t batch, in_c, in_h, in_w;
  int64_t out_c, out_h, out_w;
  int64_t k_h, k_w;
  int64_t groups, in_per_group, out_per_group;
  int64_t patch;   // in_per_group * k_h * k_w
  int64_t pixels;  // out_h * out_w
  bool pointwise;  // 1x1, stride 1, no padding: im2col is the identity
};

ConvGeometry make_geometry(const Shape& x, const Shape& kernel, const Conv2dSpec& spec) {
  Shape out = conv2d_output_shape(x, kernel, spec);
  ConvGeometry g{};
  g.batch = x.n;
  g.in_c = x.c;
  g.in_h = x.h;
  g.in_w = x.w;
  g.out_c = out.c;
  g.out_h = out.h;
  g.out_w = out.w;
  g.k_h = kernel.h;
  g.k_w = kernel.w;
  g.groups = spec.groups;
  g.in_per_group = x.c / spec.groups;
  g.out_per_group = kernel.n / spec.groups;
  g.patch = g.in_per_group * g.k_h * g.k_w;
  g.pixels = out.h * out.w;
  g.pointwise = kernel.h == 1 && kernel.w == 1 && spec.stride_h == 1 && spec.stride_w == 1 &&
                spec.pad_h == 0 && spec.pad_w == 0;
  return g;
}

// cols is (patch x pixels) for channels [c0, c0 + in_per_group) of sample n.
void im2col(const Tensor& x, const ConvGeometry& g, const Conv2dSpec& spec, int64_t n,
            int64_t c0, Real* cols) {
  for (int64_t ci = 0; ci < g.in_per_group; ++ci) {
    const Real* src = x.plane(n, c0 + ci);
    for (int64_t ky = 0; ky < g.k_h; ++ky) {
      for (int64_t kx = 0; kx < g.k_w; ++kx) {
        Real* row = cols + ((ci * g.k_h + ky) * g.k_w + kx) * g.pixels;
        for (int64_t oy = 0; oy < g.out_h; ++oy) {
          const int64_t iy = oy * spec.stride_h - spec.pad_h + ky;
          Real* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(dst, dst + g.out_w, Real(0));
            continue;
          }
          const Real* src_row = src + iy * g.in_w;
          for (int64_t ox = 0; ox < g.out_w; ++ox) {
            const int64_t ix = ox * spec.stride_w - spec.pad_w + kx;
            dst[ox] = (ix < 0 || ix >= g.in_w) ? Real(0) : src_row[ix];
          }
        }
      }
    }
  }
}

void col2im(const Real* cols, const ConvGeometry& g, const Conv2dSpec& spec, int64_t n, int64_t c0,
            Tensor& dx) {
  for (int64_t ci = 0; ci < g.in_per_group; ++ci) {
    Real* dst = dx.plane(n, c0 + ci);
    for (int64_t ky = 0; ky < g.k_h; ++ky) {
      for (int64_t kx = 0; kx < g.k_w; ++kx) {
        const Real* row = cols + ((ci * g.k_h + ky) * g.k_w + kx) * g.pixels;
        for (int64_t oy = 0; oy < g.out_h; ++oy) {
          const int64_t iy = oy * spec.stride_h - spec.pad_h + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          const Real* src = row + oy * g.out_w;
          Real* dst_row = dst + iy * g.in_w;
          for (int64_t ox = 0; ox < g.out_w; ++ox) {
            const int64_t ix = ox * spec.stride_w - spec.pad_w + kx;
            if (ix >= 0 && ix < g.in_w) dst_row[ix] += src[ox];
          }
        }
      }
    }
  }
}

// Per-axis bilinear taps for align-corners = false with edge clamping.
struct Taps {
  std::vector<int64_t> lo, hi;
  std::vector<Real> frac;
};

Taps make_taps(int64_t in, int64_t scale) {
  const int64_t out = in * scale;
  Taps t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  for (int64_t i = 0; i < out; ++i) {
    Real src = (static_cast<Real>(i) + Real(0.5)) / static_cast<Real>(scale) - Real(0.5);
    if (src < 0) src = 0;
    int64_t lo = static_cast<int64_t>(std::floor(src));
    if (lo > in - 1) lo = in - 1;
    t.lo[i] = lo;
    t.hi[i] = std::min(lo + 1, in - 1);
    t.frac[i] = src - static_cast<Real>(lo);
  }
  return t;
}

template <typename Op>
Tensor broadcast_binary(const Tensor& a, const Tensor& b, Op op) {
  const Shape out_shape = broadcast_shape(a.shape(), b.shape());
  Tensor out(out_shape);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa == sb) {
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = op(a[i], b[i]);
    return out;
  }
  int64_t i = 0;
  for (int64_t n = 0; n < out_shape.n; ++n) {
    const int64_t an = sa.n == 1 ? 0 : n, bn = sb.n == 1 ? 0 : n;
    for (int64_t c = 0; c < out_shape.c; ++c) {
      const int64_t ac = sa.c == 1 ? 0 : c, bc = sb.c == 1 ? 0 : c;
      for (int64_t h = 0; h < out_shape.h; ++h) {
        const int64_t ah = sa.h == 1 ? 0 : h, bh = sb.h == 1 ? 0 : h;
        const Real* arow = a.data() + a.index(an, ac, ah, 0);
        const Real* brow = b.data() + b.index(bn, bc, bh, 0);
        const bool aw = sa.w != 1, bw = sb.w != 1;
        for (int64_t w = 0; w < out_shape.w; ++w, ++i) {
          out[i] = op(arow[aw ? w : 0], brow[bw ? w : 0]);
        }
      }
    }
  }
  return out;
}

}  // namespace

std::string Shape::str() const {
  std::ostringstream os;
  os << "(" << n << ", " << c << ", " << h << ", " << w << ")";
  return os.str();
}

Tensor::Tensor(Shape shape, Real fill) : shape_(shape) {
  require(shape.n >= 0 && shape.c >= 0 && shape.h >= 0 && shape.w >= 0,
          "negative dimension in shape " + shape.str());
  data_.assign(static_cast<size_t>(shape.numel()), fill);
}

Tensor::Tensor(Shape shape, std::vector<Real> values) : shape_(shape), data_(std::move(values)) {
  require(static_cast<int64_t>(data_.size()) == shape.numel(),
          "value count " + std::to_string(data_.size()) + " does not match shape " + shape.str());
}

Real Tensor::item() const {
  require(numel() == 1, "item() needs a single-element tensor, got " + shape_.str());
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  require(shape.numel() == numel(), "cannot reshape " + shape_.str() + " to " + shape.str());
  return Tensor(shape, data_);
}

void Tensor::fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

int64_t conv_output_size(int64_t size, int64_t kernel, int64_t stride, int64_t pad) {
  const int64_t span = size + 2 * pad - kernel;
  if (span < 0) return 0;
  return span / stride + 1;
}

Shape conv2d_output_shape(const Shape& x, const Shape& kernel, const Conv2dSpec& spec) {
  require(spec.groups >= 1, "groups must be positive");
  require(spec.stride_h >= 1 && spec.stride_w >= 1, "stride must be positive");
  require(spec.pad_h >= 0 && spec.pad_w >= 0, "padding must be nonnegative");
  require(x.c % spec.groups == 0, "input channels " + std::to_string(x.c) +
                                      " not divisible by groups " + std::to_string(spec.groups));
  require(kernel.n % spec.groups == 0, "output channels " + std::to_string(kernel.n) +
                                           " not divisible by groups " +
                                           std::to_string(spec.groups));
  require(kernel.c == x.c / spec.groups,
          "kernel input channels " + std::to_string(kernel.c) + " != input channels / groups " +
              std::to_string(x.c / spec.groups));
  const int64_t oh = conv_output_size(x.h, kernel.h, spec.stride_h, spec.pad_h);
  const int64_t ow = conv_output_size(x.w, kernel.w, spec.stride_w, spec.pad_w);
  require(oh > 0, "kernel height " + std::to_string(kernel.h) + " exceeds padded input height " +
                      std::to_string(x.h + 2 * spec.pad_h));
  require(ow > 0, "kernel width " + std::to_string(kernel.w) + " exceeds padded input width " +
                      std::to_string(x.w + 2 * spec.pad_w));
  return Shape{x.n, kernel.n, oh, ow};
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Conv2dSpec& spec,
              std::span<const Real> bias) {
  const ConvGeometry g = make_geometry(x.shape(), kernel.shape(), spec);
  require(bias.empty() || static_cast<int64_t>(bias.size()) == g.out_c,
          "bias length " + std::to_string(bias.size()) + " != output channels " +
              std::to_string(g.out_c));
  Tensor out(Shape{g.batch, g.out_c, g.out_h, g.out_w});
  std::vector<Real> cols(g.pointwise ? 0 : static_cast<size_t>(g.patch * g.pixels));
  for (int64_t n = 0; n < g.batch; ++n) {
    for (int64_t grp = 0; grp < g.groups; ++grp) {
      const int64_t c0 = grp * g.in_per_group;
      const Real* col_ptr = x.plane(n, c0);
      if (!g.pointwise) {
        im2col(x, g, spec, n, c0, cols.data());
        col_ptr = cols.data();
      }
      ConstMatrixMap w(kernel.data() + grp * g.out_per_group * g.patch, g.out_per_group, g.patch);
      ConstMatrixMap c(col_ptr, g.patch, g.pixels);
      MatrixMap o(out.plane(n, grp * g.out_per_group), g.out_per_group, g.pixels);
      o.noalias() = w * c;
    }
    if (!bias.empty()) {
      for (int64_t oc = 0; oc < g.out_c; ++oc) {
        Real* p = out.plane(n, oc);
        for (int64_t i = 0; i < g.pixels; ++i) p[i] += bias[oc];
      }
    }
  }
  return out;
}

Tensor conv2d_grad_input(const Tensor& grad_out, const Tensor& kernel, const Shape& x_shape,
                         const Conv2dSpec& spec) {
  const ConvGeometry g = make_geometry(x_shape, kernel.shape(), spec);
  require(grad_out.shape() == Shape({g.batch, g.out_c, g.out_h, g.out_w}),
          "conv2d gradient shape " + grad_out.shape().str() + " does not match output");
  Tensor dx(x_shape);
  std::vector<Real> cols(static_cast<size_t>(g.patch * g.pixels));
  for (int64_t n = 0; n < g.batch; ++n) {
    for (int64_t grp = 0; grp < g.groups; ++grp) {
      const int64_t c0 = grp * g.in_per_group;
      ConstMatrixMap w(kernel.data() + grp * g.out_per_group * g.patch, g.out_per_group, g.patch);
      ConstMatrixMap go(grad_out.plane(n, grp * g.out_per_group), g.out_per_group, g.pixels);
      if (g.pointwise) {
        MatrixMap d(dx.plane(n, c0), g.patch, g.pixels);
        d.noalias() = w.transpose() * go;
        continue;
      }
      MatrixMap c(cols.data(), g.patch, g.pixels);
      c.noalias() = w.transpose() * go;
      col2im(cols.data(), g, spec, n, c0, dx);
    }
  }
  return dx;
}

Tensor conv2d_grad_kernel(const Tensor& grad_out, const Tensor& x, const Shape& kernel_shape,
                          const Conv2dSpec& spec) {
  const ConvGeometry g = make_geometry(x.shape(), kernel_shape, spec);
  require(grad_out.shape() == Shape({g.batch, g.out_c, g.out_h, g.out_w}),
          "conv2d gradient shape " + grad_out.shape().str() + " does not match output");
  Tensor dk(kernel_shape);
  std::vector<Real> cols(g.pointwise ? 0 : static_cast<size_t>(g.patch * g.pixels));
  for (int64_t n = 0; n < g.batch; ++n) {
    for (int64_t grp = 0; grp < g.groups; ++grp) {
      const int64_t c0 = grp * g.in_per_group;
      const Real* col_ptr = x.plane(n, c0);
      if (!g.pointwise) {
        im2col(x, g, spec, n, c0, cols.data());
        col_ptr = cols.data();
      }
      ConstMatrixMap c(col_ptr, g.patch, g.pixels);
      ConstMatrixMap go(grad_out.plane(n, grp * g.out_per_group), g.out_per_group, g.pixels);
      MatrixMap d(dk.data() + grp * g.out_per_group * g.patch, g.out_per_group, g.patch);
      d.noalias() += go * c.transpose();
    }
  }
  return dk;
}

Tensor bilinear_upsample(const Tensor& x, int64_t scale) {
  require(scale >= 1, "upsample scale must be >= 1, got " + std::to_string(scale));
  const Shape& s = x.shape();
  if (scale == 1) return x;
  const Taps ty = make_taps(s.h, scale), tx = make_taps(s.w, scale);
  const int64_t oh = s.h * scale, ow = s.w * scale;
  Tensor out(Shape{s.n, s.c, oh, ow});
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t c = 0; c < s.c; ++c) {
      const Real* src = x.plane(n, c);
      Real* dst = out.plane(n, c);
      for (int64_t y = 0; y < oh; ++y) {
        const Real* r0 = src + ty.lo[y] * s.w;
        const Real* r1 = src + ty.hi[y] * s.w;
        const Real fy = ty.frac[y];
        for (int64_t xo = 0; xo < ow; ++xo) {
          const Real fx = tx.frac[xo];
          const Real top = r0[tx.lo[xo]] + fx * (r0[tx.hi[xo]] - r0[tx.lo[xo]]);
          const Real bot = r1[tx.lo[xo]] + fx * (r1[tx.hi[xo]] - r1[tx.lo[xo]]);
          dst[y * ow + xo] = top + fy * (bot - top);
        }
      }
    }
  }
  return out;
}

Tensor bilinear_upsample_grad(const Tensor& grad_out, const Shape& x_shape, int64_t scale) {
  require(scale >= 1, "upsample scale must be >= 1, got " + std::to_string(scale));
  require(grad_out.shape() == Shape({x_shape.n, x_shape.c, x_shape.h * scale, x_shape.w * scale}),
          "upsample gradient shape " + grad_out.shape().str() + " does not match output");
  if (scale == 1) return grad_out;
  const Taps ty = make_taps(x_shape.h, scale), tx = make_taps(x_shape.w, scale);
  const int64_t oh = x_shape.h * scale, ow = x_shape.w * scale;
  Tensor dx(x_shape);
  for (int64_t n = 0; n < x_shape.n; ++n) {
    for (int64_t c = 0; c < x_shape.c; ++c) {
      const Real* g = grad_out.plane(n, c);
      Real* d = dx.plane(n, c);
      for (int64_t y = 0; y < oh; ++y) {
        Real* r0 = d + ty.lo[y] * x_shape.w;
        Real* r1 = d + ty.hi[y] * x_shape.w;
        const Real fy = ty.frac[y];
        for (int64_t xo = 0; xo < ow; ++xo) {
          const Real v = g[y * ow + xo];
          const Real fx = tx.frac[xo];
          r0[tx.lo[xo]] += (1 - fy) * (1 - fx) * v;
          r0[tx.hi[xo]] += (1 - fy) * fx * v;
          r1[tx.lo[xo]] += fy * (1 - fx) * v;
          r1[tx.hi[xo]] += fy * fx * v;
        }
      }
    }
  }
  return dx;
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
  auto dim = [](int64_t x, int64_t y, const char* name, const Shape& sa, const Shape& sb) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw ShapeError(std::string("incompatible ") + name + " extent in " + sa.str() + " vs " +
                     sb.str());
  };
  return Shape{dim(a.n, b.n, "batch", a, b), dim(a.c, b.c, "channel", a, b),
               dim(a.h, b.h, "height", a, b), dim(a.w, b.w, "width", a, b)};
}

Tensor add(const Tensor& a, const Tensor& b) {
  return broadcast_binary(a, b, [](Real x, Real y) { return x + y; });
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return broadcast_binary(a, b, [](Real x, Real y) { return x - y; });
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return broadcast_binary(a, b, [](Real x, Real y) { return x * y; });
}

Tensor add(const Tensor& a, Real s) {
  Tensor out = a;
  for (auto& v : out.values()) v += s;
  return out;
}

Tensor mul(const Tensor& a, Real s) {
  Tensor out = a;
  for (auto& v : out.values()) v *= s;
  return out;
}

Tensor reduce_to(const Tensor& grad, const Shape& target) {
  if (grad.shape() == target) return grad;
  const Shape& s = grad.shape();
  require(broadcast_shape(target, s) == s,
          "cannot reduce " + s.str() + " to " + target.str());
  Tensor out(target);
  int64_t i = 0;
  for (int64_t n = 0; n < s.n; ++n) {
    const int64_t tn = target.n == 1 ? 0 : n;
    for (int64_t c = 0; c < s.c; ++c) {
      const int64_t tc = target.c == 1 ? 0 : c;
      for (int64_t h = 0; h < s.h; ++h) {
        const int64_t th = target.h == 1 ? 0 : h;
        Real* row = out.data() + out.index(tn, tc, th, 0);
        const bool tw = target.w != 1;
        for (int64_t w = 0; w < s.w; ++w, ++i) row[tw ? w : 0] += grad[i];
      }
    }
  }
  return out;
}

Real sigmoid(Real x) {
  if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.values()) v = sigmoid(v);
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.values()) v = v > 0 ? v : Real(0);
  return out;
}

Tensor abs(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.values()) v = std::abs(v);
  return out;
}

Tensor channel_sum(const Tensor& x) {
  const Shape& s = x.shape();
  require(s.c >= 1, "channel reduction needs at least one channel");
  Tensor out(Shape{s.n, 1, s.h, s.w});
  for (int64_t n = 0; n < s.n; ++n) {
    Real* dst = out.plane(n, 0);
    for (int64_t c = 0; c < s.c; ++c) {
      const Real* src = x.plane(n, c);
      for (int64_t i = 0; i < s.plane(); ++i) dst[i] += src[i];
    }
  }
  return out;
}

Tensor channel_mean(const Tensor& x) {
  return mul(channel_sum(x), Real(1) / static_cast<Real>(x.shape().c));
}

Tensor channel_max(const Tensor& x) {
  const Shape& s = x.shape();
  require(s.c >= 1, "channel reduction needs at least one channel");
  Tensor out(Shape{s.n, 1, s.h, s.w});
  for (int64_t n = 0; n < s.n; ++n) {
    Real* dst = out.plane(n, 0);
    std::copy(x.plane(n, 0), x.plane(n, 0) + s.plane(), dst);
    for (int64_t c = 1; c < s.c; ++c) {
      const Real* src = x.plane(n, c);
      for (int64_t i = 0; i < s.plane(); ++i) dst[i] = std::max(dst[i], src[i]);
    }
  }
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  const Shape& s = x.shape();
  require(s.plane() >= 1, "global pooling needs a nonempty plane");
  Tensor out(Shape{s.n, s.c, 1, 1});
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t c = 0; c < s.c; ++c) {
      const Real* p = x.plane(n, c);
      Real acc = 0;
      for (int64_t i = 0; i < s.plane(); ++i) acc += p[i];
      out.at(n, c, 0, 0) = acc / static_cast<Real>(s.plane());
    }
  }
  return out;
}

Tensor global_max_pool(const Tensor& x) {
  const Shape& s = x.shape();
  require(s.plane() >= 1, "global pooling needs a nonempty plane");
  Tensor out(Shape{s.n, s.c, 1, 1});
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t c = 0; c < s.c; ++c) {
      const Real* p = x.plane(n, c);
      out.at(n, c, 0, 0) = *std::max_element(p, p + s.plane());
    }
  }
  return out;
}

Real sum(const Tensor& x) {
  Real acc = 0;
  for (Real v : x.values()) acc += v;
  return acc;
}

Real max_abs_diff(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  Real m = 0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Real squared_norm(const Tensor& x) {
  Real acc = 0;
  for (Real v : x.values()) acc += v * v;
  return acc;
}

Tensor concat_channels(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat needs at least one tensor");
  const Shape& first = parts.front().shape();
  int64_t channels = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    require(s.n == first.n && s.h == first.h && s.w == first.w,
            "concat operand " + s.str() + " does not match " + first.str() +
                " outside the channel axis");
    channels += s.c;
  }
  Tensor out(Shape{first.n, channels, first.h, first.w});
  for (int64_t n = 0; n < first.n; ++n) {
    int64_t c0 = 0;
    for (const Tensor& p : parts) {
      const int64_t count = p.shape().c * p.shape().plane();
      std::copy(p.plane(n, 0), p.plane(n, 0) + count, out.plane(n, c0));
      c0 += p.shape().c;
    }
  }
  return out;
}

Tensor slice_channels(const Tensor& x, int64_t begin, int64_t count) {
  const Shape& s = x.shape();
  require(begin >= 0 && count >= 0 && begin + count <= s.c,
          "channel slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
              ") out of range for " + s.str());
  Tensor out(Shape{s.n, count, s.h, s.w});
  for (int64_t n = 0; n < s.n; ++n) {
    std::copy(x.plane(n, begin), x.plane(n, begin) + count * s.plane(), out.plane(n, 0));
  }
  return out;
}

Tensor concat_batch(std::span<const Tensor> parts) {
  require(!parts.empty(), "batch concat needs at least one tensor");
  const Shape& first = parts.front().shape();
  int64_t batch = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    require(s.c == first.c && s.h == first.h && s.w == first.w,
            "batch operand " + s.str() + " does not match " + first.str());
    batch += s.n;
  }
  std::vector<Real> values;
  values.reserve(static_cast<size_t>(batch * first.c * first.plane()));
  for (const Tensor& p : parts) values.insert(values.end(), p.vec().begin(), p.vec().end());
  return Tensor(Shape{batch, first.c, first.h, first.w}, std::move(values));
}

Tensor slice_batch(const Tensor& x, int64_t index) {
  const Shape& s = x.shape();
  require(index >= 0 && index < s.n,
          "batch index " + std::to_string(index) + " out of range for " + s.str());
  const int64_t per = s.c * s.plane();
  std::vector<Real> values(x.vec().begin() + index * per, x.vec().begin() + (index + 1) * per);
  return Tensor(Shape{1, s.c, s.h, s.w}, std::move(values));
}

BatchNormResult batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                           const Tensor& running_mean, const Tensor& running_var, BnMode mode,
                           Real momentum, Real eps) {
  const Shape& s = x.shape();
  const Shape param{1, s.c, 1, 1};
  require(gamma.shape() == param, "batch_norm gamma shape " + gamma.shape().str() +
                                      " != " + param.str());
  require(beta.shape() == param, "batch_norm beta shape " + beta.shape().str() +
                                     " != " + param.str());
  require(running_mean.shape() == param, "batch_norm running_mean shape " +
                                             running_mean.shape().str() + " != " + param.str());
  require(running_var.shape() == param, "batch_norm running_var shape " +
                                            running_var.shape().str() + " != " + param.str());
  const int64_t count = s.n * s.plane();
  BatchNormResult r{Tensor(s), running_mean, running_var, std::vector<Real>(s.c),
                    std::vector<Real>(s.c)};
  if (mode == BnMode::kTrain) {
    require(count > 1, "batch_norm train mode needs more than one value per channel (B*H*W = " +
                           std::to_string(count) + ")");
  }
  for (int64_t c = 0; c < s.c; ++c) {
    Real mean, var;
    if (mode == BnMode::kTrain) {
      Real acc = 0;
      for (int64_t n = 0; n < s.n; ++n) {
        const Real* p = x.plane(n, c);
        for (int64_t i = 0; i < s.plane(); ++i) acc += p[i];
      }
      mean = acc / static_cast<Real>(count);
      Real sq = 0;
      for (int64_t n = 0; n < s.n; ++n) {
        const Real* p = x.plane(n, c);
        for (int64_t i = 0; i < s.plane(); ++i) sq += (p[i] - mean) * (p[i] - mean);
      }
      var = sq / static_cast<Real>(count);
      const Real unbiased = sq / static_cast<Real>(count - 1);
      r.running_mean[c] = (1 - momentum) * running_mean[c] + momentum * mean;
      r.running_var[c] = (1 - momentum) * running_var[c] + momentum * unbiased;
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    const Real denom = var + eps;
    // Zero variance with zero eps: every centered value is zero, so the
    // normalized value is taken as zero rather than 0 * inf.
    const Real inv_std = denom > 0 ? Real(1) / std::sqrt(denom) : Real(0);
    r.batch_mean[c] = mean;
    r.batch_inv_std[c] = inv_std;
    for (int64_t n = 0; n < s.n; ++n) {
      const Real* p = x.plane(n, c);
      Real* o = r.output.plane(n, c);
      for (int64_t i = 0; i < s.plane(); ++i) {
        o[i] = gamma[c] * (p[i] - mean) * inv_std + beta[c];
      }
    }
  }
  return r;
}

int64_t reflect_index(int64_t i, int64_t n) {
  if (n == 1) return 0;
  const int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

Tensor gather_spatial(const Tensor& x, std::span<const int64_t> rows,
                      std::span<const int64_t> cols) {
  const Shape& s = x.shape();
  for (int64_t r : rows) require(r >= 0 && r < s.h, "gather row index out of range");
  for (int64_t c : cols) require(c >= 0 && c < s.w, "gather column index out of range");
  const int64_t oh = static_cast<int64_t>(rows.size()), ow = static_cast<int64_t>(cols.size());
  Tensor out(Shape{s.n, s.c, oh, ow});
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t c = 0; c < s.c; ++c) {
      const Real* src = x.plane(n, c);
      Real* dst = out.plane(n, c);
      for (int64_t y = 0; y < oh; ++y) {
        for (int64_t xo = 0; xo < ow; ++xo) dst[y * ow + xo] = src[rows[y] * s.w + cols[xo]];
      }
    }
  }
  return out;
}

Tensor gather_spatial_grad(const Tensor& grad_out, const Shape& x_shape,
                           std::span<const int64_t> rows, std::span<const int64_t> cols) {
  const int64_t oh = static_cast<int64_t>(rows.size()), ow = static_cast<int64_t>(cols.size());
  require(grad_out.shape() == Shape({x_shape.n, x_shape.c, oh, ow}),
          "gather gradient shape " + grad_out.shape().str() + " does not match output");
  Tensor dx(x_shape);
  for (int64_t n = 0; n < x_shape.n; ++n) {
    for (int64_t c = 0; c < x_shape.c; ++c) {
      const Real* g = grad_out.plane(n, c);
      Real* d = dx.plane(n, c);
      for (int64_t y = 0; y < oh; ++y) {
        for (int64_t xo = 0; xo < ow; ++xo) d[rows[y] * x_shape.w + cols[xo]] += g[y * ow + xo];
      }
    }
  }
  return dx;
}

bool all_finite(const Tensor& x) {
  return std::all_of(x.values().begin(), x.values().end(),
                     [](Real v) { return std::isfinite(v); });
}

}  // namespace wavedge
