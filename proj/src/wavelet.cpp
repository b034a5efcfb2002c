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

#include "wavedge/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wavedge::wavelet {
namespace {

constexpr Real kHalf = Real(0.5);

// Depth-wise (C, 1, 2, 2) kernel replicating one band for every channel.
// Constant: never a Parameter, never receives a gradient.
Var depthwise_kernel(Band band, int64_t channels) {
  const Kernel2x2& k = haar_kernels()[band];
  Tensor t(Shape{channels, 1, 2, 2});
  for (int64_t c = 0; c < channels; ++c) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) t.at(c, 0, i, j) = k[i][j];
    }
  }
  return Var(std::move(t));
}

Var analyze(const Var& x, Band band) {
  const int64_t c = x.shape().c;
  Conv2dSpec spec;
  spec.stride_h = spec.stride_w = 2;
  spec.groups = c;
  return conv2d(x, depthwise_kernel(band, c), spec);
}

}  // namespace

const Kernel2x2& HaarKernels::operator[](Band b) const {
  switch (b) {
    case Band::kLL:
      return ll;
    case Band::kLH:
      return lh;
    case Band::kHL:
      return hl;
    case Band::kHH:
      return hh;
  }
  return ll;
}

Real HaarKernels::orthonormality_error() const {
  const std::array<Band, 4> bands{Band::kLL, Band::kLH, Band::kHL, Band::kHH};
  Real err = 0;
  for (Band a : bands) {
    for (Band b : bands) {
      Real dot = 0;
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) dot += (*this)[a][i][j] * (*this)[b][i][j];
      }
      err = std::max(err, std::abs(dot - (a == b ? Real(1) : Real(0))));
    }
  }
  return err;
}

const HaarKernels& haar_kernels() {
  static const HaarKernels kernels = [] {
    HaarKernels k{};
    k.ll = {{{kHalf, kHalf}, {kHalf, kHalf}}};
    k.lh = {{{kHalf, kHalf}, {-kHalf, -kHalf}}};
    k.hl = {{{kHalf, -kHalf}, {kHalf, -kHalf}}};
    k.hh = {{{kHalf, -kHalf}, {-kHalf, kHalf}}};
    if (k.orthonormality_error() > 1e-15) throw std::logic_error("Haar kernels not orthonormal");
    return k;
  }();
  return kernels;
}

Subbands dwt_haar(const Var& x) {
  const Shape& s = x.shape();
  if (s.h % 2 != 0) throw ShapeError("dwt_haar needs even height, got " + std::to_string(s.h));
  if (s.w % 2 != 0) throw ShapeError("dwt_haar needs even width, got " + std::to_string(s.w));
  return Subbands{analyze(x, Band::kLL), analyze(x, Band::kLH), analyze(x, Band::kHL),
                  analyze(x, Band::kHH)};
}

PyramidLevel dwt_haar(const Tensor& x) {
  Subbands b = dwt_haar(Var(x));
  return PyramidLevel{b.a.value(), b.lh.value(), b.hl.value(), b.hh.value()};
}

Tensor idwt_haar(const Tensor& a, const Tensor& lh, const Tensor& hl, const Tensor& hh) {
  const Shape& s = a.shape();
  if (lh.shape() != s || hl.shape() != s || hh.shape() != s) {
    throw ShapeError("idwt_haar sub-band shapes differ: " + s.str() + ", " + lh.shape().str() +
                     ", " + hl.shape().str() + ", " + hh.shape().str());
  }
  const HaarKernels& k = haar_kernels();
  Tensor x(Shape{s.n, s.c, 2 * s.h, 2 * s.w});
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t c = 0; c < s.c; ++c) {
      for (int64_t i = 0; i < s.h; ++i) {
        for (int64_t j = 0; j < s.w; ++j) {
          const Real va = a.at(n, c, i, j), vlh = lh.at(n, c, i, j);
          const Real vhl = hl.at(n, c, i, j), vhh = hh.at(n, c, i, j);
          for (int p = 0; p < 2; ++p) {
            for (int q = 0; q < 2; ++q) {
              x.at(n, c, 2 * i + p, 2 * j + q) =
                  k.ll[p][q] * va + k.lh[p][q] * vlh + k.hl[p][q] * vhl + k.hh[p][q] * vhh;
            }
          }
        }
      }
    }
  }
  return x;
}

WaveletPyramid decompose(const Tensor& x, int levels) {
  if (levels < 1) throw ShapeError("decompose needs at least one level");
  WaveletPyramid p;
  Tensor current = x;
  for (int l = 0; l < levels; ++l) {
    p.levels.push_back(dwt_haar(current));
    current = p.levels.back().a;
  }
  return p;
}

Var edge_head(const Var& x) {
  const Shape& s = x.shape();
  if (s.h % 4 != 0) {
    throw ShapeError("edge_head needs height divisible by 4, got " + std::to_string(s.h));
  }
  if (s.w % 4 != 0) {
    throw ShapeError("edge_head needs width divisible by 4, got " + std::to_string(s.w));
  }
  const Subbands l1 = dwt_haar(x);
  const Subbands l2 = dwt_haar(l1.a);
  const Var w1 = concat_channels({l1.lh, l1.hl, l1.hh});
  const Var w2 = concat_channels({l2.lh, l2.hl, l2.hh});
  return add(bilinear_upsample(w1, 2), bilinear_upsample(w2, 4));
}

Tensor edge_head(const Tensor& x) { return edge_head(Var(x)).value(); }

Var edge_mask(const Var& x) {
  if (x.shape().c != 1) {
    throw ShapeError("edge_mask needs a single-channel input, got " +
                     std::to_string(x.shape().c) + " channels");
  }
  return channel_sum(abs(edge_head(x)));
}

Tensor edge_mask(const Tensor& x) { return edge_mask(Var(x)).value(); }

}  // namespace wavedge::wavelet
