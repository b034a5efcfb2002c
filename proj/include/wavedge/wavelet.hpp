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

#ifndef WAVEDGE_WAVELET_HPP_
#define WAVEDGE_WAVELET_HPP_

#include <array>
#include <vector>

#include "wavedge/autodiff.hpp"

namespace wavedge::wavelet {

// Parameter-free two-level Haar edge head.
//
// Sub-band naming follows the usual filter-bank convention:
//   LH  = 1/2 [[+1, +1], [-1, -1]]  responds to horizontal edges
//   HL  = 1/2 [[+1, -1], [+1, -1]]  responds to vertical edges
//   HH  = 1/2 [[+1, -1], [-1, +1]]  responds to diagonal structure
//   LL  = 1/2 [[+1, +1], [+1, +1]]  approximation
// The four kernels are orthonormal, so one level preserves energy exactly.
// All kernels are applied as cross-correlation on non-overlapping 2x2 blocks.

enum class Band { kLL = 0, kLH = 1, kHL = 2, kHH = 3 };

using Kernel2x2 = std::array<std::array<Real, 2>, 2>;

struct HaarKernels {
  Kernel2x2 ll, lh, hl, hh;

  const Kernel2x2& operator[](Band b) const;
  /// Max deviation from orthonormality over all pairs (0 for the exact kernels).
  Real orthonormality_error() const;
};

const HaarKernels& haar_kernels();

struct Subbands {
  Var a, lh, hl, hh;
};

struct PyramidLevel {
  Tensor a, lh, hl, hh;
};

/// Per-level approximation and details, levels[0] is the finest.
struct WaveletPyramid {
  std::vector<PyramidLevel> levels;
};

/// One analysis level. Height and width must be even.
Subbands dwt_haar(const Var& x);
PyramidLevel dwt_haar(const Tensor& x);

/// Exact inverse of dwt_haar (test oracle).
Tensor idwt_haar(const Tensor& a, const Tensor& lh, const Tensor& hl, const Tensor& hh);

/// `levels` recursive analysis steps on the approximation.
WaveletPyramid decompose(const Tensor& x, int levels);

/// Channel order of the edge head output: the LH block of C channels, then HL,
/// then HH.
inline constexpr std::array<Band, 3> kDetailOrder{Band::kLH, Band::kHL, Band::kHH};

/// Sum over levels 1 and 2 of the concatenated detail bands, each bilinearly
/// upsampled by 2^level to the input size. Output is (B, 3C, H, W); H and W
/// must be multiples of 4.
Var edge_head(const Var& x);
Tensor edge_head(const Tensor& x);

/// Sum over the 3 detail channels of |edge_head(x)|, for single-channel x.
Var edge_mask(const Var& x);
Tensor edge_mask(const Tensor& x);

}  // namespace wavedge::wavelet

#endif  // WAVEDGE_WAVELET_HPP_
