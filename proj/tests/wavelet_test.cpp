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

#include <cmath>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace wavedge::wavelet {
namespace {

using testing::random_tensor;

// Block-wise Haar analysis written straight from the 2x2 patterns.
PyramidLevel haar_oracle(const Tensor& x) {
  const Shape s = x.shape();
  const Shape h{s.n, s.c, s.h / 2, s.w / 2};
  PyramidLevel out{Tensor(h), Tensor(h), Tensor(h), Tensor(h)};
  for (int64_t n = 0; n < s.n; ++n) {
    for (int64_t c = 0; c < s.c; ++c) {
      for (int64_t i = 0; i < h.h; ++i) {
        for (int64_t j = 0; j < h.w; ++j) {
          const Real tl = x.at(n, c, 2 * i, 2 * j), tr = x.at(n, c, 2 * i, 2 * j + 1);
          const Real bl = x.at(n, c, 2 * i + 1, 2 * j), br = x.at(n, c, 2 * i + 1, 2 * j + 1);
          out.a.at(n, c, i, j) = (tl + tr + bl + br) / 2;
          out.lh.at(n, c, i, j) = (tl + tr - bl - br) / 2;
          out.hl.at(n, c, i, j) = (tl - tr + bl - br) / 2;
          out.hh.at(n, c, i, j) = (tl - tr - bl + br) / 2;
        }
      }
    }
  }
  return out;
}

Real energy(const Tensor& t) { return squared_norm(t); }

TEST(WaveletTest, KernelsAreOrthonormal) {
  EXPECT_EQ(haar_kernels().orthonormality_error(), 0);
  EXPECT_EQ(haar_kernels().lh[1][0], -0.5);
  EXPECT_EQ(haar_kernels().hl[0][1], -0.5);
}

TEST(WaveletTest, MatchesBlockOracle) {
  const Tensor x = random_tensor(Shape{2, 3, 6, 10}, 1);
  const PyramidLevel got = dwt_haar(x), want = haar_oracle(x);
  EXPECT_LT(max_abs_diff(got.a, want.a), 1e-15);
  EXPECT_LT(max_abs_diff(got.lh, want.lh), 1e-15);
  EXPECT_LT(max_abs_diff(got.hl, want.hl), 1e-15);
  EXPECT_LT(max_abs_diff(got.hh, want.hh), 1e-15);
}

TEST(WaveletTest, PerfectReconstructionAndParseval) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor x = random_tensor(Shape{1, 2, 8, 12}, 100 + seed, -5, 5);
    const PyramidLevel b = dwt_haar(x);
    EXPECT_LT(max_abs_diff(idwt_haar(b.a, b.lh, b.hl, b.hh), x), 1e-13);
    const Real ex = energy(x);
    EXPECT_NEAR(energy(b.a) + energy(b.lh) + energy(b.hl) + energy(b.hh), ex, 1e-12 * ex);
  }
}

TEST(WaveletTest, OddSizesRejected) {
  EXPECT_THROW(dwt_haar(Tensor(1, 1, 5, 4)), ShapeError);
  EXPECT_THROW(dwt_haar(Tensor(1, 1, 4, 7)), ShapeError);
  EXPECT_THROW(edge_head(Tensor(1, 1, 6, 8)), ShapeError);
  EXPECT_THROW(edge_mask(Tensor(1, 2, 8, 8)), ShapeError);
}

TEST(WaveletTest, ConstantInputHasNoDetail) {
  const Tensor x(1, 1, 16, 16, 0.7);
  const WaveletPyramid p = decompose(x, 2);
  for (const PyramidLevel& l : p.levels) {
    EXPECT_EQ(energy(l.lh) + energy(l.hl) + energy(l.hh), 0);
  }
  EXPECT_NEAR(p.levels[1].a.at(0, 0, 0, 0), 0.7 * 4, 1e-15);  // each level scales DC by 2
  EXPECT_EQ(sum(edge_mask(x)), 0);
}

TEST(WaveletTest, StripesSelectOneBand) {
  // A step between rows 4k+1 and 4k+2 lies inside a level-2 block only.
  Tensor x(1, 1, 16, 16);
  for (int64_t i = 0; i < 16; ++i) {
    for (int64_t j = 0; j < 16; ++j) x.at(0, 0, i, j) = (i % 4) < 2 ? 0 : 1;
  }
  const WaveletPyramid p = decompose(x, 2);
  EXPECT_EQ(energy(p.levels[0].lh) + energy(p.levels[0].hl) + energy(p.levels[0].hh), 0);
  EXPECT_GT(energy(p.levels[1].lh), 0);
  EXPECT_EQ(energy(p.levels[1].hl), 0);
  EXPECT_EQ(energy(p.levels[1].hh), 0);
}

TEST(WaveletTest, EdgeHeadComposesLevels) {
  const Tensor x = random_tensor(Shape{2, 2, 8, 12}, 3);
  const PyramidLevel l1 = haar_oracle(x), l2 = haar_oracle(l1.a);
  const std::vector<Tensor> d1{l1.lh, l1.hl, l1.hh}, d2{l2.lh, l2.hl, l2.hh};
  const Tensor want = add(bilinear_upsample(concat_channels(d1), 2),
                          bilinear_upsample(concat_channels(d2), 4));
  const Tensor got = edge_head(x);
  ASSERT_EQ(got.shape(), (Shape{2, 6, 8, 12}));
  EXPECT_LT(max_abs_diff(got, want), 1e-14);
  // Channel order: the C LH maps, then HL, then HH.
  EXPECT_LT(max_abs_diff(slice_channels(got, 2, 2),
                         add(bilinear_upsample(l1.hl, 2), bilinear_upsample(l2.hl, 4))), 1e-14);
}

TEST(WaveletTest, EdgeMaskIsAbsSumOfHead) {
  const Tensor x = random_tensor(Shape{1, 1, 8, 8}, 4);
  const Tensor head = edge_head(x), mask = edge_mask(x);
  ASSERT_EQ(mask.shape(), (Shape{1, 1, 8, 8}));
  for (int64_t i = 0; i < 8; ++i) {
    for (int64_t j = 0; j < 8; ++j) {
      const Real want = std::abs(head.at(0, 0, i, j)) + std::abs(head.at(0, 1, i, j)) +
                        std::abs(head.at(0, 2, i, j));
      EXPECT_NEAR(mask.at(0, 0, i, j), want, 1e-15);
      EXPECT_GE(mask.at(0, 0, i, j), 0);
    }
  }
}

TEST(WaveletTest, HeadIsLinearAndDifferentiable) {
  const Tensor a = random_tensor(Shape{1, 1, 8, 8}, 5), b = random_tensor(Shape{1, 1, 8, 8}, 6);
  EXPECT_LT(max_abs_diff(edge_head(add(mul(a, 2.0), b)),
                         add(mul(edge_head(a), 2.0), edge_head(b))),
            1e-14);
  Var x = make_parameter(a);
  const Tensor w = random_tensor(Shape{1, 3, 8, 8}, 7);
  backward(sum(mul(edge_head(x), Var(w))));
  auto f = [&](const Tensor& t) { return sum(mul(edge_head(t), w)); };
  // Linear in the input, so a unit step is exact up to rounding.
  EXPECT_LT(max_abs_diff(x.grad(), testing::numeric_grad(f, a, 1.0)), 1e-13);
}

}  // namespace
}  // namespace wavedge::wavelet
