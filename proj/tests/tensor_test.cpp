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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace wavedge {
namespace {

using testing::random_tensor;

// Direct six-loop cross-correlation.
Tensor naive_conv(const Tensor& x, const Tensor& k, const Conv2dSpec& s, const std::vector<Real>& bias) {
  const Shape xs = x.shape(), ks = k.shape();
  const int64_t oh = (xs.h + 2 * s.pad_h - ks.h) / s.stride_h + 1;
  const int64_t ow = (xs.w + 2 * s.pad_w - ks.w) / s.stride_w + 1;
  const int64_t in_per_group = xs.c / s.groups, out_per_group = ks.n / s.groups;
  Tensor y(Shape{xs.n, ks.n, oh, ow});
  for (int64_t n = 0; n < xs.n; ++n) {
    for (int64_t o = 0; o < ks.n; ++o) {
      const int64_t g = o / out_per_group;
      for (int64_t i = 0; i < oh; ++i) {
        for (int64_t j = 0; j < ow; ++j) {
          Real acc = bias.empty() ? 0 : bias[o];
          for (int64_t c = 0; c < in_per_group; ++c) {
            for (int64_t p = 0; p < ks.h; ++p) {
              for (int64_t q = 0; q < ks.w; ++q) {
                const int64_t r = i * s.stride_h + p - s.pad_h, col = j * s.stride_w + q - s.pad_w;
                if (r < 0 || r >= xs.h || col < 0 || col >= xs.w) continue;
                acc += k.at(o, c, p, q) * x.at(n, g * in_per_group + c, r, col);
              }
            }
          }
          y.at(n, o, i, j) = acc;
        }
      }
    }
  }
  return y;
}

TEST(TensorTest, ConstructionAndIndexing) {
  Tensor t(2, 3, 4, 5, 1.5);
  EXPECT_EQ(t.numel(), 120);
  EXPECT_EQ(t.index(1, 2, 3, 4), 119);
  t.at(1, 0, 2, 3) = 7;
  EXPECT_EQ(t[t.index(1, 0, 2, 3)], 7);
  EXPECT_THROW(Tensor(Shape{1, 1, 2, 2}, std::vector<Real>{1, 2, 3}), ShapeError);
  EXPECT_THROW(Tensor(Shape{1, 1, 2, 2}).item(), ShapeError);
  EXPECT_EQ(Tensor::scalar(3).item(), 3);
}

struct ConvCase {
  Shape x, k;
  Conv2dSpec spec;
  bool bias;
};

class ConvTest : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvTest, MatchesNaiveLoops) {
  const ConvCase& c = GetParam();
  const Tensor x = random_tensor(c.x, 1);
  const Tensor k = random_tensor(c.k, 2);
  std::vector<Real> bias;
  if (c.bias) {
    const Tensor b = random_tensor(Shape{1, c.k.n, 1, 1}, 3);
    bias.assign(b.values().begin(), b.values().end());
  }
  const Tensor got = conv2d(x, k, c.spec, bias);
  const Tensor want = naive_conv(x, k, c.spec, bias);
  ASSERT_EQ(got.shape(), want.shape());
  EXPECT_LT(max_abs_diff(got, want), 1e-12);
}

TEST_P(ConvTest, GradientsAreAdjoint) {
  // <conv(x, k), g> is bilinear; its derivatives are the two backward ops.
  const ConvCase& c = GetParam();
  const Tensor x = random_tensor(c.x, 4);
  const Tensor k = random_tensor(c.k, 5);
  const Tensor g = random_tensor(conv2d_output_shape(c.x, c.k, c.spec), 6);
  auto inner_x = [&](const Tensor& xx) { return sum(mul(conv2d(xx, k, c.spec), g)); };
  auto inner_k = [&](const Tensor& kk) { return sum(mul(conv2d(x, kk, c.spec), g)); };
  EXPECT_LT(max_abs_diff(conv2d_grad_input(g, k, c.x, c.spec), testing::numeric_grad(inner_x, x)), 1e-7);
  EXPECT_LT(max_abs_diff(conv2d_grad_kernel(g, x, c.k, c.spec), testing::numeric_grad(inner_k, k)), 1e-7);
}

INSTANTIATE_TEST_SUITE_P(
    Shapes, ConvTest,
    ::testing::Values(ConvCase{{2, 3, 7, 6}, {4, 3, 3, 3}, {1, 1, 1, 1, 1}, true},
                      ConvCase{{1, 2, 8, 8}, {3, 2, 3, 3}, {2, 2, 1, 1, 1}, false},
                      ConvCase{{2, 4, 6, 6}, {4, 1, 2, 2}, {2, 2, 0, 0, 4}, false},
                      ConvCase{{1, 4, 5, 5}, {6, 2, 1, 1}, {1, 1, 0, 0, 2}, true},
                      ConvCase{{1, 2, 9, 9}, {1, 2, 7, 7}, {1, 1, 3, 3, 1}, false}));

TEST(TensorTest, ConvRejectsBadShapes) {
  const Tensor x(1, 3, 8, 8);
  Conv2dSpec spec;
  EXPECT_THROW(conv2d(x, Tensor(2, 2, 3, 3), spec), ShapeError);  // channel mismatch
  spec.groups = 2;
  EXPECT_THROW(conv2d(x, Tensor(2, 1, 3, 3), spec), ShapeError);  // 3 % 2 != 0
  EXPECT_THROW(conv2d(x, Tensor(2, 3, 9, 9), Conv2dSpec{}), ShapeError);  // kernel too big
  std::vector<Real> bias(3);
  EXPECT_THROW(conv2d(x, Tensor(2, 3, 3, 3), Conv2dSpec{}, bias), ShapeError);
}

TEST(TensorTest, BilinearUpsampleKnownValues) {
  // Half-pixel centres: output i samples input (i + 0.5) / 2 - 0.5, clamped at 0.
  const Tensor x(Shape{1, 1, 2, 2}, std::vector<Real>{1, 2, 3, 4});
  const Tensor y = bilinear_upsample(x, 2);
  const std::vector<Real> want{1,   1.25, 1.75, 2,    1.5, 1.75, 2.25, 2.5,
                               2.5, 2.75, 3.25, 3.5,  3,   3.25, 3.75, 4};
  ASSERT_EQ(y.shape(), (Shape{1, 1, 4, 4}));
  for (int i = 0; i < 16; ++i) EXPECT_DOUBLE_EQ(y[i], want[static_cast<size_t>(i)]) << i;
}

TEST(TensorTest, BilinearUpsampleFormulaAndAdjoint) {
  const Tensor x = random_tensor(Shape{2, 2, 3, 5}, 7);
  for (int64_t s : {2, 4}) {
    const Tensor y = bilinear_upsample(x, s);
    for (int64_t i = 0; i < y.shape().h; ++i) {
      for (int64_t j = 0; j < y.shape().w; ++j) {
        const double sy = std::max(0.0, (i + 0.5) / s - 0.5), sx = std::max(0.0, (j + 0.5) / s - 0.5);
        const int64_t y0 = static_cast<int64_t>(sy), x0 = static_cast<int64_t>(sx);
        const int64_t y1 = std::min<int64_t>(y0 + 1, 2), x1 = std::min<int64_t>(x0 + 1, 4);
        const double fy = sy - y0, fx = sx - x0;
        const double want = (1 - fy) * ((1 - fx) * x.at(1, 1, y0, x0) + fx * x.at(1, 1, y0, x1)) +
                            fy * ((1 - fx) * x.at(1, 1, y1, x0) + fx * x.at(1, 1, y1, x1));
        EXPECT_NEAR(y.at(1, 1, i, j), want, 1e-14);
      }
    }
    const Tensor g = random_tensor(y.shape(), 8);
    auto inner = [&](const Tensor& xx) { return sum(mul(bilinear_upsample(xx, s), g)); };
    EXPECT_LT(max_abs_diff(bilinear_upsample_grad(g, x.shape(), s), testing::numeric_grad(inner, x)), 1e-8);
  }
  // A constant stays constant.
  const Tensor c = bilinear_upsample(Tensor(1, 1, 3, 3, 2.5), 4);
  for (Real v : c.values()) EXPECT_DOUBLE_EQ(v, 2.5);
}

TEST(TensorTest, Broadcasting) {
  const Tensor a = random_tensor(Shape{2, 3, 4, 5}, 9);
  const Tensor b = random_tensor(Shape{1, 3, 1, 1}, 10);
  const Tensor s = add(a, b);
  EXPECT_DOUBLE_EQ(s.at(1, 2, 3, 4), a.at(1, 2, 3, 4) + b.at(0, 2, 0, 0));
  const Tensor m = mul(Tensor(2, 1, 4, 5, 2), a.reshaped(Shape{2, 3, 4, 5}));
  EXPECT_DOUBLE_EQ(m.at(0, 1, 2, 3), 2 * a.at(0, 1, 2, 3));
  EXPECT_THROW(add(a, Tensor(2, 2, 4, 5)), ShapeError);
  // reduce_to sums broadcast axes.
  const Tensor r = reduce_to(Tensor(2, 3, 4, 5, 1), Shape{1, 3, 1, 1});
  for (Real v : r.values()) EXPECT_DOUBLE_EQ(v, 40);
}

TEST(TensorTest, Reductions) {
  const Tensor x = random_tensor(Shape{2, 3, 4, 5}, 11);
  const Tensor cs = channel_sum(x), cm = channel_mean(x), cx = channel_max(x);
  const Tensor ga = global_avg_pool(x), gm = global_max_pool(x);
  for (int64_t n = 0; n < 2; ++n) {
    for (int64_t i = 0; i < 4; ++i) {
      for (int64_t j = 0; j < 5; ++j) {
        Real s = 0, mx = -1e9;
        for (int64_t c = 0; c < 3; ++c) {
          s += x.at(n, c, i, j);
          mx = std::max(mx, x.at(n, c, i, j));
        }
        EXPECT_NEAR(cs.at(n, 0, i, j), s, 1e-15);
        EXPECT_NEAR(cm.at(n, 0, i, j), s / 3, 1e-15);
        EXPECT_EQ(cx.at(n, 0, i, j), mx);
      }
    }
    for (int64_t c = 0; c < 3; ++c) {
      Real s = 0, mx = -1e9;
      for (int64_t i = 0; i < 20; ++i) {
        s += x.plane(n, c)[i];
        mx = std::max(mx, x.plane(n, c)[i]);
      }
      EXPECT_NEAR(ga.at(n, c, 0, 0), s / 20, 1e-15);
      EXPECT_EQ(gm.at(n, c, 0, 0), mx);
    }
  }
}

TEST(TensorTest, ConcatAndSlice) {
  const Tensor a = random_tensor(Shape{2, 2, 3, 3}, 12), b = random_tensor(Shape{2, 1, 3, 3}, 13);
  const std::vector<Tensor> parts{a, b};
  const Tensor c = concat_channels(parts);
  EXPECT_EQ(c.shape(), (Shape{2, 3, 3, 3}));
  EXPECT_EQ(max_abs_diff(slice_channels(c, 0, 2), a), 0);
  EXPECT_EQ(max_abs_diff(slice_channels(c, 2, 1), b), 0);
  EXPECT_THROW(slice_channels(c, 2, 2), ShapeError);
  const std::vector<Tensor> batch{slice_batch(a, 1), slice_batch(a, 0)};
  const Tensor swapped = concat_batch(batch);
  EXPECT_EQ(max_abs_diff(slice_batch(swapped, 0), slice_batch(a, 1)), 0);
}

TEST(TensorTest, BatchNormTrainMatchesDefinition) {
  const Tensor x = random_tensor(Shape{3, 2, 4, 4}, 14, -2, 3);
  const Tensor gamma(Shape{1, 2, 1, 1}, std::vector<Real>{1.5, -0.5});
  const Tensor beta(Shape{1, 2, 1, 1}, std::vector<Real>{0.25, 1});
  const Tensor rm(Shape{1, 2, 1, 1}, std::vector<Real>{0.1, 0.2});
  const Tensor rv(Shape{1, 2, 1, 1}, std::vector<Real>{1.0, 2.0});
  const BatchNormResult r = batch_norm(x, gamma, beta, rm, rv, BnMode::kTrain, 0.1, 1e-5);
  for (int64_t c = 0; c < 2; ++c) {
    double mean = 0, m2 = 0;
    const double count = 3 * 16;
    for (int64_t n = 0; n < 3; ++n) {
      for (int64_t i = 0; i < 16; ++i) mean += x.plane(n, c)[i];
    }
    mean /= count;
    for (int64_t n = 0; n < 3; ++n) {
      for (int64_t i = 0; i < 16; ++i) m2 += std::pow(x.plane(n, c)[i] - mean, 2);
    }
    const double var = m2 / count;
    for (int64_t n = 0; n < 3; ++n) {
      for (int64_t i = 0; i < 16; ++i) {
        const double want = gamma[c] * (x.plane(n, c)[i] - mean) / std::sqrt(var + 1e-5) + beta[c];
        EXPECT_NEAR(r.output.plane(n, c)[i], want, 1e-12);
      }
    }
    EXPECT_NEAR(r.running_mean[c], 0.9 * rm[c] + 0.1 * mean, 1e-14);
    EXPECT_NEAR(r.running_var[c], 0.9 * rv[c] + 0.1 * m2 / (count - 1), 1e-14);
  }
  // Inputs untouched.
  EXPECT_EQ(rm[0], 0.1);
}

TEST(TensorTest, BatchNormEvalAndEdgeCases) {
  const Tensor x = random_tensor(Shape{2, 1, 2, 2}, 15);
  const Tensor gamma(Shape{1, 1, 1, 1}, 2.0), beta(Shape{1, 1, 1, 1}, 0.5);
  const Tensor rm(Shape{1, 1, 1, 1}, 0.3), rv(Shape{1, 1, 1, 1}, 4.0);
  const BatchNormResult r = batch_norm(x, gamma, beta, rm, rv, BnMode::kEval, 0.1, 0);
  for (int64_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(r.output[i], 2 * (x[i] - 0.3) / 2 + 0.5, 1e-15);
  EXPECT_EQ(r.running_var[0], 4.0);
  // One value per channel cannot give batch statistics.
  EXPECT_THROW(batch_norm(Tensor(1, 1, 1, 1), gamma, beta, rm, rv, BnMode::kTrain, 0.1, 1e-5),
               ShapeError);
  // Constant input with eps = 0: zero variance maps to beta, not NaN.
  const BatchNormResult z = batch_norm(Tensor(2, 1, 2, 2, 3), gamma, beta, rm, rv, BnMode::kTrain, 0.1, 0);
  for (Real v : z.output.values()) EXPECT_EQ(v, 0.5);
}

TEST(TensorTest, ReflectIndexAndGather) {
  EXPECT_EQ(reflect_index(-1, 5), 1);
  EXPECT_EQ(reflect_index(5, 5), 3);
  EXPECT_EQ(reflect_index(6, 5), 2);
  EXPECT_EQ(reflect_index(9, 5), 1);
  EXPECT_EQ(reflect_index(0, 1), 0);
  const Tensor x = random_tensor(Shape{1, 1, 3, 3}, 16);
  const std::vector<int64_t> rows{0, 1, 2, 1}, cols{2, 2};
  const Tensor g = gather_spatial(x, rows, cols);
  EXPECT_EQ(g.at(0, 0, 3, 1), x.at(0, 0, 1, 2));
  const Tensor go = random_tensor(g.shape(), 17);
  auto inner = [&](const Tensor& xx) { return sum(mul(gather_spatial(xx, rows, cols), go)); };
  EXPECT_LT(max_abs_diff(gather_spatial_grad(go, x.shape(), rows, cols), testing::numeric_grad(inner, x)), 1e-9);
}

TEST(TensorTest, Elementwise) {
  const Tensor x(Shape{1, 1, 1, 4}, std::vector<Real>{-2, -0.0, 0.5, 40});
  const Tensor r = relu(x), a = abs(x), s = sigmoid(x);
  EXPECT_EQ(r[0], 0);
  EXPECT_EQ(r[3], 40);
  EXPECT_EQ(a[0], 2);
  EXPECT_NEAR(s[2], 1 / (1 + std::exp(-0.5)), 1e-15);
  EXPECT_GT(s[3], 0.999);
  EXPECT_LE(s[3], 1.0);
  EXPECT_NEAR(sigmoid(Real(-800)), 0, 1e-300);
  EXPECT_TRUE(all_finite(x));
  Tensor bad = x;
  bad[1] = std::nan("");
  EXPECT_FALSE(all_finite(bad));
}

}  // namespace
}  // namespace wavedge
