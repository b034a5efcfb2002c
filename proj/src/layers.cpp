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

#include "wavedge/layers.hpp"

#include <cmath>

namespace wavedge::nn {

Conv2d::Conv2d(int64_t in_channels, int64_t out_channels, int64_t kernel, int64_t stride,
               int64_t padding, bool with_bias, Rng& rng) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1 || padding < 0) {
    throw ShapeError("invalid conv geometry: in=" + std::to_string(in_channels) +
                     " out=" + std::to_string(out_channels) + " k=" + std::to_string(kernel));
  }
  spec_.stride_h = spec_.stride_w = stride;
  spec_.pad_h = spec_.pad_w = padding;
  const Real bound = std::sqrt(Real(6) / static_cast<Real>(in_channels * kernel * kernel));
  Tensor w(Shape{out_channels, in_channels, kernel, kernel});
  for (auto& v : w.values()) v = static_cast<Real>(rng.uniform(-bound, bound));
  weight_ = make_parameter(std::move(w));
  if (with_bias) bias_ = make_parameter(Tensor(Shape{1, out_channels, 1, 1}));
}

Var Conv2d::forward(const Var& x) const {
  return conv2d(x, weight_, spec_, bias_);
}

void Conv2d::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".weight", weight_});
  if (bias_) out.push_back({prefix + ".bias", *bias_});
}

BatchNorm2d::BatchNorm2d(int64_t channels, Real momentum, Real eps)
    : gamma_(make_parameter(Tensor(Shape{1, channels, 1, 1}, Real(1)))),
      beta_(make_parameter(Tensor(Shape{1, channels, 1, 1}))),
      running_mean_(Shape{1, channels, 1, 1}),
      running_var_(Shape{1, channels, 1, 1}, Real(1)),
      momentum_(momentum),
      eps_(eps) {}

Var BatchNorm2d::forward(const Var& x, BnMode mode) {
  BatchNormOutput r =
      batch_norm(x, gamma_, beta_, running_mean_, running_var_, mode, momentum_, eps_);
  if (mode == BnMode::kTrain) {
    running_mean_ = std::move(r.running_mean);
    running_var_ = std::move(r.running_var);
  }
  return r.output;
}

void BatchNorm2d::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".gamma", gamma_});
  out.push_back({prefix + ".beta", beta_});
}

void BatchNorm2d::buffers(const std::string& prefix, std::vector<NamedBuffer>& out) {
  out.push_back({prefix + ".running_mean", &running_mean_});
  out.push_back({prefix + ".running_var", &running_var_});
}

ConvBnAct::ConvBnAct(int64_t in_channels, int64_t out_channels, int64_t kernel, int64_t stride,
                     Activation act, Rng& rng)
    : conv_(in_channels, out_channels, kernel, stride, kernel / 2, false, rng),
      bn_(out_channels),
      act_(act) {}

Var ConvBnAct::forward(const Var& x, BnMode mode) {
  Var y = bn_.forward(conv_.forward(x), mode);
  switch (act_) {
    case Activation::kRelu:
      return relu(y);
    case Activation::kSigmoid:
      return sigmoid(y);
    case Activation::kNone:
      break;
  }
  return y;
}

void ConvBnAct::collect(const std::string& prefix, ParameterList& out) const {
  conv_.collect(prefix + ".conv", out);
  bn_.collect(prefix + ".bn", out);
}

void ConvBnAct::buffers(const std::string& prefix, std::vector<NamedBuffer>& out) {
  bn_.buffers(prefix + ".bn", out);
}

}  // namespace wavedge::nn
