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

#ifndef WAVEDGE_LAYERS_HPP_
#define WAVEDGE_LAYERS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "wavedge/autodiff.hpp"
#include "wavedge/rng.hpp"

namespace wavedge::nn {

/// Non-learnable state saved alongside parameters (batch-norm running stats).
struct NamedBuffer {
  std::string name;
  Tensor* tensor;
};

class Conv2d {
 public:
  Conv2d() = default;
  /// Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero bias.
  Conv2d(int64_t in_channels, int64_t out_channels, int64_t kernel, int64_t stride,
         int64_t padding, bool with_bias, Rng& rng);

  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParameterList& out) const;

  const Var& weight() const { return weight_; }
  const std::optional<Var>& bias() const { return bias_; }
  int64_t out_channels() const { return weight_.shape().n; }

 private:
  Var weight_;
  std::optional<Var> bias_;
  Conv2dSpec spec_;
};

class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  explicit BatchNorm2d(int64_t channels, Real momentum = 0.1, Real eps = 1e-5);

  /// Train mode replaces the running statistics with their updated values.
  Var forward(const Var& x, BnMode mode);
  void collect(const std::string& prefix, ParameterList& out) const;
  void buffers(const std::string& prefix, std::vector<NamedBuffer>& out);

  const Var& gamma() const { return gamma_; }
  const Var& beta() const { return beta_; }

 private:
  Var gamma_, beta_;
  Tensor running_mean_, running_var_;
  Real momentum_ = 0.1;
  Real eps_ = 1e-5;
};

enum class Activation { kNone, kRelu, kSigmoid };

/// conv (no bias) -> batch norm -> activation
class ConvBnAct {
 public:
  ConvBnAct() = default;
  ConvBnAct(int64_t in_channels, int64_t out_channels, int64_t kernel, int64_t stride,
            Activation act, Rng& rng);

  Var forward(const Var& x, BnMode mode);
  void collect(const std::string& prefix, ParameterList& out) const;
  void buffers(const std::string& prefix, std::vector<NamedBuffer>& out);

  BatchNorm2d& bn() { return bn_; }

 private:
  Conv2d conv_;
  BatchNorm2d bn_;
  Activation act_ = Activation::kRelu;
};

}  // namespace wavedge::nn

#endif  // WAVEDGE_LAYERS_HPP_
