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

#ifndef WAVEDGE_AUTODIFF_HPP_
#define WAVEDGE_AUTODIFF_HPP_

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wavedge/tensor.hpp"

namespace wavedge {

// Reverse-mode differentiation. A graph is built eagerly by the op functions
// below; only nodes that (transitively) depend on a requires_grad leaf record
// parents and a backward closure. Graphs are confined to one thread.

struct Node {
  Tensor value;
  Tensor grad;  // empty until materialized
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads self.grad and accumulates into parents' grads.
  std::function<void(Node& self)> backward_fn;

  bool is_leaf() const { return !backward_fn; }
  void accumulate(const Tensor& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  /// Mutable access for optimizers and finite differences. Only meaningful
  /// on leaves; graphs built earlier keep their own copies.
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() { node_->grad = Tensor(); }
  bool requires_grad() const { return node_->requires_grad; }
  const Shape& shape() const { return node_->value.shape(); }
  bool defined() const { return node_ != nullptr; }

  const std::shared_ptr<Node>& node() const { return node_; }
  static Var from_node(std::shared_ptr<Node> node);

 private:
  std::shared_ptr<Node> node_;
};

/// A named learnable leaf.
struct Parameter {
  std::string name;
  Var var;
};

using ParameterList = std::vector<Parameter>;

/// Wraps `init` as a learnable leaf.
Var make_parameter(Tensor init);

/// Runs reverse accumulation from a scalar loss. Intermediate gradients are
/// reset on every call; leaf gradients accumulate across calls.
void backward(const Var& loss);

/// backward() followed by a snapshot of every parameter gradient. Parameters
/// the loss does not reach get zeros.
std::map<std::string, Tensor> backward(const Var& loss, const ParameterList& params);

void zero_grads(const ParameterList& params);

/// Builds a graph node for a custom op. backward_fn runs only if some input
/// requires a gradient; it reads self.grad and calls accumulate on
/// self.parents (same order as inputs).
Var make_op(Tensor value, const std::vector<Var>& inputs, std::function<void(Node&)> backward_fn);

// --- branch tracing -----------------------------------------------------------

// Piecewise-smooth ops (relu, abs, channel_max, global_max_pool) fold the branch
// each element took into a per-thread fingerprint while tracing is on. Two
// forward passes with equal fingerprints evaluated the same smooth piece.
void begin_branch_trace();
/// Stops tracing and returns the fingerprint of the ops seen since begin.
uint64_t end_branch_trace();

// --- differentiable ops -----------------------------------------------------

Var conv2d(const Var& x, const Var& kernel, const Conv2dSpec& spec,
           const std::optional<Var>& bias = std::nullopt);
Var bilinear_upsample(const Var& x, int64_t scale);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add(const Var& a, Real s);
Var mul(const Var& a, Real s);
/// s - a
Var rsub(Real s, const Var& a);
Var sigmoid(const Var& x);
Var relu(const Var& x);
Var abs(const Var& x);
Var channel_sum(const Var& x);
Var channel_mean(const Var& x);
Var channel_max(const Var& x);
Var global_avg_pool(const Var& x);
Var global_max_pool(const Var& x);
Var concat_channels(const std::vector<Var>& parts);
Var slice_channels(const Var& x, int64_t begin, int64_t count);
/// Sum of all elements as a (1, 1, 1, 1) scalar.
Var sum(const Var& x);
Var gather_spatial(const Var& x, std::vector<int64_t> rows, std::vector<int64_t> cols);

struct BatchNormOutput {
  Var output;
  Tensor running_mean;
  Tensor running_var;
};

/// Train mode differentiates through the batch statistics.
BatchNormOutput batch_norm(const Var& x, const Var& gamma, const Var& beta,
                           const Tensor& running_mean, const Tensor& running_var, BnMode mode,
                           Real momentum, Real eps);

// --- optimizer --------------------------------------------------------------

struct SgdOptions {
  Real lr = 0.01;
  Real momentum = 0.867472;
  Real weight_decay = 3.5454e-6;
};

/// v <- momentum * v + (g + weight_decay * theta); theta <- theta - lr * v.
/// velocity is keyed by parameter name and created on first use.
void sgd_step(ParameterList& params, const std::map<std::string, Tensor>& grads,
              const SgdOptions& options, std::map<std::string, Tensor>& velocity);

}  // namespace wavedge

#endif  // WAVEDGE_AUTODIFF_HPP_
