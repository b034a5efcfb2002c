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

#include "wavedge/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace wavedge {
namespace {

using NodePtr = std::shared_ptr<Node>;

Var record(Tensor value, std::vector<NodePtr> parents, std::function<void(Node&)> fn) {
  const bool needs = std::any_of(parents.begin(), parents.end(),
                                 [](const NodePtr& p) { return p->requires_grad; });
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(fn);
  }
  return Var::from_node(std::move(node));
}

Node& parent(Node& self, size_t i) { return *self.parents[i]; }

}  // namespace

void Node::accumulate(const Tensor& g) {
  if (!requires_grad) return;
  if (g.shape() != value.shape()) {
    throw ShapeError("gradient shape " + g.shape().str() + " != value shape " +
                     value.shape().str());
  }
  if (grad.empty()) {
    grad = g;
    return;
  }
  Real* dst = grad.data();
  const Real* src = g.data();
  for (int64_t i = 0; i < grad.numel(); ++i) dst[i] += src[i];
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Var Var::from_node(std::shared_ptr<Node> node) {
  Var v;
  v.node_ = std::move(node);
  return v;
}

Var make_op(Tensor value, const std::vector<Var>& inputs, std::function<void(Node&)> backward_fn) {
  std::vector<NodePtr> parents;
  parents.reserve(inputs.size());
  for (const Var& v : inputs) parents.push_back(v.node());
  return record(std::move(value), std::move(parents), std::move(backward_fn));
}

Var make_parameter(Tensor init) { return Var(std::move(init), true); }

void backward(const Var& loss) {
  if (!loss.defined() || loss.value().numel() != 1) {
    throw ShapeError("backward needs a scalar loss, got " +
                     (loss.defined() ? loss.shape().str() : std::string("undefined")));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  for (Node* n : order) {
    if (!n->is_leaf()) n->grad = Tensor();
  }
  Node& root = *loss.node();
  if (root.is_leaf()) {
    root.accumulate(Tensor(root.value.shape(), Real(1)));
    return;
  }
  root.grad = Tensor(root.value.shape(), Real(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->is_leaf() || n->grad.empty()) continue;
    n->backward_fn(*n);
  }
}

std::map<std::string, Tensor> backward(const Var& loss, const ParameterList& params) {
  backward(loss);
  std::map<std::string, Tensor> grads;
  for (const Parameter& p : params) {
    grads[p.name] = p.var.has_grad() ? p.var.grad() : Tensor(p.var.shape());
  }
  return grads;
}

void zero_grads(const ParameterList& params) {
  for (const Parameter& p : params) {
    Var v = p.var;
    v.zero_grad();
  }
}

Var conv2d(const Var& x, const Var& kernel, const Conv2dSpec& spec, const std::optional<Var>& bias) {
  std::span<const Real> b;
  if (bias) b = bias->value().values();
  Tensor out = conv2d(x.value(), kernel.value(), spec, b);
  std::vector<NodePtr> parents{x.node(), kernel.node()};
  if (bias) parents.push_back(bias->node());
  return record(std::move(out), std::move(parents), [spec](Node& self) {
    Node& xn = parent(self, 0);
    Node& kn = parent(self, 1);
    if (xn.requires_grad) {
      xn.accumulate(conv2d_grad_input(self.grad, kn.value, xn.value.shape(), spec));
    }
    if (kn.requires_grad) {
      kn.accumulate(conv2d_grad_kernel(self.grad, xn.value, kn.value.shape(), spec));
    }
    if (self.parents.size() > 2 && parent(self, 2).requires_grad) {
      Node& bn = parent(self, 2);
      Tensor db(bn.value.shape());
      const Shape& s = self.grad.shape();
      for (int64_t n = 0; n < s.n; ++n) {
        for (int64_t c = 0; c < s.c; ++c) {
          const Real* g = self.grad.plane(n, c);
          Real acc = 0;
          for (int64_t i = 0; i < s.plane(); ++i) acc += g[i];
          db[c] += acc;
        }
      }
      bn.accumulate(db);
    }
  });
}

Var bilinear_upsample(const Var& x, int64_t scale) {
  return record(bilinear_upsample(x.value(), scale), {x.node()}, [scale](Node& self) {
    Node& xn = parent(self, 0);
    xn.accumulate(bilinear_upsample_grad(self.grad, xn.value.shape(), scale));
  });
}

Var add(const Var& a, const Var& b) {
  return record(add(a.value(), b.value()), {a.node(), b.node()}, [](Node& self) {
    Node& an = parent(self, 0);
    Node& bn = parent(self, 1);
    if (an.requires_grad) an.accumulate(reduce_to(self.grad, an.value.shape()));
    if (bn.requires_grad) bn.accumulate(reduce_to(self.grad, bn.value.shape()));
  });
}

Var sub(const Var& a, const Var& b) {
  return record(sub(a.value(), b.value()), {a.node(), b.node()}, [](Node& self) {
    Node& an = parent(self, 0);
    Node& bn = parent(self, 1);
    if (an.requires_grad) an.accumulate(reduce_to(self.grad, an.value.shape()));
    if (bn.requires_grad) bn.accumulate(reduce_to(mul(self.grad, Real(-1)), bn.value.shape()));
  });
}

Var mul(const Var& a, const Var& b) {
  return record(mul(a.value(), b.value()), {a.node(), b.node()}, [](Node& self) {
    Node& an = parent(self, 0);
    Node& bn = parent(self, 1);
    if (an.requires_grad) an.accumulate(reduce_to(mul(self.grad, bn.value), an.value.shape()));
    if (bn.requires_grad) bn.accumulate(reduce_to(mul(self.grad, an.value), bn.value.shape()));
  });
}

Var add(const Var& a, Real s) {
  return record(add(a.value(), s), {a.node()},
                [](Node& self) { parent(self, 0).accumulate(self.grad); });
}

Var mul(const Var& a, Real s) {
  return record(mul(a.value(), s), {a.node()},
                [s](Node& self) { parent(self, 0).accumulate(mul(self.grad, s)); });
}

Var rsub(Real s, const Var& a) {
  Tensor out = mul(a.value(), Real(-1));
  for (auto& v : out.values()) v += s;
  return record(std::move(out), {a.node()},
                [](Node& self) { parent(self, 0).accumulate(mul(self.grad, Real(-1))); });
}

Var sigmoid(const Var& x) {
  return record(sigmoid(x.value()), {x.node()}, [](Node& self) {
    Tensor g = self.grad;
    const Real* y = self.value.data();
    for (int64_t i = 0; i < g.numel(); ++i) g[i] *= y[i] * (1 - y[i]);
    parent(self, 0).accumulate(g);
  });
}

namespace {

struct BranchTrace {
  bool active = false;
  uint64_t hash = 0xcbf29ce484222325ULL;
};
thread_local BranchTrace g_trace;

void fold(uint64_t v) {
  g_trace.hash = (g_trace.hash ^ v) * 0x100000001b3ULL;
}

}  // namespace

void begin_branch_trace() { g_trace = BranchTrace{true}; }

uint64_t end_branch_trace() {
  const uint64_t h = g_trace.hash;
  g_trace = BranchTrace{};
  return h;
}

Var relu(const Var& x) {
  if (g_trace.active) {
    for (Real v : x.value().values()) fold(v > 0 ? 1 : 0);
  }
  return record(relu(x.value()), {x.node()}, [](Node& self) {
    Tensor g = self.grad;
    const Real* in = parent(self, 0).value.data();
    for (int64_t i = 0; i < g.numel(); ++i) {
      if (!(in[i] > 0)) g[i] = 0;
    }
    parent(self, 0).accumulate(g);
  });
}

Var abs(const Var& x) {
  if (g_trace.active) {
    for (Real v : x.value().values()) fold(v > 0 ? 1 : (v < 0 ? 2 : 0));
  }
  return record(abs(x.value()), {x.node()}, [](Node& self) {
    Tensor g = self.grad;
    const Real* in = parent(self, 0).value.data();
    for (int64_t i = 0; i < g.numel(); ++i) {
      g[i] *= in[i] > 0 ? Real(1) : (in[i] < 0 ? Real(-1) : Real(0));
    }
    parent(self, 0).accumulate(g);
  });
}

Var channel_sum(const Var& x) {
  return record(channel_sum(x.value()), {x.node()}, [](Node& self) {
    Node& xn = parent(self, 0);
    xn.accumulate(reduce_to(mul(Tensor(xn.value.shape(), Real(1)), self.grad), xn.value.shape()));
  });
}

Var channel_mean(const Var& x) {
  return mul(channel_sum(x), Real(1) / static_cast<Real>(x.shape().c));
}

Var channel_max(const Var& x) {
  if (g_trace.active) {
    const Shape& s = x.shape();
    for (int64_t n = 0; n < s.n; ++n) {
      for (int64_t i = 0; i < s.plane(); ++i) {
        int64_t best = 0;
        for (int64_t c = 1; c < s.c; ++c) {
          if (x.value().plane(n, c)[i] > x.value().plane(n, best)[i]) best = c;
        }
        fold(static_cast<uint64_t>(best));
      }
    }
  }
  return record(channel_max(x.value()), {x.node()}, [](Node& self) {
    Node& xn = parent(self, 0);
    const Shape& s = xn.value.shape();
    Tensor g(s);
    for (int64_t n = 0; n < s.n; ++n) {
      for (int64_t i = 0; i < s.plane(); ++i) {
        int64_t best = 0;
        for (int64_t c = 1; c < s.c; ++c) {
          if (xn.value.plane(n, c)[i] > xn.value.plane(n, best)[i]) best = c;
        }
        g.plane(n, best)[i] = self.grad.plane(n, 0)[i];
      }
    }
    xn.accumulate(g);
  });
}

Var global_avg_pool(const Var& x) {
  return record(global_avg_pool(x.value()), {x.node()}, [](Node& self) {
    Node& xn = parent(self, 0);
    const Shape& s = xn.value.shape();
    Tensor g(s);
    const Real scale = Real(1) / static_cast<Real>(s.plane());
    for (int64_t n = 0; n < s.n; ++n) {
      for (int64_t c = 0; c < s.c; ++c) {
        const Real v = self.grad.at(n, c, 0, 0) * scale;
        Real* p = g.plane(n, c);
        std::fill(p, p + s.plane(), v);
      }
    }
    xn.accumulate(g);
  });
}

Var global_max_pool(const Var& x) {
  if (g_trace.active) {
    const Shape& s = x.shape();
    for (int64_t n = 0; n < s.n; ++n) {
      for (int64_t c = 0; c < s.c; ++c) {
        const Real* p = x.value().plane(n, c);
        fold(static_cast<uint64_t>(std::max_element(p, p + s.plane()) - p));
      }
    }
  }
  return record(global_max_pool(x.value()), {x.node()}, [](Node& self) {
    Node& xn = parent(self, 0);
    const Shape& s = xn.value.shape();
    Tensor g(s);
    for (int64_t n = 0; n < s.n; ++n) {
      for (int64_t c = 0; c < s.c; ++c) {
        const Real* p = xn.value.plane(n, c);
        const int64_t arg = std::max_element(p, p + s.plane()) - p;
        g.plane(n, c)[arg] = self.grad.at(n, c, 0, 0);
      }
    }
    xn.accumulate(g);
  });
}

Var concat_channels(const std::vector<Var>& parts) {
  std::vector<Tensor> values;
  std::vector<NodePtr> parents;
  values.reserve(parts.size());
  for (const Var& p : parts) {
    values.push_back(p.value());
    parents.push_back(p.node());
  }
  return record(concat_channels(values), std::move(parents), [](Node& self) {
    int64_t c0 = 0;
    for (auto& p : self.parents) {
      const int64_t c = p->value.shape().c;
      if (p->requires_grad) p->accumulate(slice_channels(self.grad, c0, c));
      c0 += c;
    }
  });
}

Var slice_channels(const Var& x, int64_t begin, int64_t count) {
  return record(slice_channels(x.value(), begin, count), {x.node()}, [begin](Node& self) {
    Node& xn = parent(self, 0);
    const Shape& s = xn.value.shape();
    Tensor g(s);
    const int64_t count = self.grad.shape().c;
    for (int64_t n = 0; n < s.n; ++n) {
      std::copy(self.grad.plane(n, 0), self.grad.plane(n, 0) + count * s.plane(),
                g.plane(n, begin));
    }
    xn.accumulate(g);
  });
}

Var sum(const Var& x) {
  return record(Tensor::scalar(sum(x.value())), {x.node()}, [](Node& self) {
    Node& xn = parent(self, 0);
    xn.accumulate(Tensor(xn.value.shape(), self.grad.item()));
  });
}

Var gather_spatial(const Var& x, std::vector<int64_t> rows, std::vector<int64_t> cols) {
  Tensor out = gather_spatial(x.value(), rows, cols);
  return record(std::move(out), {x.node()},
                [rows = std::move(rows), cols = std::move(cols)](Node& self) {
                  Node& xn = parent(self, 0);
                  xn.accumulate(gather_spatial_grad(self.grad, xn.value.shape(), rows, cols));
                });
}

BatchNormOutput batch_norm(const Var& x, const Var& gamma, const Var& beta,
                           const Tensor& running_mean, const Tensor& running_var, BnMode mode,
                           Real momentum, Real eps) {
  BatchNormResult r = batch_norm(x.value(), gamma.value(), beta.value(), running_mean,
                                 running_var, mode, momentum, eps);
  Var out = record(
      std::move(r.output), {x.node(), gamma.node(), beta.node()},
      [mode, mean = r.batch_mean, inv_std = r.batch_inv_std](Node& self) {
        Node& xn = parent(self, 0);
        Node& gn = parent(self, 1);
        Node& bn = parent(self, 2);
        const Shape& s = xn.value.shape();
        const auto count = static_cast<Real>(s.n * s.plane());
        Tensor dx(s), dgamma(gn.value.shape()), dbeta(bn.value.shape());
        for (int64_t c = 0; c < s.c; ++c) {
          Real sum_g = 0, sum_g_xhat = 0;
          for (int64_t n = 0; n < s.n; ++n) {
            const Real* g = self.grad.plane(n, c);
            const Real* in = xn.value.plane(n, c);
            for (int64_t i = 0; i < s.plane(); ++i) {
              const Real xhat = (in[i] - mean[c]) * inv_std[c];
              sum_g += g[i];
              sum_g_xhat += g[i] * xhat;
            }
          }
          dgamma[c] = sum_g_xhat;
          dbeta[c] = sum_g;
          if (!xn.requires_grad) continue;
          const Real gam = gn.value[c];
          for (int64_t n = 0; n < s.n; ++n) {
            const Real* g = self.grad.plane(n, c);
            const Real* in = xn.value.plane(n, c);
            Real* d = dx.plane(n, c);
            for (int64_t i = 0; i < s.plane(); ++i) {
              if (mode == BnMode::kEval) {
                d[i] = g[i] * gam * inv_std[c];
              } else {
                const Real xhat = (in[i] - mean[c]) * inv_std[c];
                d[i] = gam * inv_std[c] / count * (count * g[i] - sum_g - xhat * sum_g_xhat);
              }
            }
          }
        }
        if (xn.requires_grad) xn.accumulate(dx);
        if (gn.requires_grad) gn.accumulate(dgamma);
        if (bn.requires_grad) bn.accumulate(dbeta);
      });
  return BatchNormOutput{std::move(out), std::move(r.running_mean), std::move(r.running_var)};
}

void sgd_step(ParameterList& params, const std::map<std::string, Tensor>& grads,
              const SgdOptions& options, std::map<std::string, Tensor>& velocity) {
  for (Parameter& p : params) {
    auto git = grads.find(p.name);
    if (git == grads.end()) continue;
    Tensor& theta = p.var.mutable_value();
    const Tensor& g = git->second;
    if (g.shape() != theta.shape()) {
      throw ShapeError("gradient for " + p.name + " has shape " + g.shape().str() +
                       ", parameter has " + theta.shape().str());
    }
    Tensor& v = velocity[p.name];
    if (v.empty()) v = Tensor(theta.shape());
    for (int64_t i = 0; i < theta.numel(); ++i) {
      v[i] = options.momentum * v[i] + (g[i] + options.weight_decay * theta[i]);
      theta[i] -= options.lr * v[i];
    }
  }
}

}  // namespace wavedge
