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

#include "wavedge/wega.hpp"

#include "wavedge/wavelet.hpp"

namespace wavedge::wega {
namespace {

void require_single_channel(const Var& logits) {
  if (logits.shape().c != 1) {
    throw ShapeError("side logits must have one channel, got " +
                     std::to_string(logits.shape().c));
  }
}

void require_aligned(const Var& features, const Var& logits) {
  const Shape& f = features.shape();
  const Shape& p = logits.shape();
  if (f.n != p.n || f.h != p.h || f.w != p.w) {
    throw ShapeError("side logits " + p.str() + " not aligned with features " + f.str());
  }
}

std::vector<int64_t> reflect_range(int64_t padded, int64_t n) {
  std::vector<int64_t> idx(static_cast<size_t>(padded));
  for (int64_t i = 0; i < padded; ++i) idx[i] = reflect_index(i, n);
  return idx;
}

std::vector<int64_t> iota_range(int64_t n) {
  std::vector<int64_t> idx(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace

ReverseBranch reverse_branch(const Var& features, const Var& next_logits) {
  require_single_channel(next_logits);
  require_aligned(features, next_logits);
  Var r = rsub(Real(1), sigmoid(next_logits));
  return ReverseBranch{r, mul(features, r)};
}

BoundaryBranch boundary_branch(const Var& features, const Var& next_logits) {
  require_single_channel(next_logits);
  require_aligned(features, next_logits);
  Var b = stage_edge_mask(sigmoid(next_logits));
  return BoundaryBranch{b, mul(features, b)};
}

InputEdgeBranch input_edge_branch(const Var& features) {
  Var mean = channel_mean(features);
  Var h = stage_edge_mask(mean);
  return InputEdgeBranch{mean, h, mul(features, h)};
}

Var stage_edge_mask(const Var& single_channel) {
  const Shape& s = single_channel.shape();
  const int64_t ph = (s.h + 3) / 4 * 4, pw = (s.w + 3) / 4 * 4;
  if (ph == s.h && pw == s.w) return wavelet::edge_mask(single_channel);
  Var padded = gather_spatial(single_channel, reflect_range(ph, s.h), reflect_range(pw, s.w));
  return gather_spatial(wavelet::edge_mask(padded), iota_range(s.h), iota_range(s.w));
}

Cbam::Cbam(int64_t channels, int64_t reduction, Rng& rng) : channels_(channels) {
  if (reduction < 1 || channels % reduction != 0) {
    throw ShapeError("CBAM reduction " + std::to_string(reduction) +
                     " does not divide channel count " + std::to_string(channels));
  }
  const int64_t hidden = channels / reduction;
  fc1_ = nn::Conv2d(channels, hidden, 1, 1, 0, true, rng);
  fc2_ = nn::Conv2d(hidden, channels, 1, 1, 0, true, rng);
  spatial_ = nn::Conv2d(2, 1, 7, 1, 3, false, rng);
}

Var Cbam::mlp(const Var& pooled) const { return fc2_.forward(relu(fc1_.forward(pooled))); }

Var Cbam::forward(const Var& x) const {
  if (x.shape().c != channels_) {
    throw ShapeError("CBAM built for " + std::to_string(channels_) + " channels, got " +
                     std::to_string(x.shape().c));
  }
  Var channel_gate = sigmoid(add(mlp(global_avg_pool(x)), mlp(global_max_pool(x))));
  Var x1 = mul(x, channel_gate);
  Var descriptor = concat_channels({channel_mean(x1), channel_max(x1)});
  Var spatial_gate = sigmoid(spatial_.forward(descriptor));
  return mul(x1, spatial_gate);
}

void Cbam::collect(const std::string& prefix, ParameterList& out) const {
  fc1_.collect(prefix + ".mlp.fc1", out);
  fc2_.collect(prefix + ".mlp.fc2", out);
  spatial_.collect(prefix + ".spatial.conv", out);
}

WegaBlock::WegaBlock(int64_t channels, int64_t cbam_reduction, Rng& rng, bool use_wavelet_edges)
    : channels_(channels),
      use_wavelet_edges_(use_wavelet_edges),
      phi_(3 * channels, channels, 3, 1, nn::Activation::kRelu, rng),
      psi_(channels, 1, 3, 1, nn::Activation::kSigmoid, rng),
      cbam_(channels, cbam_reduction, rng) {}

WegaState WegaBlock::forward(const Var& features, const Var& next_logits, BnMode mode) {
  if (features.shape().c != channels_) {
    throw ShapeError("W-EGA block built for " + std::to_string(channels_) + " channels, got " +
                     std::to_string(features.shape().c));
  }
  WegaState st;
  ReverseBranch rev = reverse_branch(features, next_logits);
  st.reverse_mask = rev.mask;
  st.f_bg = rev.features;
  if (use_wavelet_edges_) {
    BoundaryBranch bnd = boundary_branch(features, next_logits);
    InputEdgeBranch inp = input_edge_branch(features);
    st.boundary_mask = bnd.mask;
    st.f_edge = bnd.features;
    st.input_mask = inp.mask;
    st.f_inp = inp.features;
  } else {
    const Shape& s = features.shape();
    st.boundary_mask = Var(Tensor(Shape{s.n, 1, s.h, s.w}));
    st.input_mask = Var(Tensor(Shape{s.n, 1, s.h, s.w}));
    st.f_edge = Var(Tensor(s));
    st.f_inp = Var(Tensor(s));
  }
  fuse_and_refine(st.f_bg, st.f_edge, st.f_inp, features, mode, &st);
  return st;
}

Var WegaBlock::fuse_and_refine(const Var& f_bg, const Var& f_edge, const Var& f_inp,
                               const Var& features, BnMode mode, WegaState* state) {
  const Shape& s = features.shape();
  for (const Var* v : {&f_bg, &f_edge, &f_inp}) {
    if (v->shape() != s) {
      throw ShapeError("branch feature " + v->shape().str() + " does not match " + s.str());
    }
  }
  if (s.c != channels_) {
    throw ShapeError("W-EGA block built for " + std::to_string(channels_) + " channels, got " +
                     std::to_string(s.c));
  }
  Var z = phi_.forward(concat_channels({f_bg, f_edge, f_inp}), mode);
  Var alpha = psi_.forward(z, mode);
  Var squeezed = mul(z, alpha);
  Var refreshed = cbam_.forward(squeezed);
  Var out = add(refreshed, features);
  if (state) {
    state->fused = z;
    state->alpha = alpha;
    state->squeezed = squeezed;
    state->refreshed = refreshed;
    state->output = out;
  }
  return out;
}

void WegaBlock::collect(const std::string& prefix, ParameterList& out) const {
  phi_.collect(prefix + ".phi", out);
  psi_.collect(prefix + ".psi", out);
  cbam_.collect(prefix + ".cbam", out);
}

void WegaBlock::buffers(const std::string& prefix, std::vector<nn::NamedBuffer>& out) {
  phi_.buffers(prefix + ".phi", out);
  psi_.buffers(prefix + ".psi", out);
}

}  // namespace wavedge::wega
