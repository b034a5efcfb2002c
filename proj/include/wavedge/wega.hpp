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

#ifndef WAVEDGE_WEGA_HPP_
#define WAVEDGE_WEGA_HPP_

#include <string>
#include <vector>

#include "wavedge/autodiff.hpp"
#include "wavedge/layers.hpp"
#include "wavedge/rng.hpp"

namespace wavedge::wega {

// Wavelet edge-guided attention. A decoder feature F (B, C, H, W) is gated by
// three single-channel masks derived from the coarser side logits P and from
// F itself, fused back to C channels, squeezed spatially, refreshed by CBAM,
// and added back to F.

struct ReverseBranch {
  Var mask;      // R = 1 - sigmoid(P), in (0, 1)
  Var features;  // F * R
};

struct BoundaryBranch {
  Var mask;      // B = edge_mask(sigmoid(P)), >= 0
  Var features;  // F * B
};

struct InputEdgeBranch {
  Var channel_mean;  // mean over the C channels of F
  Var mask;          // H = edge_mask(channel_mean), >= 0
  Var features;      // F * H
};

/// next_logits must already be resized to the feature's H x W.
ReverseBranch reverse_branch(const Var& features, const Var& next_logits);
BoundaryBranch boundary_branch(const Var& features, const Var& next_logits);
InputEdgeBranch input_edge_branch(const Var& features);

/// edge_mask for any spatial size: reflect-pads bottom/right up to a multiple
/// of 4, applies the wavelet mask, and crops back.
Var stage_edge_mask(const Var& single_channel);

/// Channel gate sigmoid(MLP(avg) + MLP(max)) followed by spatial gate
/// sigmoid(conv7x7([mean_c; max_c])). The MLP is two biased 1x1 convs with a
/// ReLU between them, shared by both pooled descriptors.
class Cbam {
 public:
  Cbam() = default;
  Cbam(int64_t channels, int64_t reduction, Rng& rng);

  Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParameterList& out) const;
  int64_t channels() const { return channels_; }

 private:
  Var mlp(const Var& pooled) const;

  int64_t channels_ = 0;
  nn::Conv2d fc1_, fc2_, spatial_;
};

/// All intermediates of one forward pass, for inspection and tests.
struct WegaState {
  Var reverse_mask, boundary_mask, input_mask;
  Var f_bg, f_edge, f_inp;
  Var fused;       // Z = phi([F_bg; F_edge; F_inp])
  Var alpha;       // sigmoid(BN(conv3x3(Z))), in (0, 1)
  Var squeezed;    // Z * alpha
  Var refreshed;   // CBAM(Z * alpha)
  Var output;      // refreshed + F
};

class WegaBlock {
 public:
  WegaBlock() = default;
  /// use_wavelet_edges = false zeroes the boundary and input-edge masks
  /// (ablation hook); the parameter set is unchanged.
  WegaBlock(int64_t channels, int64_t cbam_reduction, Rng& rng, bool use_wavelet_edges = true);

  WegaState forward(const Var& features, const Var& next_logits, BnMode mode);
  /// phi -> psi squeeze -> CBAM -> residual on precomputed branch features.
  Var fuse_and_refine(const Var& f_bg, const Var& f_edge, const Var& f_inp, const Var& features,
                      BnMode mode, WegaState* state = nullptr);

  void collect(const std::string& prefix, ParameterList& out) const;
  void buffers(const std::string& prefix, std::vector<nn::NamedBuffer>& out);

  int64_t channels() const { return channels_; }
  nn::ConvBnAct& phi() { return phi_; }
  nn::ConvBnAct& psi() { return psi_; }
  Cbam& cbam() { return cbam_; }

 private:
  int64_t channels_ = 0;
  bool use_wavelet_edges_ = true;
  nn::ConvBnAct phi_;
  nn::ConvBnAct psi_;
  Cbam cbam_;
};

}  // namespace wavedge::wega

#endif  // WAVEDGE_WEGA_HPP_
