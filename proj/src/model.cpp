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

#include "wavedge/model.hpp"

#include <algorithm>
#include <set>

#include "wavedge/rng.hpp"

namespace wavedge {
namespace {

std::string stage_prefix(const char* part, int stage) {
  return std::string(part) + ".stage" + std::to_string(stage);
}

}  // namespace

void ModelConfig::validate() const {
  if (input_size < 32 || input_size % 32 != 0) {
    throw ShapeError("input_size must be a positive multiple of 32, got " +
                     std::to_string(input_size));
  }
  if (decode_stages != kStages) {
    throw ShapeError("decode_stages must be " + std::to_string(kStages) + ", got " +
                     std::to_string(decode_stages));
  }
  for (size_t i = 0; i < encoder_channels.size(); ++i) {
    if (encoder_channels[i] < 1) {
      throw ShapeError("encoder_channels[" + std::to_string(i) + "] must be positive");
    }
  }
  std::set<int> seen;
  for (int s : wega_stages) {
    if (s < 1 || s >= kStages) {
      throw ShapeError("wega_stages entry " + std::to_string(s) + " outside 1.." +
                       std::to_string(kStages - 1) + " (the coarsest stage has no W-EGA)");
    }
    if (!seen.insert(s).second) {
      throw ShapeError("wega_stages lists stage " + std::to_string(s) + " twice");
    }
    const int64_t c = encoder_channels[s - 1];
    if (cbam_reduction < 1 || c % cbam_reduction != 0) {
      throw ShapeError("cbam_reduction " + std::to_string(cbam_reduction) +
                       " does not divide stage " + std::to_string(s) + " width " +
                       std::to_string(c));
    }
  }
}

bool ModelConfig::has_wega(int stage) const {
  return std::find(wega_stages.begin(), wega_stages.end(), stage) != wega_stages.end();
}

Model::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  const auto& ch = config_.encoder_channels;
  int64_t in = 3;
  for (int i = 0; i < kStages; ++i) {
    encoder_[i].down = nn::ConvBnAct(in, ch[i], 3, 2, nn::Activation::kRelu, rng);
    encoder_[i].conv = nn::ConvBnAct(ch[i], ch[i], 3, 1, nn::Activation::kRelu, rng);
    in = ch[i];
  }
  for (int i = kStages - 1; i >= 0; --i) {
    const int stage = i + 1;
    DecoderStage& d = decoder_[i];
    const int64_t in_channels = stage == kStages ? ch[i] : ch[i + 1] + ch[i];
    d.conv1 = nn::ConvBnAct(in_channels, ch[i], 3, 1, nn::Activation::kRelu, rng);
    d.conv2 = nn::ConvBnAct(ch[i], ch[i], 3, 1, nn::Activation::kRelu, rng);
    if (config_.has_wega(stage)) {
      d.wega.emplace(ch[i], config_.cbam_reduction, rng, config_.wavelet_edges);
    }
    d.head = nn::ConvBnAct(ch[i], ch[i], 3, 1, nn::Activation::kRelu, rng);
    d.classifier = nn::Conv2d(ch[i], 1, 1, 1, 0, true, rng);
  }
}

SideOutputs Model::forward(const Var& image, BnMode mode) { return forward(image, mode, nullptr); }

SideOutputs Model::forward(const Var& image, BnMode mode,
                           std::map<int, wega::WegaState>* states) {
  const Shape& s = image.shape();
  if (s.c != 3) throw ShapeError("model input needs 3 channels, got " + std::to_string(s.c));
  if (s.h != config_.input_size || s.w != config_.input_size) {
    throw ShapeError("model input must be " + std::to_string(config_.input_size) + "x" +
                     std::to_string(config_.input_size) + ", got " + std::to_string(s.h) + "x" +
                     std::to_string(s.w));
  }
  Var x = image;
  for (int i = 0; i < kStages; ++i) {
    x = encoder_[i].conv.forward(encoder_[i].down.forward(x, mode), mode);
    encoder_features_[i] = x;
  }

  SideOutputs out;
  Var d;
  for (int i = kStages - 1; i >= 0; --i) {
    const int stage = i + 1;
    DecoderStage& st = decoder_[i];
    Var f;
    if (stage == kStages) {
      f = st.conv2.forward(st.conv1.forward(encoder_features_[i], mode), mode);
    } else {
      Var merged = concat_channels({bilinear_upsample(d, 2), encoder_features_[i]});
      f = st.conv2.forward(st.conv1.forward(merged, mode), mode);
    }
    if (st.wega) {
      Var next_logits = bilinear_upsample(out.logits[i + 1], 2);
      wega::WegaState ws = st.wega->forward(f, next_logits, mode);
      d = ws.output;
      if (states) (*states)[stage] = std::move(ws);
    } else {
      d = f;
    }
    out.logits[i] = st.classifier.forward(st.head.forward(d, mode));
    out.upsampled[i] = bilinear_upsample(out.logits[i], int64_t{1} << stage);
  }
  return out;
}

Tensor Model::predict(const Tensor& image) {
  SideOutputs out = forward(Var(image), BnMode::kEval);
  return sigmoid(out.upsampled[0].value());
}

ParameterList Model::parameters() const {
  ParameterList params;
  for (int i = 0; i < kStages; ++i) {
    encoder_[i].down.collect(stage_prefix("encoder", i + 1) + ".down", params);
    encoder_[i].conv.collect(stage_prefix("encoder", i + 1) + ".conv", params);
  }
  for (int i = kStages - 1; i >= 0; --i) {
    const DecoderStage& d = decoder_[i];
    const std::string p = stage_prefix("decoder", i + 1);
    d.conv1.collect(p + ".conv1", params);
    d.conv2.collect(p + ".conv2", params);
    if (d.wega) d.wega->collect(p + ".wega", params);
    d.head.collect(p + ".side.block", params);
    d.classifier.collect(p + ".side.classifier", params);
  }
  return params;
}

std::vector<nn::NamedBuffer> Model::buffers() {
  std::vector<nn::NamedBuffer> out;
  for (int i = 0; i < kStages; ++i) {
    encoder_[i].down.buffers(stage_prefix("encoder", i + 1) + ".down", out);
    encoder_[i].conv.buffers(stage_prefix("encoder", i + 1) + ".conv", out);
  }
  for (int i = kStages - 1; i >= 0; --i) {
    DecoderStage& d = decoder_[i];
    const std::string p = stage_prefix("decoder", i + 1);
    d.conv1.buffers(p + ".conv1", out);
    d.conv2.buffers(p + ".conv2", out);
    if (d.wega) d.wega->buffers(p + ".wega", out);
    d.head.buffers(p + ".side.block", out);
  }
  return out;
}

ModelState Model::state() {
  ModelState s;
  for (const Parameter& p : parameters()) s[p.name] = p.var.value();
  for (const nn::NamedBuffer& b : buffers()) s[b.name] = *b.tensor;
  return s;
}

void Model::load_state(const ModelState& state) {
  auto fetch = [&](const std::string& name, const Shape& shape) -> const Tensor& {
    auto it = state.find(name);
    if (it == state.end()) throw std::invalid_argument("state is missing '" + name + "'");
    if (it->second.shape() != shape) {
      throw ShapeError("state entry '" + name + "' has shape " + it->second.shape().str() +
                       ", model expects " + shape.str());
    }
    return it->second;
  };
  for (Parameter& p : parameters()) p.var.mutable_value() = fetch(p.name, p.var.shape());
  for (nn::NamedBuffer& b : buffers()) *b.tensor = fetch(b.name, b.tensor->shape());
}

}  // namespace wavedge
