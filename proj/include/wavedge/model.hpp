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

#ifndef WAVEDGE_MODEL_HPP_
#define WAVEDGE_MODEL_HPP_

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wavedge/autodiff.hpp"
#include "wavedge/layers.hpp"
#include "wavedge/wega.hpp"

namespace wavedge {

inline constexpr int kStages = 5;

struct ModelConfig {
  int64_t input_size = 64;  // H = W, multiple of 32
  std::array<int64_t, kStages> encoder_channels{8, 16, 32, 64, 128};
  int decode_stages = kStages;
  std::vector<int> wega_stages{4, 3, 2, 1};  // never the coarsest stage
  bool wavelet_edges = true;  // false zeroes the two wavelet masks inside W-EGA
  int64_t cbam_reduction = 2;
  uint64_t seed = 0;

  /// Throws ShapeError naming the offending field.
  void validate() const;
  bool has_wega(int stage) const;
};

/// Per-stage side logits. Index k holds stage k + 1 (P_1 at index 0).
struct SideOutputs {
  std::array<Var, kStages> logits;     // input_size / 2^(k+1) square
  std::array<Var, kStages> upsampled;  // input_size square
};

/// Parameter and buffer values by name.
using ModelState = std::map<std::string, Tensor>;

/// Five-stage strided conv encoder and a U-shaped decoder with skip
/// concatenation, W-EGA on the configured stages, and one side classifier
/// per stage.
///
///   encoder i:  conv3x3/2-BN-ReLU, conv3x3-BN-ReLU         (stride 2^i)
///   decoder 5:  conv3x3-BN-ReLU x2 on e5
///   decoder i:  up2(d_{i+1}) ++ e_i -> conv3x3-BN-ReLU x2 -> W-EGA(F_i, up2(P_{i+1}))
///   side i:     conv3x3-BN-ReLU -> conv1x1 -> P_i
class Model {
 public:
  explicit Model(const ModelConfig& config);
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  SideOutputs forward(const Var& image, BnMode mode);
  /// Same, also returning every W-EGA state (keyed by stage).
  SideOutputs forward(const Var& image, BnMode mode, std::map<int, wega::WegaState>* states);

  /// Eval-mode sigmoid of the finest side output, (B, 1, H, W) in (0, 1).
  Tensor predict(const Tensor& image);

  /// Encoder features e_1..e_5 of the last forward pass.
  const std::array<Var, kStages>& encoder_features() const { return encoder_features_; }

  ParameterList parameters() const;
  std::vector<nn::NamedBuffer> buffers();
  ModelState state();
  /// Every parameter and buffer must be present with a matching shape.
  void load_state(const ModelState& state);

  const ModelConfig& config() const { return config_; }

 private:
  struct EncoderStage {
    nn::ConvBnAct down, conv;
  };
  struct DecoderStage {
    nn::ConvBnAct conv1, conv2;
    std::optional<wega::WegaBlock> wega;
    nn::ConvBnAct head;
    nn::Conv2d classifier;
  };

  ModelConfig config_;
  std::array<EncoderStage, kStages> encoder_;
  std::array<DecoderStage, kStages> decoder_;
  std::array<Var, kStages> encoder_features_;
};

// --- data and training --------------------------------------------------------

struct Sample {
  std::string name;
  Tensor image;  // (1, 3, H, W) in [0, 1]
  Tensor mask;   // (1, 1, H, W) in {0, 1}
};

struct TrainConfig {
  int epochs = 40;
  Real lr = 0.05;
  Real momentum = 0.867472;
  Real weight_decay = 3.5454e-6;
  int batch_size = 16;
  bool augment_flip = true;
  bool augment_rotate = true;
  uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  Real loss = 0;
  Real train_mdice = 0;
};

/// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  int epochs_done = 0;
  std::map<std::string, Tensor> velocity;
  std::vector<EpochRecord> history;
  int best_epoch = 0;  // 0: initialization
  Real best_loss = 0;
  ModelState best;     // empty until the first epoch finishes
  ModelState last;     // parameters after the most recent epoch
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  int selected_epoch = 0;
  Real selected_loss = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// SGD with momentum on the deep-supervised loss. Runs epochs
/// state.epochs_done + 1 .. config.epochs, then loads the lowest-loss epoch
/// into the model. Batches and augmentation depend only on (seed, epoch).
TrainingLog train_toy(Model& model, const std::vector<Sample>& data, const TrainConfig& config,
                      TrainState& state, const EpochCallback& on_epoch = {});
TrainingLog train_toy(Model& model, const std::vector<Sample>& data, const TrainConfig& config,
                      const EpochCallback& on_epoch = {});

/// Flip / rotate one (1, C, H, W) tensor. rotation counts quarter turns.
Tensor augment(const Tensor& x, bool flip_h, bool flip_v, int rotation);

/// Mean per-image Dice of eval-mode predictions at threshold 0.5.
Real mean_dice(Model& model, const std::vector<Sample>& data, int batch_size = 16);

}  // namespace wavedge

#endif  // WAVEDGE_MODEL_HPP_
