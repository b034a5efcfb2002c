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

#ifndef WAVEDGE_CHECKPOINT_HPP_
#define WAVEDGE_CHECKPOINT_HPP_

#include <optional>
#include <string>

#include "wavedge/config.hpp"
#include "wavedge/model.hpp"

namespace wavedge {

// Binary checkpoint container, little-endian:
//
//   magic      8 bytes  "WVEDGCKP"
//   version    u32      kCheckpointVersion
//   config     u32 length + UTF-8 text (to_config_text)
//   has_train  u8       1 if a resumable training state follows
//   [epochs_done i32, best_epoch i32, best_loss f64]   when has_train
//   entries    u32 count, then per entry:
//                u8 kind, u32 name length, name bytes,
//                4 x i64 shape (n, c, h, w), numel x f64 values
//
// Entry kinds: 0 model weight or buffer, 1 SGD velocity, 2 best-epoch weight,
// 3 training history (one row per epoch: epoch, loss, train mDice).
// Entries are written in name order, so identical states give identical bytes.

inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  ModelState weights;
  std::optional<TrainState> train;  // weights are TrainState::last when set
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Builds a model from the stored config and loads its weights.
Model model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace wavedge

#endif  // WAVEDGE_CHECKPOINT_HPP_
