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

#ifndef WAVEDGE_CONFIG_HPP_
#define WAVEDGE_CONFIG_HPP_

#include <map>
#include <string>

#include "wavedge/model.hpp"

namespace wavedge {

/// Model and training settings read from a flat key=value document.
///
///   # comment
///   input_size = 64
///   encoder_channels = 8,16,32,64,128
///   wega_stages = 4,3,2,1        (empty value: no W-EGA)
///   wavelet_edges = true
///   cbam_reduction = 2
///   seed = 0
///   epochs = 40
///   lr = 0.05                    (required)
///   momentum = 0.867472
///   weight_decay = 3.5454e-6
///   batch_size = 16
///   augment_flip = true
///   augment_rotate = true
///
/// Unknown keys are rejected. lr has no default.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
};

/// Throws std::invalid_argument with the line number on malformed input.
/// require_lr = false lets a caller supply lr separately (e.g. a flag).
RunConfig parse_config(const std::string& text, bool require_lr = true);
RunConfig load_config(const std::string& path, bool require_lr = true);

/// Canonical text form; parse_config(to_config_text(c)) == c.
std::string to_config_text(const RunConfig& config);

}  // namespace wavedge

#endif  // WAVEDGE_CONFIG_HPP_
