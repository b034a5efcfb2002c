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

#ifndef WAVEDGE_SYNTH_HPP_
#define WAVEDGE_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "wavedge/image_io.hpp"
#include "wavedge/model.hpp"

namespace wavedge::synth {

// Procedural weak-boundary segmentation data: one soft-edged ellipse or lobed
// blob per image, slightly brighter or darker than a textured background.
//
// Directory layout written by write_dataset and read by load_dataset:
//   images/<name>.png   RGB
//   masks/<name>.png    gray, 0 / 255
//   manifest.csv        name,image,mask (paths relative to the directory)

struct SynthPair {
  std::string name;
  io::Image image;
  io::Image mask;
};

/// Sample `index` of the stream for `seed`. Depends only on (size, seed, index).
SynthPair generate(int64_t size, uint64_t seed, int64_t index);

std::vector<SynthPair> generate_set(int64_t n, int64_t size, uint64_t seed);

/// Throws std::invalid_argument if dir exists and is not empty, unless force.
void write_dataset(const std::string& dir, const std::vector<SynthPair>& pairs, bool force);

/// Same tensors load_dataset would produce for the written files.
std::vector<Sample> to_samples(const std::vector<SynthPair>& pairs);

/// Reads manifest.csv when present, otherwise pairs images/ and masks/ by file
/// stem. expected_size > 0 rejects other resolutions.
std::vector<Sample> load_dataset(const std::string& dir, int64_t expected_size = 0);

}  // namespace wavedge::synth

#endif  // WAVEDGE_SYNTH_HPP_
