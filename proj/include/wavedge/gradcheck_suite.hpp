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

#ifndef WAVEDGE_GRADCHECK_SUITE_HPP_
#define WAVEDGE_GRADCHECK_SUITE_HPP_

#include <string>
#include <vector>

#include "wavedge/gradcheck.hpp"

namespace wavedge {

// Seeded finite-difference checks of the building blocks, each reduced to a
// scalar through a random weighting so every output coordinate matters.
//
//   wavelet  edge head and edge mask of a (2, 3, 8, 8) input
//   wega     one W-EGA block on (2, 8, 8, 8) features, train-mode batch norm
//   cbam     CBAM on (1, 8, 8, 8), reduction 2
//   loss     BCE + Dice on (2, 1, 8, 8) logits
//   model    deep-supervised total loss of a narrow 32x32 model, batch 2

struct SuiteResult {
  std::string module;
  GradCheckReport report;
  int64_t parameters = 0;
};

const std::vector<std::string>& gradcheck_modules();

/// Throws std::invalid_argument for an unknown module name.
SuiteResult run_gradcheck_module(const std::string& module, const GradCheckOptions& options);

}  // namespace wavedge

#endif  // WAVEDGE_GRADCHECK_SUITE_HPP_
