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

#ifndef WAVEDGE_GRADCHECK_HPP_
#define WAVEDGE_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wavedge/autodiff.hpp"

namespace wavedge {

struct GradCheckOptions {
  Real step = 1e-5;
  Real tolerance = 1e-4;
  int64_t coords_per_param = 32;  // all coordinates when the parameter is smaller
  uint64_t seed = 0;
  /// Coordinates whose +-step evaluations take a different relu / abs / max
  /// branch than the base point are reported as kinks and left out of
  /// max_rel_err. The check fails if more than this fraction of them occur.
  double max_kink_fraction = 0.01;
};

struct GradCheckEntry {
  std::string param;
  int64_t index = 0;
  Real analytic = 0;
  Real numeric = 0;
  Real rel_err = 0;
  bool kink = false;
};

struct GradCheckReport {
  Real max_rel_err = 0;
  std::string worst_param;
  int64_t worst_index = -1;
  int64_t coords_checked = 0;
  /// Perturbed evaluations that produced NaN/Inf, as "name[index]".
  std::vector<std::string> non_finite;
  int64_t kinks = 0;
  Real max_kink_rel_err = 0;  // over kink coordinates only, informational
  double max_kink_fraction = 0.01;
  std::vector<GradCheckEntry> entries;

  bool passed(Real tolerance) const {
    return non_finite.empty() && max_rel_err <= tolerance &&
           static_cast<double>(kinks) <= max_kink_fraction * static_cast<double>(coords_checked);
  }
};

/// Compares backward() against central differences
/// (f(theta + h e) - f(theta - h e)) / 2h on a seeded coordinate sample.
/// Relative error uses a max(1, |analytic|, |numeric|) denominator.
/// `loss` must rebuild its graph from the current parameter values on every
/// call and be deterministic.
GradCheckReport grad_check(const std::function<Var()>& loss, const ParameterList& params,
                           const GradCheckOptions& options = {});

}  // namespace wavedge

#endif  // WAVEDGE_GRADCHECK_HPP_
