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

#include "wavedge/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace wavedge {

GradCheckReport grad_check(const std::function<Var()>& loss, const ParameterList& params,
                           const GradCheckOptions& options) {
  zero_grads(params);
  begin_branch_trace();
  const Var root = loss();
  const uint64_t base_branches = end_branch_trace();
  const std::map<std::string, Tensor> analytic = backward(root, params);

  std::mt19937_64 rng(options.seed);
  GradCheckReport report;
  report.max_kink_fraction = options.max_kink_fraction;
  for (const Parameter& p : params) {
    Var var = p.var;
    const int64_t numel = var.value().numel();
    std::vector<int64_t> coords(static_cast<size_t>(numel));
    std::iota(coords.begin(), coords.end(), 0);
    if (numel > options.coords_per_param) {
      // Partial Fisher-Yates: the first coords_per_param entries are a uniform sample.
      for (int64_t i = 0; i < options.coords_per_param; ++i) {
        const auto j = i + static_cast<int64_t>(rng() % static_cast<uint64_t>(numel - i));
        std::swap(coords[i], coords[j]);
      }
      coords.resize(static_cast<size_t>(options.coords_per_param));
      std::sort(coords.begin(), coords.end());
    }
    const Tensor& grad = analytic.at(p.name);
    for (int64_t idx : coords) {
      Tensor& value = var.mutable_value();
      const Real original = value[idx];
      value[idx] = original + options.step;
      begin_branch_trace();
      const Real plus = loss().value().item();
      const uint64_t plus_branches = end_branch_trace();
      value[idx] = original - options.step;
      begin_branch_trace();
      const Real minus = loss().value().item();
      const uint64_t minus_branches = end_branch_trace();
      value[idx] = original;
      ++report.coords_checked;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        report.non_finite.push_back(p.name + "[" + std::to_string(idx) + "]");
        continue;
      }
      GradCheckEntry e{p.name, idx, grad[idx], (plus - minus) / (2 * options.step), 0};
      e.rel_err = std::abs(e.analytic - e.numeric) /
                  std::max({Real(1), std::abs(e.analytic), std::abs(e.numeric)});
      e.kink = plus_branches != base_branches || minus_branches != base_branches;
      if (e.kink) {
        ++report.kinks;
        report.max_kink_rel_err = std::max(report.max_kink_rel_err, e.rel_err);
        report.entries.push_back(std::move(e));
        continue;
      }
      if (e.rel_err > report.max_rel_err || report.worst_index < 0) {
        report.max_rel_err = std::max(report.max_rel_err, e.rel_err);
        report.worst_param = p.name;
        report.worst_index = idx;
      }
      report.entries.push_back(std::move(e));
    }
  }
  zero_grads(params);
  return report;
}

}  // namespace wavedge
