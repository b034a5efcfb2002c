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

#include "wavedge/gradcheck_suite.hpp"

#include <stdexcept>

#include "wavedge/metrics.hpp"
#include "wavedge/model.hpp"
#include "wavedge/rng.hpp"
#include "wavedge/wavelet.hpp"
#include "wavedge/wega.hpp"

namespace wavedge {
namespace {

Tensor uniform_tensor(const Shape& shape, Rng& rng, double lo, double hi) {
  Tensor t(shape);
  for (Real& v : t.values()) v = static_cast<Real>(rng.uniform(lo, hi));
  return t;
}

Tensor binary_tensor(const Shape& shape, Rng& rng) {
  Tensor t(shape);
  for (Real& v : t.values()) v = rng.uniform() < 0.4 ? 1 : 0;
  return t;
}

Var weighted_sum(const Var& x, const Tensor& w) { return sum(mul(x, Var(w))); }

SuiteResult check_wavelet(const GradCheckOptions& options) {
  Rng rng(derive_seed(options.seed, 1));
  Var input = make_parameter(uniform_tensor(Shape{2, 3, 8, 8}, rng, -1, 1));
  const Tensor w_head = uniform_tensor(Shape{2, 9, 8, 8}, rng, -1, 1);
  const Tensor w_mask = uniform_tensor(Shape{2, 1, 8, 8}, rng, -1, 1);
  const ParameterList params{{"input", input}};
  auto loss = [&] {
    return add(weighted_sum(wavelet::edge_head(input), w_head),
               weighted_sum(wavelet::edge_mask(channel_mean(input)), w_mask));
  };
  return {"wavelet", grad_check(loss, params, options), 0};
}

SuiteResult check_wega(const GradCheckOptions& options) {
  Rng rng(derive_seed(options.seed, 2));
  wega::WegaBlock block(8, 2, rng);
  Var features = make_parameter(uniform_tensor(Shape{2, 8, 8, 8}, rng, -1, 1));
  Var logits = make_parameter(uniform_tensor(Shape{2, 1, 8, 8}, rng, -3, 3));
  const Tensor w = uniform_tensor(Shape{2, 8, 8, 8}, rng, -1, 1);
  ParameterList params{{"features", features}, {"next_logits", logits}};
  block.collect("wega", params);
  auto loss = [&] { return weighted_sum(block.forward(features, logits, BnMode::kTrain).output, w); };
  return {"wega", grad_check(loss, params, options), static_cast<int64_t>(params.size()) - 2};
}

SuiteResult check_cbam(const GradCheckOptions& options) {
  Rng rng(derive_seed(options.seed, 3));
  wega::Cbam cbam(8, 2, rng);
  Var x = make_parameter(uniform_tensor(Shape{1, 8, 8, 8}, rng, -1, 1));
  const Tensor w = uniform_tensor(Shape{1, 8, 8, 8}, rng, -1, 1);
  ParameterList params{{"input", x}};
  cbam.collect("cbam", params);
  auto loss = [&] { return weighted_sum(cbam.forward(x), w); };
  return {"cbam", grad_check(loss, params, options), static_cast<int64_t>(params.size()) - 1};
}

SuiteResult check_loss(const GradCheckOptions& options) {
  Rng rng(derive_seed(options.seed, 4));
  Var logits = make_parameter(uniform_tensor(Shape{2, 1, 8, 8}, rng, -3, 3));
  const Tensor gt = binary_tensor(Shape{2, 1, 8, 8}, rng);
  const ParameterList params{{"logits", logits}};
  auto loss = [&] { return metrics::bce_dice_loss_logits(logits, gt); };
  return {"loss", grad_check(loss, params, options), 0};
}

SuiteResult check_model(const GradCheckOptions& options) {
  ModelConfig config;
  config.input_size = 32;
  config.encoder_channels = {4, 4, 8, 8, 8};
  config.seed = derive_seed(options.seed, 5);
  Model model(config);
  Rng rng(derive_seed(options.seed, 6));
  const Var image(uniform_tensor(Shape{2, 3, 32, 32}, rng, 0, 1));
  const Tensor gt = binary_tensor(Shape{2, 1, 32, 32}, rng);
  const std::array<Tensor, kStages> gts{gt, gt, gt, gt, gt};
  const ParameterList params = model.parameters();
  auto loss = [&] {
    const SideOutputs out = model.forward(image, BnMode::kTrain);
    return metrics::total_loss_logits(out.upsampled, gts);
  };
  return {"model", grad_check(loss, params, options), static_cast<int64_t>(params.size())};
}

}  // namespace

const std::vector<std::string>& gradcheck_modules() {
  static const std::vector<std::string> names{"wavelet", "wega", "cbam", "loss", "model"};
  return names;
}

SuiteResult run_gradcheck_module(const std::string& module, const GradCheckOptions& options) {
  if (module == "wavelet") return check_wavelet(options);
  if (module == "wega") return check_wega(options);
  if (module == "cbam") return check_cbam(options);
  if (module == "loss") return check_loss(options);
  if (module == "model") return check_model(options);
  throw std::invalid_argument("unknown gradcheck module '" + module + "'");
}

}  // namespace wavedge
