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

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "wavedge/metrics.hpp"
#include "wavedge/model.hpp"
#include "wavedge/rng.hpp"

namespace wavedge {
namespace {

Tensor flip_horizontal(const Tensor& x) {
  const Shape& s = x.shape();
  Tensor out(s);
  for (int64_t c = 0; c < s.c; ++c) {
    for (int64_t h = 0; h < s.h; ++h) {
      for (int64_t w = 0; w < s.w; ++w) out.at(0, c, h, w) = x.at(0, c, h, s.w - 1 - w);
    }
  }
  return out;
}

Tensor flip_vertical(const Tensor& x) {
  const Shape& s = x.shape();
  Tensor out(s);
  for (int64_t c = 0; c < s.c; ++c) {
    for (int64_t h = 0; h < s.h; ++h) {
      for (int64_t w = 0; w < s.w; ++w) out.at(0, c, h, w) = x.at(0, c, s.h - 1 - h, w);
    }
  }
  return out;
}

// One quarter turn counter-clockwise; square planes only.
Tensor rotate90(const Tensor& x) {
  const Shape& s = x.shape();
  Tensor out(Shape{s.n, s.c, s.w, s.h});
  for (int64_t c = 0; c < s.c; ++c) {
    for (int64_t h = 0; h < s.w; ++h) {
      for (int64_t w = 0; w < s.h; ++w) out.at(0, c, h, w) = x.at(0, c, w, s.w - 1 - h);
    }
  }
  return out;
}

struct Augmentation {
  bool flip_h = false, flip_v = false;
  int rotation = 0;
};

Real per_image_dice(const Tensor& probs, const Tensor& gt) {
  Real total = 0;
  for (int64_t b = 0; b < probs.shape().n; ++b) {
    total += static_cast<Real>(
        metrics::metrics_from_counts(metrics::confusion(slice_batch(probs, b), slice_batch(gt, b)))
            .dice);
  }
  return total;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (lr < 0) throw std::invalid_argument("lr must be >= 0");
  if (momentum < 0 || momentum >= 1) throw std::invalid_argument("momentum must be in [0, 1)");
  if (weight_decay < 0) throw std::invalid_argument("weight_decay must be >= 0");
}

Tensor augment(const Tensor& x, bool flip_h, bool flip_v, int rotation) {
  if (x.shape().n != 1) throw ShapeError("augment works on single samples");
  Tensor out = x;
  if (flip_h) out = flip_horizontal(out);
  if (flip_v) out = flip_vertical(out);
  for (int r = 0; r < ((rotation % 4) + 4) % 4; ++r) out = rotate90(out);
  return out;
}

TrainingLog train_toy(Model& model, const std::vector<Sample>& data, const TrainConfig& config,
                      const EpochCallback& on_epoch) {
  TrainState state;
  return train_toy(model, data, config, state, on_epoch);
}

TrainingLog train_toy(Model& model, const std::vector<Sample>& data, const TrainConfig& config,
                      TrainState& state, const EpochCallback& on_epoch) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("training dataset is empty");
  for (const Sample& s : data) {
    const Shape& is = s.image.shape();
    if (is.n != 1 || is.c != 3 || is.h != model.config().input_size ||
        is.w != model.config().input_size) {
      throw ShapeError("sample '" + s.name + "' image " + is.str() + " does not match input size " +
                       std::to_string(model.config().input_size));
    }
    if (s.mask.shape() != Shape({1, 1, is.h, is.w})) {
      throw ShapeError("sample '" + s.name + "' mask " + s.mask.shape().str() +
                       " does not match its image");
    }
  }

  ParameterList params = model.parameters();
  const SgdOptions sgd{config.lr, config.momentum, config.weight_decay};
  const auto n = static_cast<int64_t>(data.size());

  if (state.best.empty()) {
    state.best = model.state();
    state.best_epoch = 0;
    state.best_loss = std::numeric_limits<Real>::infinity();
  }

  for (int epoch = state.epochs_done + 1; epoch <= config.epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, static_cast<uint64_t>(epoch)));
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int64_t i = n - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<int64_t>(rng.below(static_cast<uint64_t>(i + 1)))]);
    }

    // A trailing batch of one sample is folded into the previous batch so
    // batch statistics always see more than one image.
    std::vector<std::pair<int64_t, int64_t>> batches;
    for (int64_t start = 0; start < n; start += config.batch_size) {
      batches.emplace_back(start, std::min(n, start + config.batch_size));
    }
    if (batches.size() > 1 && batches.back().second - batches.back().first == 1) {
      batches[batches.size() - 2].second = n;
      batches.pop_back();
    }

    Real loss_sum = 0, dice_sum = 0;
    for (const auto& [start, end] : batches) {
      std::vector<Tensor> images, masks;
      for (int64_t k = start; k < end; ++k) {
        const Sample& s = data[order[k]];
        Augmentation a;
        if (config.augment_flip) {
          a.flip_h = rng.below(2) == 1;
          a.flip_v = rng.below(2) == 1;
        }
        if (config.augment_rotate) a.rotation = static_cast<int>(rng.below(4));
        images.push_back(augment(s.image, a.flip_h, a.flip_v, a.rotation));
        masks.push_back(augment(s.mask, a.flip_h, a.flip_v, a.rotation));
      }
      const Tensor batch = concat_batch(images);
      const Tensor gt = concat_batch(masks);

      SideOutputs out = model.forward(Var(batch), BnMode::kTrain);
      const std::vector<Tensor> gts(metrics::kSideOutputs, gt);
      Var loss = metrics::total_loss_logits(out.upsampled, gts);
      zero_grads(params);
      const auto grads = backward(loss, params);
      sgd_step(params, grads, sgd, state.velocity);

      const auto count = static_cast<Real>(end - start);
      loss_sum += loss.value().item() * count;
      dice_sum += per_image_dice(sigmoid(out.upsampled[0].value()), gt);
    }
    zero_grads(params);

    EpochRecord rec{epoch, loss_sum / static_cast<Real>(n), dice_sum / static_cast<Real>(n)};
    state.history.push_back(rec);
    state.epochs_done = epoch;
    if (rec.loss < state.best_loss) {
      state.best_loss = rec.loss;
      state.best_epoch = epoch;
      state.best = model.state();
    }
    if (on_epoch) on_epoch(rec);
  }

  state.last = model.state();
  model.load_state(state.best);

  TrainingLog log;
  log.epochs = state.history;
  log.selected_epoch = state.best_epoch;
  log.selected_loss = state.best_epoch == 0 ? Real(0) : state.best_loss;
  return log;
}

Real mean_dice(Model& model, const std::vector<Sample>& data, int batch_size) {
  if (data.empty()) return 0;
  Real total = 0;
  const auto n = static_cast<int64_t>(data.size());
  for (int64_t start = 0; start < n; start += batch_size) {
    const int64_t end = std::min(n, start + static_cast<int64_t>(batch_size));
    std::vector<Tensor> images, masks;
    for (int64_t k = start; k < end; ++k) {
      images.push_back(data[k].image);
      masks.push_back(data[k].mask);
    }
    total += per_image_dice(model.predict(concat_batch(images)), concat_batch(masks));
  }
  return total / static_cast<Real>(n);
}

}  // namespace wavedge
