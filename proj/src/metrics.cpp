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

#include "wavedge/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace wavedge::metrics {
namespace {

constexpr Real kLogFloor = 1e-12;

void require_binary(const Tensor& gt) {
  for (Real v : gt.values()) {
    if (v != 0 && v != 1) {
      throw std::invalid_argument("ground truth must be binary, found value " +
                                  std::to_string(v));
    }
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

double ratio_or(double num, double den, double if_empty) {
  return den > 0 ? num / den : if_empty;
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * v);
  return buf;
}

}  // namespace

Real bce_dice_loss(const Tensor& probs, const Tensor& gt) {
  require_same_shape(probs, gt, "bce_dice_loss");
  require_binary(gt);
  const Shape& s = probs.shape();
  const int64_t per = s.c * s.plane();
  if (s.n == 0 || per == 0) throw ShapeError("bce_dice_loss on an empty tensor");
  Real total = 0;
  for (int64_t b = 0; b < s.n; ++b) {
    const Real* p = probs.data() + b * per;
    const Real* g = gt.data() + b * per;
    Real bce = 0, inter = 0, psum = 0, gsum = 0;
    for (int64_t i = 0; i < per; ++i) {
      bce -= g[i] == 1 ? std::log(std::max(p[i], kLogFloor))
                       : std::log(std::max(Real(1) - p[i], kLogFloor));
      inter += p[i] * g[i];
      psum += p[i];
      gsum += g[i];
    }
    total += bce / static_cast<Real>(per) + 1 - 2 * inter / (psum + gsum + 1);
  }
  return total / static_cast<Real>(s.n);
}

Var bce_dice_loss_logits(const Var& logits, const Tensor& gt) {
  require_same_shape(logits.value(), gt, "bce_dice_loss_logits");
  require_binary(gt);
  const Tensor& z = logits.value();
  const Shape& s = z.shape();
  const int64_t per = s.c * s.plane();
  if (s.n == 0 || per == 0) throw ShapeError("bce_dice_loss_logits on an empty tensor");

  Tensor probs = sigmoid(z);
  std::vector<Real> inter(s.n), denom(s.n);
  Real total = 0;
  for (int64_t b = 0; b < s.n; ++b) {
    const Real* zb = z.data() + b * per;
    const Real* pb = probs.data() + b * per;
    const Real* g = gt.data() + b * per;
    Real bce = 0, in = 0, psum = 0, gsum = 0;
    for (int64_t i = 0; i < per; ++i) {
      bce += std::max(zb[i], Real(0)) - zb[i] * g[i] + std::log1p(std::exp(-std::abs(zb[i])));
      in += pb[i] * g[i];
      psum += pb[i];
      gsum += g[i];
    }
    inter[b] = in;
    denom[b] = psum + gsum + 1;
    total += bce / static_cast<Real>(per) + 1 - 2 * in / denom[b];
  }
  total /= static_cast<Real>(s.n);

  return make_op(Tensor::scalar(total), {logits},
                 [gt, probs = std::move(probs), inter = std::move(inter),
                  denom = std::move(denom)](Node& self) {
                   const Shape& s = probs.shape();
                   const int64_t per = s.c * s.plane();
                   const Real scale = self.grad.item() / static_cast<Real>(s.n);
                   Tensor dz(s);
                   for (int64_t b = 0; b < s.n; ++b) {
                     const Real d = denom[b];
                     const Real dice_common = 2 * inter[b] / (d * d);
                     for (int64_t i = b * per; i < (b + 1) * per; ++i) {
                       const Real p = probs[i];
                       const Real dbce = (p - gt[i]) / static_cast<Real>(per);
                       const Real ddice = (-2 * gt[i] / d + dice_common) * p * (1 - p);
                       dz[i] = scale * (dbce + ddice);
                     }
                   }
                   self.parents[0]->accumulate(dz);
                 });
}

Real total_loss(std::span<const Tensor> probs, std::span<const Tensor> gts) {
  if (probs.size() != kSideOutputs || gts.size() != kSideOutputs) {
    throw std::invalid_argument("total_loss needs " + std::to_string(kSideOutputs) +
                                " side outputs and masks, got " + std::to_string(probs.size()) +
                                " and " + std::to_string(gts.size()));
  }
  Real total = 0;
  for (size_t k = 0; k < kSideOutputs; ++k) total += bce_dice_loss(probs[k], gts[k]);
  return total;
}

Var total_loss_logits(std::span<const Var> logits, std::span<const Tensor> gts) {
  if (logits.size() != kSideOutputs || gts.size() != kSideOutputs) {
    throw std::invalid_argument("total_loss needs " + std::to_string(kSideOutputs) +
                                " side outputs and masks, got " + std::to_string(logits.size()) +
                                " and " + std::to_string(gts.size()));
  }
  Var total = bce_dice_loss_logits(logits[0], gts[0]);
  for (size_t k = 1; k < kSideOutputs; ++k) {
    total = add(total, bce_dice_loss_logits(logits[k], gts[k]));
  }
  return total;
}

ConfusionCounts confusion(const Tensor& pred, const Tensor& gt, Real threshold) {
  require_same_shape(pred, gt, "confusion");
  require_binary(gt);
  ConfusionCounts c;
  for (int64_t i = 0; i < pred.numel(); ++i) {
    const bool p = pred[i] >= threshold;
    const bool g = gt[i] == 1;
    if (p && g) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (g) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

ImageMetrics metrics_from_counts(const ConfusionCounts& c) {
  const auto tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const auto fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  ImageMetrics m;
  m.counts = c;
  m.dice = ratio_or(2 * tp, 2 * tp + fp + fn, 1.0);
  m.iou = ratio_or(tp, tp + fp + fn, 1.0);
  m.accuracy = ratio_or(tp + tn, tp + tn + fp + fn, 1.0);
  m.precision = ratio_or(tp, tp + fp, c.fn == 0 ? 1.0 : 0.0);
  m.recall = ratio_or(tp, tp + fn, c.fp == 0 ? 1.0 : 0.0);
  return m;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double acc = 0;
    for (double v : values) acc += v;
    return acc;
  }
  const size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

MetricReport aggregate(const std::string& dataset, std::vector<ImageMetrics> images) {
  MetricReport r;
  r.dataset = dataset;
  r.images = std::move(images);
  if (r.images.empty()) return r;
  const auto n = static_cast<double>(r.images.size());
  auto mean = [&](double ImageMetrics::*field) {
    std::vector<double> v;
    v.reserve(r.images.size());
    for (const ImageMetrics& m : r.images) v.push_back(m.*field);
    return pairwise_sum(v) / n;
  };
  r.mdice = mean(&ImageMetrics::dice);
  r.miou = mean(&ImageMetrics::iou);
  r.accuracy = mean(&ImageMetrics::accuracy);
  r.precision = mean(&ImageMetrics::precision);
  r.recall = mean(&ImageMetrics::recall);
  r.mae = mean(&ImageMetrics::mae);
  return r;
}

MetricReport evaluate(const std::string& dataset, const std::vector<EvalPair>& pairs,
                      Real threshold) {
  std::vector<ImageMetrics> images;
  images.reserve(pairs.size());
  for (const EvalPair& p : pairs) {
    ImageMetrics m = metrics_from_counts(confusion(p.prediction, p.gt, threshold));
    m.name = p.name;
    double err = 0;
    for (int64_t i = 0; i < p.prediction.numel(); ++i) {
      err += std::abs(static_cast<double>(p.prediction[i]) - static_cast<double>(p.gt[i]));
    }
    m.mae = p.prediction.numel() > 0 ? err / static_cast<double>(p.prediction.numel()) : 0.0;
    images.push_back(std::move(m));
  }
  return aggregate(dataset, std::move(images));
}

std::string report_csv(const MetricReport& r) {
  std::ostringstream os;
  os << kCsvHeader << "\n"
     << r.dataset << "," << r.n_images() << "," << percent(r.miou) << "," << percent(r.mdice)
     << "," << percent(r.mae) << "," << percent(r.accuracy) << "," << percent(r.precision) << ","
     << percent(r.recall) << "\n";
  return os.str();
}

std::string report_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["scale"] = "percent";
  j["dataset"] = r.dataset;
  j["n_images"] = r.n_images();
  j["mIoU"] = 100.0 * r.miou;
  j["mDice"] = 100.0 * r.mdice;
  j["MAE"] = 100.0 * r.mae;
  j["accuracy"] = 100.0 * r.accuracy;
  j["precision"] = 100.0 * r.precision;
  j["recall"] = 100.0 * r.recall;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const ImageMetrics& m : r.images) {
    nlohmann::ordered_json row;
    row["name"] = m.name;
    row["tp"] = m.counts.tp;
    row["tn"] = m.counts.tn;
    row["fp"] = m.counts.fp;
    row["fn"] = m.counts.fn;
    row["dice"] = 100.0 * m.dice;
    row["iou"] = 100.0 * m.iou;
    row["accuracy"] = 100.0 * m.accuracy;
    row["precision"] = 100.0 * m.precision;
    row["recall"] = 100.0 * m.recall;
    row["mae"] = 100.0 * m.mae;
    rows.push_back(std::move(row));
  }
  j["images"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace wavedge::metrics
