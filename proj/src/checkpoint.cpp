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

#include "wavedge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wavedge {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

constexpr char kMagic[8] = {'W', 'V', 'E', 'D', 'G', 'C', 'K', 'P'};

enum class Kind : uint8_t { kWeight = 0, kVelocity = 1, kBest = 2, kHistory = 3 };

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void bytes(const std::string& s) {
    pod(static_cast<uint32_t>(s.size()));
    out_ += s;
  }
  void tensor(Kind kind, const std::string& name, const Tensor& t) {
    pod(static_cast<uint8_t>(kind));
    bytes(name);
    const Shape& s = t.shape();
    for (int64_t d : {s.n, s.c, s.h, s.w}) pod(d);
    for (Real v : t.values()) pod(static_cast<double>(v));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes() {
    const auto n = pod<uint32_t>();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Tensor tensor() {
    Shape s{pod<int64_t>(), pod<int64_t>(), pod<int64_t>(), pod<int64_t>()};
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) throw std::runtime_error("negative dimension");
    need(static_cast<size_t>(s.numel()) * sizeof(double));
    std::vector<Real> values(static_cast<size_t>(s.numel()));
    for (auto& v : values) v = static_cast<Real>(pod<double>());
    return Tensor(s, std::move(values));
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(size_t n) const {
    if (in_.size() - pos_ < n) throw std::runtime_error("checkpoint truncated");
  }
  const std::string& in_;
  size_t pos_ = 0;
};

Tensor history_tensor(const std::vector<EpochRecord>& history) {
  Tensor t(Shape{1, 1, static_cast<int64_t>(history.size()), 3});
  for (size_t i = 0; i < history.size(); ++i) {
    t.at(0, 0, static_cast<int64_t>(i), 0) = static_cast<Real>(history[i].epoch);
    t.at(0, 0, static_cast<int64_t>(i), 1) = history[i].loss;
    t.at(0, 0, static_cast<int64_t>(i), 2) = history[i].train_mdice;
  }
  return t;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  for (char c : kMagic) w.pod(c);
  w.pod(kCheckpointVersion);
  w.bytes(to_config_text(ckpt.config));
  w.pod(static_cast<uint8_t>(ckpt.train ? 1 : 0));
  uint32_t count = static_cast<uint32_t>(ckpt.weights.size());
  if (ckpt.train) {
    w.pod(static_cast<int32_t>(ckpt.train->epochs_done));
    w.pod(static_cast<int32_t>(ckpt.train->best_epoch));
    w.pod(static_cast<double>(ckpt.train->best_loss));
    count += static_cast<uint32_t>(ckpt.train->velocity.size() + ckpt.train->best.size() + 1);
  }
  w.pod(count);
  for (const auto& [name, t] : ckpt.weights) w.tensor(Kind::kWeight, name, t);
  if (ckpt.train) {
    for (const auto& [name, t] : ckpt.train->velocity) w.tensor(Kind::kVelocity, name, t);
    for (const auto& [name, t] : ckpt.train->best) w.tensor(Kind::kBest, name, t);
    w.tensor(Kind::kHistory, "history", history_tensor(ckpt.train->history));
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    if (r.pod<char>() != c) throw std::runtime_error("not a checkpoint (bad magic)");
  }
  const auto version = r.pod<uint32_t>();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config = parse_config(r.bytes());
  if (r.pod<uint8_t>() == 1) {
    TrainState st;
    st.epochs_done = r.pod<int32_t>();
    st.best_epoch = r.pod<int32_t>();
    st.best_loss = static_cast<Real>(r.pod<double>());
    ckpt.train = std::move(st);
  }
  const auto count = r.pod<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    const auto kind = static_cast<Kind>(r.pod<uint8_t>());
    std::string name = r.bytes();
    Tensor t = r.tensor();
    switch (kind) {
      case Kind::kWeight:
        ckpt.weights[name] = std::move(t);
        break;
      case Kind::kVelocity:
      case Kind::kBest:
      case Kind::kHistory:
        if (!ckpt.train) throw std::runtime_error("training entry in a weights-only checkpoint");
        if (kind == Kind::kVelocity) {
          ckpt.train->velocity[name] = std::move(t);
        } else if (kind == Kind::kBest) {
          ckpt.train->best[name] = std::move(t);
        } else {
          for (int64_t row = 0; row < t.shape().h; ++row) {
            ckpt.train->history.push_back({static_cast<int>(t.at(0, 0, row, 0)),
                                           t.at(0, 0, row, 1), t.at(0, 0, row, 2)});
          }
        }
        break;
      default:
        throw std::runtime_error("unknown checkpoint entry kind " +
                                 std::to_string(static_cast<int>(kind)));
    }
  }
  if (!r.done()) throw std::runtime_error("trailing bytes after checkpoint entries");
  if (ckpt.train) ckpt.train->last = ckpt.weights;
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write checkpoint " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read checkpoint " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return deserialize_checkpoint(ss.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  Model model(ckpt.config.model);
  model.load_state(ckpt.weights);
  return model;
}

}  // namespace wavedge
