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

#include "wavedge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "wavedge/rng.hpp"

namespace wavedge::synth {
namespace fs = std::filesystem;
namespace {

constexpr double kPi = std::numbers::pi;

struct Wave {
  double fx, fy, phase, amp;
};

uint8_t to_byte(double v) {
  return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255));
}

}  // namespace

SynthPair generate(int64_t size, uint64_t seed, int64_t index) {
  if (size < 16) throw std::invalid_argument("synthetic images need size >= 16");
  Rng rng(derive_seed(seed, static_cast<uint64_t>(index)));
  const double sz = static_cast<double>(size);

  // Background: tinted base plus a few low-frequency gratings and pixel noise.
  double base[3];
  const double level = rng.uniform(0.35, 0.6);
  for (double& b : base) b = level + rng.uniform(-0.06, 0.06);
  std::vector<Wave> waves(4);
  for (Wave& w : waves) {
    const double freq = rng.uniform(1.0, 6.0) / sz;
    const double dir = rng.uniform(0, kPi);
    w = {freq * std::cos(dir), freq * std::sin(dir), rng.uniform(0, 2 * kPi), rng.uniform(0.01, 0.04)};
  }

  // Foreground region: rotated ellipse with optional angular lobes.
  const double ra = rng.uniform(0.12, 0.28) * sz;
  const double rb = rng.uniform(0.12, 0.28) * sz;
  const double theta = rng.uniform(0, kPi);
  const bool lobed = rng.uniform() < 0.5;
  const int lobes = 2 + static_cast<int>(rng.below(3));
  const double lobe_amp = lobed ? rng.uniform(0.05, 0.15) : 0.0;
  const double lobe_phase = rng.uniform(0, 2 * kPi);
  const double margin = std::max(ra, rb) * (1 + lobe_amp) + 2;
  const double cx = rng.uniform(margin, sz - margin);
  const double cy = rng.uniform(margin, sz - margin);
  const double softness = rng.uniform(0.8, 1.6);
  const double contrast = rng.uniform(0.12, 0.25) * (rng.uniform() < 0.5 ? -1 : 1);
  double tint[3];
  for (double& t : tint) t = contrast * rng.uniform(0.7, 1.0);

  SynthPair out;
  char name[32];
  std::snprintf(name, sizeof(name), "img_%05lld", static_cast<long long>(index));
  out.name = name;
  out.image = io::Image{size, size, 3, std::vector<uint8_t>(static_cast<size_t>(size * size * 3))};
  out.mask = io::Image{size, size, 1, std::vector<uint8_t>(static_cast<size_t>(size * size))};
  const double ct = std::cos(theta), st = std::sin(theta);
  const double r_min = std::min(ra, rb);
  for (int64_t y = 0; y < size; ++y) {
    for (int64_t x = 0; x < size; ++x) {
      const double px = static_cast<double>(x) + 0.5 - cx;
      const double py = static_cast<double>(y) + 0.5 - cy;
      const double u = (ct * px + st * py) / ra;
      const double v = (-st * px + ct * py) / rb;
      const double rho = 1 + lobe_amp * std::sin(lobes * std::atan2(v, u) + lobe_phase);
      const double dist = (std::hypot(u, v) - rho) * r_min;  // approx. pixels, < 0 inside
      const double alpha = 1 / (1 + std::exp(dist / softness));
      double texture = 0;
      for (const Wave& w : waves) {
        texture += w.amp * std::sin(2 * kPi * (w.fx * static_cast<double>(x) + w.fy * static_cast<double>(y)) + w.phase);
      }
      const size_t p = static_cast<size_t>(y * size + x);
      for (int c = 0; c < 3; ++c) {
        const double value = base[c] + texture + alpha * tint[c] + 0.02 * rng.normal();
        out.image.pixels[p * 3 + static_cast<size_t>(c)] = to_byte(value);
      }
      out.mask.pixels[p] = dist < 0 ? 255 : 0;
    }
  }
  return out;
}

std::vector<SynthPair> generate_set(int64_t n, int64_t size, uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("--n must be positive");
  std::vector<SynthPair> pairs;
  pairs.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) pairs.push_back(generate(size, seed, i));
  return pairs;
}

void write_dataset(const std::string& dir, const std::vector<SynthPair>& pairs, bool force) {
  const fs::path root(dir);
  if (fs::exists(root)) {
    if (!fs::is_directory(root)) throw std::invalid_argument(dir + " exists and is not a directory");
    if (!fs::is_empty(root) && !force) {
      throw std::invalid_argument(dir + " is not empty (use --force to overwrite)");
    }
  }
  fs::create_directories(root / "images");
  fs::create_directories(root / "masks");
  std::ofstream manifest(root / "manifest.csv", std::ios::trunc);
  if (!manifest) throw std::runtime_error("cannot write " + (root / "manifest.csv").string());
  manifest << "name,image,mask\n";
  for (const SynthPair& p : pairs) {
    const std::string image_rel = "images/" + p.name + ".png";
    const std::string mask_rel = "masks/" + p.name + ".png";
    io::write_image((root / image_rel).string(), p.image);
    io::write_image((root / mask_rel).string(), p.mask);
    manifest << p.name << "," << image_rel << "," << mask_rel << "\n";
  }
}

std::vector<Sample> to_samples(const std::vector<SynthPair>& pairs) {
  std::vector<Sample> out;
  out.reserve(pairs.size());
  for (const SynthPair& p : pairs) {
    out.push_back({p.name, io::image_to_tensor(p.image), io::mask_to_tensor(p.mask)});
  }
  return out;
}

std::vector<Sample> load_dataset(const std::string& dir, int64_t expected_size) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw std::invalid_argument("data directory not found: " + dir);
  std::vector<std::array<std::string, 3>> entries;  // name, image, mask
  const fs::path manifest_path = root / "manifest.csv";
  if (fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line_no == 1 || line.empty()) continue;
      std::array<std::string, 3> e;
      std::stringstream ss(line);
      for (auto& field : e) {
        if (!std::getline(ss, field, ',')) {
          throw std::invalid_argument(manifest_path.string() + ":" + std::to_string(line_no) +
                                      ": expected name,image,mask");
        }
      }
      e[1] = (root / e[1]).string();
      e[2] = (root / e[2]).string();
      entries.push_back(std::move(e));
    }
  } else {
    std::map<std::string, std::string> masks;
    if (fs::is_directory(root / "masks")) {
      for (const auto& f : fs::directory_iterator(root / "masks")) {
        if (io::is_image_path(f.path().string())) masks[f.path().stem().string()] = f.path().string();
      }
    }
    std::map<std::string, std::string> images;
    if (fs::is_directory(root / "images")) {
      for (const auto& f : fs::directory_iterator(root / "images")) {
        if (io::is_image_path(f.path().string())) images[f.path().stem().string()] = f.path().string();
      }
    }
    std::string missing;
    for (const auto& [stem, path] : images) {
      auto it = masks.find(stem);
      if (it == masks.end()) {
        missing += " " + path;
        continue;
      }
      entries.push_back({stem, path, it->second});
    }
    if (!missing.empty()) throw std::invalid_argument("images without masks:" + missing);
  }
  if (entries.empty()) throw std::invalid_argument("no samples found in " + dir);

  std::vector<Sample> out;
  for (const auto& [name, image_path, mask_path] : entries) {
    const io::Image image = io::read_image(image_path);
    const io::Image mask = io::read_image(mask_path);
    if (image.width != mask.width || image.height != mask.height) {
      throw std::invalid_argument(mask_path + ": size differs from " + image_path);
    }
    if (expected_size > 0 && (image.width != expected_size || image.height != expected_size)) {
      throw std::invalid_argument(image_path + ": expected " + std::to_string(expected_size) + "x" +
                                  std::to_string(expected_size) + ", got " +
                                  std::to_string(image.width) + "x" + std::to_string(image.height));
    }
    out.push_back({name, io::image_to_tensor(image), io::mask_to_tensor(mask)});
  }
  return out;
}

}  // namespace wavedge::synth
