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

#include "wavedge/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace wavedge {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw std::invalid_argument("config line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_number(const std::string& v, int line, const std::string& key) {
  T out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) fail(line, "bad value '" + v + "' for " + key);
  return out;
}

Real parse_real(const std::string& v, int line, const std::string& key) {
  return static_cast<Real>(parse_number<double>(v, line, key));
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(line, "bad boolean '" + v + "' for " + key);
}

std::vector<int64_t> parse_list(const std::string& v, int line, const std::string& key) {
  std::vector<int64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_number<int64_t>(item, line, key));
  }
  return out;
}

std::string format_real(Real v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(v));
  return buf;
}

template <typename It>
std::string join(It begin, It end) {
  std::string out;
  for (It it = begin; it != end; ++it) {
    if (!out.empty()) out += ",";
    out += std::to_string(*it);
  }
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text, bool require_lr) {
  RunConfig c;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (!seen.insert(key).second) fail(line, "duplicate key " + key);

    if (key == "input_size") {
      c.model.input_size = parse_number<int64_t>(value, line, key);
    } else if (key == "encoder_channels") {
      const auto list = parse_list(value, line, key);
      if (list.size() != c.model.encoder_channels.size()) {
        fail(line, "encoder_channels needs " + std::to_string(kStages) + " widths");
      }
      std::copy(list.begin(), list.end(), c.model.encoder_channels.begin());
    } else if (key == "decode_stages") {
      c.model.decode_stages = parse_number<int>(value, line, key);
    } else if (key == "wega_stages") {
      c.model.wega_stages.clear();
      for (int64_t s : parse_list(value, line, key)) c.model.wega_stages.push_back(static_cast<int>(s));
    } else if (key == "wavelet_edges") {
      c.model.wavelet_edges = parse_bool(value, line, key);
    } else if (key == "cbam_reduction") {
      c.model.cbam_reduction = parse_number<int64_t>(value, line, key);
    } else if (key == "seed") {
      c.model.seed = parse_number<uint64_t>(value, line, key);
      c.train.seed = c.model.seed;
    } else if (key == "epochs") {
      c.train.epochs = parse_number<int>(value, line, key);
    } else if (key == "lr") {
      c.train.lr = parse_real(value, line, key);
    } else if (key == "momentum") {
      c.train.momentum = parse_real(value, line, key);
    } else if (key == "weight_decay") {
      c.train.weight_decay = parse_real(value, line, key);
    } else if (key == "batch_size") {
      c.train.batch_size = parse_number<int>(value, line, key);
    } else if (key == "augment_flip") {
      c.train.augment_flip = parse_bool(value, line, key);
    } else if (key == "augment_rotate") {
      c.train.augment_rotate = parse_bool(value, line, key);
    } else {
      fail(line, "unknown key " + key);
    }
  }
  if (require_lr && !seen.count("lr")) {
    throw std::invalid_argument("config: lr is required");
  }
  c.model.validate();
  c.train.validate();
  return c;
}

RunConfig load_config(const std::string& path, bool require_lr) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot read config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config(ss.str(), require_lr);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

std::string to_config_text(const RunConfig& c) {
  std::ostringstream os;
  os << "input_size = " << c.model.input_size << "\n"
     << "encoder_channels = "
     << join(c.model.encoder_channels.begin(), c.model.encoder_channels.end()) << "\n"
     << "decode_stages = " << c.model.decode_stages << "\n"
     << "wega_stages = " << join(c.model.wega_stages.begin(), c.model.wega_stages.end()) << "\n"
     << "wavelet_edges = " << (c.model.wavelet_edges ? "true" : "false") << "\n"
     << "cbam_reduction = " << c.model.cbam_reduction << "\n"
     << "seed = " << c.model.seed << "\n"
     << "epochs = " << c.train.epochs << "\n"
     << "lr = " << format_real(c.train.lr) << "\n"
     << "momentum = " << format_real(c.train.momentum) << "\n"
     << "weight_decay = " << format_real(c.train.weight_decay) << "\n"
     << "batch_size = " << c.train.batch_size << "\n"
     << "augment_flip = " << (c.train.augment_flip ? "true" : "false") << "\n"
     << "augment_rotate = " << (c.train.augment_rotate ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace wavedge
