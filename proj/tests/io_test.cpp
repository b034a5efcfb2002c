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

#include <chrono>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wavedge/checkpoint.hpp"
#include "wavedge/config.hpp"
#include "wavedge/image_io.hpp"
#include "wavedge/synth.hpp"

namespace wavedge {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wavedge_io_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

io::Image gradient_image(int channels) {
  io::Image im;
  im.width = 7;
  im.height = 5;
  im.channels = channels;
  for (int64_t i = 0; i < im.width * im.height * channels; ++i) {
    im.pixels.push_back(static_cast<uint8_t>((i * 37) % 256));
  }
  return im;
}

TEST(ImageIoTest, LosslessRoundTrip) {
  const fs::path dir = scratch("roundtrip");
  for (const char* ext : {".png", ".pgm", ".ppm"}) {
    for (int channels : {1, 3}) {
      if ((std::string(ext) == ".pgm" && channels == 3) ||
          (std::string(ext) == ".ppm" && channels == 1)) {
        continue;
      }
      const io::Image im = gradient_image(channels);
      const std::string path = (dir / ("im" + std::to_string(channels) + ext)).string();
      io::write_image(path, im);
      const io::Image back = io::read_image(path);
      EXPECT_EQ(back.width, im.width) << path;
      EXPECT_EQ(back.height, im.height) << path;
      EXPECT_EQ(back.channels, im.channels) << path;
      EXPECT_EQ(back.pixels, im.pixels) << path;
    }
  }
}

TEST(ImageIoTest, RejectsMissingAndUnknown) {
  EXPECT_THROW(io::read_image("/nonexistent/x.png"), std::runtime_error);
  EXPECT_THROW(io::write_image((scratch("bad") / "x.bmp").string(), gradient_image(1)),
               std::runtime_error);
  EXPECT_TRUE(io::is_image_path("a/b.PNG"));
  EXPECT_FALSE(io::is_image_path("a/b.csv"));
}

TEST(ImageIoTest, MaskThreshold) {
  io::Image m;
  m.width = 4;
  m.height = 1;
  m.pixels = {0, 127, 128, 255};
  EXPECT_EQ(io::mask_to_tensor(m).vec(), (std::vector<Real>{0, 0, 1, 1}));
  const Tensor probs(Shape{1, 1, 1, 3}, std::vector<Real>{0.49, 0.5, 0.9});
  EXPECT_EQ(io::to_mask(probs).pixels, (std::vector<uint8_t>{0, 255, 255}));
}

TEST(ImageIoTest, TensorConversions) {
  const io::Image gray = gradient_image(1);
  const Tensor t = io::image_to_tensor(gray);
  ASSERT_EQ(t.shape(), (Shape{1, 3, 5, 7}));
  EXPECT_DOUBLE_EQ(t.at(0, 2, 1, 3), gray.at(1, 3) / 255.0);
  EXPECT_EQ(io::to_rgb(t).pixels.size(), 3u * 35);
  EXPECT_EQ(io::to_gray(t, 0, 1).pixels, gray.pixels);
  const io::Image flat = io::to_gray_scaled(Tensor(Shape{1, 1, 2, 2}, 3.0));
  EXPECT_EQ(flat.pixels, (std::vector<uint8_t>{0, 0, 0, 0}));
  const io::Image span =
      io::to_gray_scaled(Tensor(Shape{1, 1, 1, 3}, std::vector<Real>{-2, 0, 2}));
  EXPECT_EQ(span.pixels.front(), 0);
  EXPECT_EQ(span.pixels.back(), 255);
}

TEST(SynthTest, DeterministicPerIndex) {
  const auto a = synth::generate_set(3, 64, 11);
  const auto b = synth::generate_set(3, 64, 11);
  const auto c = synth::generate_set(3, 64, 12);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].image.pixels, b[i].image.pixels);
    EXPECT_EQ(a[i].mask.pixels, b[i].mask.pixels);
    EXPECT_NE(a[i].image.pixels, c[i].image.pixels);
  }
  EXPECT_EQ(synth::generate(64, 11, 2).image.pixels, a[2].image.pixels);
  EXPECT_EQ(a[1].name, "img_00001");
}

TEST(SynthTest, MasksAreNonEmptyAndClearOfTheBorder) {
  for (const auto& p : synth::generate_set(40, 64, 3)) {
    int64_t fg = 0, border = 0;
    for (int64_t y = 0; y < 64; ++y) {
      for (int64_t x = 0; x < 64; ++x) {
        if (p.mask.at(y, x) <= io::kMaskThreshold) continue;
        ++fg;
        if (y == 0 || x == 0 || y == 63 || x == 63) ++border;
      }
    }
    EXPECT_GT(fg, 64) << p.name;
    EXPECT_LT(fg, 64 * 64 / 2) << p.name;
    EXPECT_EQ(border, 0) << p.name;
  }
}

TEST(SynthTest, TwoHundredImagesAreQuick) {
  const auto start = std::chrono::steady_clock::now();
  const auto set = synth::generate_set(200, 64, 0);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(set.size(), 200u);
  EXPECT_LT(seconds, 10);
}

TEST(SynthTest, DatasetRoundTrip) {
  const fs::path dir = scratch("dataset");
  const auto set = synth::generate_set(4, 32, 9);
  synth::write_dataset(dir.string(), set, false);
  EXPECT_TRUE(fs::exists(dir / "manifest.csv"));
  EXPECT_THROW(synth::write_dataset(dir.string(), set, false), std::invalid_argument);
  EXPECT_NO_THROW(synth::write_dataset(dir.string(), set, true));
  const auto loaded = synth::load_dataset(dir.string(), 32);
  const auto direct = synth::to_samples(set);
  ASSERT_EQ(loaded.size(), direct.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(loaded[i].name, direct[i].name);
    EXPECT_EQ(max_abs_diff(loaded[i].image, direct[i].image), 0);
    EXPECT_EQ(max_abs_diff(loaded[i].mask, direct[i].mask), 0);
  }
  EXPECT_THROW(synth::load_dataset(dir.string(), 64), std::invalid_argument);
}

TEST(ConfigTest, ParseAndRoundTrip) {
  const RunConfig c = parse_config(
      "# toy\ninput_size = 32\nencoder_channels = 4,4,8,8,8\nwega_stages = 2,1\n"
      "lr = 0.25\nepochs = 3\naugment_rotate = false\n");
  EXPECT_EQ(c.model.input_size, 32);
  EXPECT_EQ(c.model.encoder_channels[4], 8);
  EXPECT_EQ(c.model.wega_stages, (std::vector<int>{2, 1}));
  EXPECT_EQ(c.train.lr, 0.25);
  EXPECT_EQ(c.train.epochs, 3);
  EXPECT_FALSE(c.train.augment_rotate);
  EXPECT_TRUE(c.train.augment_flip);
  const RunConfig back = parse_config(to_config_text(c));
  EXPECT_EQ(to_config_text(back), to_config_text(c));
  EXPECT_TRUE(parse_config("lr = 0.1\nwega_stages =\n").model.wega_stages.empty());
}

TEST(ConfigTest, Rejections) {
  EXPECT_THROW(parse_config("epochs = 3\n"), std::invalid_argument);  // lr missing
  EXPECT_NO_THROW(parse_config("epochs = 3\n", false));
  EXPECT_THROW(parse_config("lr = 0.1\ncolour = red\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("lr = 0.1\nepochs = three\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("lr = 0.1\nno equals sign\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("lr = 0.1\nencoder_channels = 1,2,3\n"), std::invalid_argument);
  EXPECT_THROW(load_config("/nonexistent.cfg"), std::invalid_argument);
}

Checkpoint small_checkpoint() {
  RunConfig rc = parse_config("input_size = 32\nencoder_channels = 4,4,8,8,8\nlr = 0.1\n");
  Model model(rc.model);
  TrainState state;
  state.epochs_done = 2;
  state.best_epoch = 1;
  state.best_loss = 1.25;
  state.history = {{1, 1.25, 0.5}, {2, 1.5, 0.4}};
  state.velocity["x"] = testing::random_tensor(Shape{1, 2, 3, 4}, 1);
  state.last = model.state();
  state.best = model.state();
  return Checkpoint{rc, model.state(), state};
}

TEST(CheckpointTest, RoundTrip) {
  const Checkpoint c = small_checkpoint();
  const std::string bytes = serialize_checkpoint(c);
  const Checkpoint back = deserialize_checkpoint(bytes);
  EXPECT_EQ(to_config_text(back.config), to_config_text(c.config));
  ASSERT_EQ(back.weights.size(), c.weights.size());
  for (const auto& [name, t] : c.weights) {
    EXPECT_EQ(back.weights.at(name).shape(), t.shape());
    EXPECT_EQ(max_abs_diff(back.weights.at(name), t), 0) << name;
  }
  ASSERT_TRUE(back.train.has_value());
  EXPECT_EQ(back.train->epochs_done, 2);
  EXPECT_EQ(back.train->best_epoch, 1);
  EXPECT_EQ(back.train->best_loss, 1.25);
  ASSERT_EQ(back.train->history.size(), 2u);
  EXPECT_EQ(back.train->history[1].loss, 1.5);
  EXPECT_EQ(max_abs_diff(back.train->velocity.at("x"), c.train->velocity.at("x")), 0);
  EXPECT_EQ(serialize_checkpoint(back), bytes);

  const fs::path path = scratch("ckpt") / "m.bin";
  save_checkpoint(path.string(), c);
  Model m = model_from_checkpoint(load_checkpoint(path.string()));
  EXPECT_EQ(m.config().input_size, 32);
}

TEST(CheckpointTest, RejectsCorruption) {
  const std::string bytes = serialize_checkpoint(small_checkpoint());
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), std::runtime_error);
  EXPECT_THROW(deserialize_checkpoint(bytes + "x"), std::runtime_error);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(bad), std::runtime_error);
  EXPECT_THROW(load_checkpoint("/nonexistent.bin"), std::runtime_error);
}

}  // namespace
}  // namespace wavedge
