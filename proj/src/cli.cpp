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

#include "wavedge/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "wavedge/checkpoint.hpp"
#include "wavedge/config.hpp"
#include "wavedge/gradcheck_suite.hpp"
#include "wavedge/image_io.hpp"
#include "wavedge/metrics.hpp"
#include "wavedge/model.hpp"
#include "wavedge/synth.hpp"
#include "wavedge/wavelet.hpp"

namespace wavedge::cli {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Raised for bad user input; maps to kExitValidation.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr int kLogVersion = 1;

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ValidationError("cannot write " + path.string());
  f << text;
  if (!f) throw ValidationError("failed writing " + path.string());
}

std::map<std::string, fs::path> images_by_stem(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir);
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !io::is_image_path(entry.path().string())) continue;
    const std::string stem = entry.path().stem().string();
    if (out.count(stem)) {
      throw ValidationError("two images share the name '" + stem + "' in " + dir);
    }
    out[stem] = entry.path();
  }
  return out;
}

// --- edges ----------------------------------------------------------------------

struct EdgesArgs {
  std::string input, out_dir;
  int levels = 2;
  bool per_band = false;
};

json band_json(const std::string& name, int level, const Tensor& t) {
  json j;
  j["name"] = name;
  j["level"] = level;
  j["height"] = t.shape().h;
  j["width"] = t.shape().w;
  std::vector<double> values(t.values().begin(), t.values().end());
  j["min"] = *std::min_element(values.begin(), values.end());
  j["max"] = *std::max_element(values.begin(), values.end());
  j["values"] = values;
  return j;
}

int cmd_edges(const EdgesArgs& a, std::ostream& out) {
  const Tensor rgb = io::image_to_tensor(io::read_image(a.input));
  const Tensor gray = channel_mean(rgb);
  const int64_t block = int64_t{1} << a.levels;
  if (gray.shape().h % block != 0 || gray.shape().w % block != 0) {
    throw ValidationError(a.input + ": " + std::to_string(a.levels) +
                          "-level decomposition needs width and height divisible by " +
                          std::to_string(block) + ", got " + std::to_string(gray.shape().w) + "x" +
                          std::to_string(gray.shape().h));
  }
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  const wavelet::WaveletPyramid pyr = wavelet::decompose(gray, a.levels);

  json sidecar;
  sidecar["version"] = 1;
  sidecar["input"] = a.input;
  sidecar["levels"] = a.levels;
  sidecar["bands"] = json::array();
  int written = 0;
  auto emit = [&](const std::string& file, const std::string& band, int level, const Tensor& t,
                  bool scale) {
    io::write_image((dir / file).string(), scale ? io::to_gray_scaled(t) : io::to_gray(t));
    json j = band_json(band, level, t);
    j["file"] = file;
    sidecar["bands"].push_back(std::move(j));
    ++written;
  };
  for (int l = 0; l < a.levels; ++l) {
    const wavelet::PyramidLevel& lv = pyr.levels[static_cast<size_t>(l)];
    const std::string prefix = "level" + std::to_string(l + 1) + "_";
    emit(prefix + "LH.png", "LH", l + 1, lv.lh, true);
    emit(prefix + "HL.png", "HL", l + 1, lv.hl, true);
    emit(prefix + "HH.png", "HH", l + 1, lv.hh, true);
  }
  emit("level" + std::to_string(a.levels) + "_LL.png", "LL", a.levels, pyr.levels.back().a, true);

  // Fused mask: sum over levels of the upsampled details, then |.| summed over bands.
  Tensor head;
  for (int l = 0; l < a.levels; ++l) {
    const wavelet::PyramidLevel& lv = pyr.levels[static_cast<size_t>(l)];
    const std::vector<Tensor> details{lv.lh, lv.hl, lv.hh};
    const Tensor up = bilinear_upsample(concat_channels(details), int64_t{2} << l);
    head = head.empty() ? up : add(head, up);
  }
  const Tensor magnitude = abs(head);
  emit("edge_mask.png", "edge_mask", 0, channel_sum(magnitude), true);
  if (a.per_band) {
    const char* names[3] = {"LH", "HL", "HH"};
    for (int64_t b = 0; b < 3; ++b) {
      emit(std::string("edge_") + names[b] + ".png", std::string("edge_") + names[b], 0,
           slice_channels(magnitude, b, 1), true);
    }
  }
  write_text(dir / "bands.json", sidecar.dump(1) + "\n");
  out << "wrote " << written << " images and bands.json to " << a.out_dir << "\n";
  return kExitOk;
}

// --- synth ----------------------------------------------------------------------

struct SynthArgs {
  int64_t n = 200, size = 64;
  uint64_t seed = 0;
  std::string out_dir;
  bool force = false;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.n <= 0) throw ValidationError("--n must be positive");
  if (a.size < 16) throw ValidationError("--size must be at least 16");
  std::vector<synth::SynthPair> pairs;
  try {
    pairs = synth::generate_set(a.n, a.size, a.seed);
    synth::write_dataset(a.out_dir, pairs, a.force);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  out << "wrote " << pairs.size() << " image/mask pairs to " << a.out_dir << "\n";
  return kExitOk;
}

// --- train ----------------------------------------------------------------------

struct TrainArgs {
  std::string data, config, out, log, resume;
  std::optional<int> epochs;
  std::optional<double> lr;
  bool quiet = false;
};

json training_log_json(const RunConfig& config, const TrainingLog& log) {
  json j;
  j["version"] = kLogVersion;
  j["config"] = to_config_text(config);
  j["epochs"] = json::array();
  for (const EpochRecord& r : log.epochs) {
    j["epochs"].push_back({{"epoch", r.epoch}, {"loss", r.loss}, {"train_mdice", r.train_mdice}});
  }
  j["selected_epoch"] = log.selected_epoch;
  j["selected_loss"] = log.selected_loss;
  return j;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig config;
  try {
    config = load_config(a.config, !a.lr.has_value());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  if (a.epochs) config.train.epochs = *a.epochs;
  if (a.lr) config.train.lr = *a.lr;

  std::optional<Model> model;
  TrainState state;
  if (!a.resume.empty()) {
    const Checkpoint ckpt = load_checkpoint(a.resume);
    if (!ckpt.train) throw ValidationError(a.resume + ": no training state (use the .last file)");
    if (to_config_text(RunConfig{ckpt.config.model, {}}) !=
        to_config_text(RunConfig{config.model, {}})) {
      throw ValidationError(a.resume + ": model settings differ from " + a.config);
    }
    model.emplace(model_from_checkpoint(ckpt));
    state = *ckpt.train;
  } else {
    model.emplace(config.model);
  }
  try {
    config.model.validate();
    config.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(a.config + ": " + e.what());
  }

  std::vector<Sample> data;
  try {
    data = synth::load_dataset(a.data, config.model.input_size);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }

  const EpochCallback progress = [&](const EpochRecord& r) {
    if (a.quiet) return;
    out << "epoch " << r.epoch << "/" << config.train.epochs << "  loss "
        << format("%.6f", r.loss) << "  train mDice " << format("%.4f", r.train_mdice) << "\n"
        << std::flush;
  };
  const TrainingLog log = train_toy(*model, data, config.train, state, progress);

  save_checkpoint(a.out, Checkpoint{config, model->state(), std::nullopt});
  save_checkpoint(a.out + ".last", Checkpoint{config, state.last, state});
  const std::string log_path = a.log.empty() ? a.out + ".json" : a.log;
  write_text(log_path, training_log_json(config, log).dump(1) + "\n");
  out << "selected epoch " << log.selected_epoch;
  if (log.selected_epoch > 0) out << " (loss " << format("%.6f", log.selected_loss) << ")";
  out << "\ncheckpoint " << a.out << ", resumable state " << a.out << ".last, log " << log_path
      << "\n";
  return kExitOk;
}

// --- eval -----------------------------------------------------------------------

struct EvalArgs {
  std::string pred, gt, out, dataset;
  double threshold = 0.5;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const auto preds = images_by_stem(a.pred);
  const auto gts = images_by_stem(a.gt);
  std::vector<std::string> unmatched;
  for (const auto& [stem, path] : preds) {
    if (!gts.count(stem)) unmatched.push_back(path.string() + " (no ground truth)");
  }
  for (const auto& [stem, path] : gts) {
    if (!preds.count(stem)) unmatched.push_back(path.string() + " (no prediction)");
  }
  if (!unmatched.empty()) {
    err << "unmatched files:\n";
    for (const std::string& u : unmatched) err << "  " << u << "\n";
    return kExitValidation;
  }
  if (gts.empty()) throw ValidationError("no images found in " + a.gt);

  std::vector<metrics::EvalPair> pairs;
  for (const auto& [stem, gt_path] : gts) {
    const io::Image p = io::read_image(preds.at(stem).string());
    const io::Image g = io::read_image(gt_path.string());
    if (p.width != g.width || p.height != g.height) {
      throw ValidationError(preds.at(stem).string() + ": size differs from " + gt_path.string());
    }
    pairs.push_back({stem, io::gray_to_tensor(p), io::mask_to_tensor(g)});
  }
  const std::string dataset =
      a.dataset.empty() ? fs::path(a.gt).lexically_normal().filename().string() : a.dataset;
  const metrics::MetricReport report = metrics::evaluate(dataset, pairs, a.threshold);
  const std::string ext = fs::path(a.out).extension().string();
  if (ext == ".json") {
    write_text(a.out, metrics::report_json(report));
  } else if (ext == ".csv") {
    write_text(a.out, metrics::report_csv(report));
  } else {
    throw ValidationError("--out must end in .csv or .json, got " + a.out);
  }
  out << metrics::report_csv(report);
  return kExitOk;
}

// --- gradcheck ------------------------------------------------------------------

struct GradcheckArgs {
  uint64_t seed = 0;
  std::string module = "all";
  double tolerance = 1e-4;
  int64_t coords = 32;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  std::vector<std::string> modules;
  if (a.module == "all") {
    modules = gradcheck_modules();
  } else {
    const auto& known = gradcheck_modules();
    if (std::find(known.begin(), known.end(), a.module) == known.end()) {
      throw ValidationError("unknown module '" + a.module + "'");
    }
    modules = {a.module};
  }
  GradCheckOptions options;
  options.seed = a.seed;
  options.tolerance = a.tolerance;
  options.coords_per_param = a.coords;
  bool ok = true;
  for (const std::string& m : modules) {
    const SuiteResult r = run_gradcheck_module(m, options);
    const bool pass = r.report.passed(a.tolerance);
    ok = ok && pass;
    char line[320];
    std::snprintf(line, sizeof(line),
                  "%-8s max rel err %.3e at %s[%lld]  coords %lld  kinks %lld  %s\n", m.c_str(),
                  static_cast<double>(r.report.max_rel_err), r.report.worst_param.c_str(),
                  static_cast<long long>(r.report.worst_index),
                  static_cast<long long>(r.report.coords_checked),
                  static_cast<long long>(r.report.kinks), pass ? "ok" : "FAIL");
    out << line;
    for (const std::string& nf : r.report.non_finite) out << "  non-finite at " << nf << "\n";
  }
  return ok ? kExitOk : kExitValidation;
}

// --- predict --------------------------------------------------------------------

struct PredictArgs {
  std::string checkpoint, input, out_dir;
  bool probs = false;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  Model model = model_from_checkpoint(load_checkpoint(a.checkpoint));
  std::vector<fs::path> inputs;
  if (fs::is_directory(a.input)) {
    for (const auto& [stem, path] : images_by_stem(a.input)) inputs.push_back(path);
  } else {
    inputs.push_back(a.input);
  }
  fs::create_directories(a.out_dir);
  const int64_t size = model.config().input_size;
  for (const fs::path& p : inputs) {
    const io::Image img = io::read_image(p.string());
    if (img.width != size || img.height != size) {
      throw ValidationError(p.string() + ": model expects " + std::to_string(size) + "x" +
                            std::to_string(size) + " input");
    }
    const Tensor probs = model.predict(io::image_to_tensor(img));
    const fs::path target = fs::path(a.out_dir) / (p.stem().string() + ".png");
    io::write_image(target.string(), a.probs ? io::to_gray(probs) : io::to_mask(probs));
  }
  out << "wrote " << inputs.size() << " predictions to " << a.out_dir << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wavelet edge-guided segmentation toolkit"};
  app.require_subcommand(1);

  EdgesArgs edges;
  auto* edges_cmd = app.add_subcommand("edges", "Haar decomposition and fused edge mask of an image");
  edges_cmd->add_option("--input", edges.input, "Input image (PNG/PGM/PPM)")->required();
  edges_cmd->add_option("--out-dir", edges.out_dir, "Output directory")->required();
  edges_cmd->add_option("--levels", edges.levels, "Decomposition levels")->check(CLI::IsMember({1, 2}));
  edges_cmd->add_flag("--per-band", edges.per_band, "Also write the fused magnitude of each band");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic weak-boundary dataset");
  synth_cmd->add_option("--n", synth_args.n, "Number of image/mask pairs");
  synth_cmd->add_option("--size", synth_args.size, "Image side in pixels");
  synth_cmd->add_option("--seed", synth_args.seed, "Random seed");
  synth_cmd->add_option("--out-dir", synth_args.out_dir, "Output directory")->required();
  synth_cmd->add_flag("--force", synth_args.force, "Allow a non-empty output directory");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the segmentation model");
  train_cmd->add_option("--data", train.data, "Dataset directory")->required();
  train_cmd->add_option("--config", train.config, "key=value config file")->required();
  train_cmd->add_option("--out", train.out, "Checkpoint path")->required();
  train_cmd->add_option("--epochs", train.epochs, "Override epochs");
  train_cmd->add_option("--lr", train.lr, "Override learning rate");
  train_cmd->add_option("--resume", train.resume, "Continue from a .last checkpoint");
  train_cmd->add_option("--log", train.log, "Training log path (default <out>.json)");
  train_cmd->add_flag("--quiet", train.quiet, "No per-epoch output");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score predicted masks against ground truth");
  eval_cmd->add_option("--pred", eval.pred, "Prediction directory")->required();
  eval_cmd->add_option("--gt", eval.gt, "Ground-truth directory")->required();
  eval_cmd->add_option("--out", eval.out, "Report path (.csv or .json)")->required();
  eval_cmd->add_option("--dataset", eval.dataset, "Dataset label (default: gt directory name)");
  eval_cmd->add_option("--threshold", eval.threshold, "Prediction threshold")
      ->check(CLI::Range(0.0, 1.0));

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gc_cmd->add_option("--seed", gc.seed, "Random seed");
  gc_cmd->add_option("--module", gc.module, "all|wavelet|wega|cbam|loss|model");
  gc_cmd->add_option("--tolerance", gc.tolerance, "Max relative error");
  gc_cmd->add_option("--coords", gc.coords, "Coordinates sampled per parameter")
      ->check(CLI::PositiveNumber);

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Write predicted masks");
  predict_cmd->add_option("--checkpoint", predict.checkpoint, "Checkpoint path")->required();
  predict_cmd->add_option("--input", predict.input, "Image or directory")->required();
  predict_cmd->add_option("--out-dir", predict.out_dir, "Output directory")->required();
  predict_cmd->add_flag("--probs", predict.probs, "Write probabilities instead of binary masks");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << "run with --help for usage\n";
    return kExitValidation;
  }

  try {
    if (edges_cmd->parsed()) return cmd_edges(edges, out);
    if (synth_cmd->parsed()) return cmd_synth(synth_args, out);
    if (train_cmd->parsed()) return cmd_train(train, out);
    if (eval_cmd->parsed()) return cmd_eval(eval, out, err);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc, out);
    if (predict_cmd->parsed()) return cmd_predict(predict, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::runtime_error& e) {
    // I/O and format problems with user-supplied files.
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace wavedge::cli
