// Copyright 2026 The Declutter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "declutter/decomposer/analysis.hpp"
#include "declutter/decomposer/model.hpp"
#include "declutter/decomposer/train.hpp"
#include "declutter/diff/init.hpp"
#include "declutter/image.hpp"
#include "declutter/inpaint/inpaint.hpp"
#include "declutter/inpaint/model.hpp"
#include "declutter/inpaint/train.hpp"
#include "declutter/scenes/dataset.hpp"
#include "declutter/scenes/scene.hpp"
#include "declutter/segmentation/segmentation.hpp"
#include "declutter/server/service.hpp"
#include "declutter/verify/grad_suite.hpp"
#include "httplib.h"

namespace fs = std::filesystem;
using namespace declutter;

namespace {

/// Exit status for input that could not be loaded or a run that failed.
constexpr int kFailure = 1;

scenes::Dataset load_data(const fs::path& path) {
  if (fs::is_directory(path)) return scenes::load_corpus(path);
  return scenes::load_manifest(path);
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
  fs::path out = path;
  out += suffix;
  return out;
}

struct GenScenesArgs {
  int count = 0;
  std::uint64_t seed = 0;
  fs::path out;
  int side = 64;
  int max_objects = 5;
  bool textures = false;
};

int gen_scenes(const GenScenesArgs& a) {
  diff::Rng rng(a.seed);
  std::vector<scenes::SceneSample> samples;
  samples.reserve(static_cast<std::size_t>(a.count));
  for (int i = 0; i < a.count; ++i) {
    const std::uint64_t seed = rng();
    if (a.textures) {
      scenes::SceneSample s;
      s.image = scenes::generate_texture(seed, a.side);
      s.seed = seed;
      samples.push_back(std::move(s));
    } else {
      samples.push_back(scenes::generate_scene(seed, {a.side, a.max_objects}));
    }
  }
  scenes::export_corpus(a.out, samples);
  std::cout << "wrote " << samples.size() << (a.textures ? " textures" : " scenes") << " to " << a.out << '\n';
  return 0;
}

struct TrainDecomposerArgs {
  fs::path data;
  fs::path out;
  fs::path loss_csv;
  decomposer::TrainConfig config;
};

int train_decomposer(TrainDecomposerArgs a) {
  const scenes::Dataset data = load_data(a.data);
  for (const auto& missing : data.missing_files) std::cerr << "warning: missing image " << missing << '\n';
  a.config.on_epoch = [](int epoch, double train, double val) {
    std::cout << "epoch " << epoch << " train " << train << " val " << val << std::endl;
  };
  const auto result = decomposer::train_decomposer(data, a.config);
  result.model.save(a.out);
  const fs::path csv = a.loss_csv.empty() ? sibling(a.out, ".loss.csv") : a.loss_csv;
  decomposer::write_loss_csv(csv, result.steps);
  std::cout << "best epoch " << result.best_epoch << "; checkpoint " << a.out << "; losses " << csv << '\n';
  return 0;
}

struct TrainInpainterArgs {
  fs::path data;
  fs::path out;
  fs::path loss_csv;
  inpaint::InpainterTrainConfig config;
};

int train_inpainter(TrainInpainterArgs a) {
  const scenes::Dataset data = load_data(a.data);
  for (const auto& missing : data.missing_files) std::cerr << "warning: missing image " << missing << '\n';
  a.config.on_step = [](const inpaint::InpainterStepRecord& r) {
    if (r.step % 50 == 0) {
      std::cout << "step " << r.step << " l_g_rec " << r.l_g_rec << " l_g_adv " << r.l_g_adv << " l_d " << r.l_d
                << " l_b " << r.l_b << std::endl;
    }
  };
  const auto result = inpaint::train_inpainter(data, a.config);
  result.model.save(a.out);
  const fs::path csv = a.loss_csv.empty() ? sibling(a.out, ".loss.csv") : a.loss_csv;
  inpaint::write_loss_csv(csv, result.history);
  std::cout << "checkpoint " << a.out << "; losses " << csv << '\n';
  return 0;
}

struct AnalyzeArgs {
  fs::path image;
  fs::path decomposer;
  std::string masks = "heuristic";
  fs::path mask_file;
  fs::path out;
};

int analyze(const AnalyzeArgs& a) {
  const auto mode = segmentation::parse_detection_mode(a.masks);
  if (!mode) throw CLI::ValidationError("--masks", "expected oracle or heuristic");
  if (*mode == segmentation::DetectionMode::kOracle && a.mask_file.empty()) {
    throw CLI::ValidationError("--mask-file", "required with --masks oracle");
  }
  const Image image = read_png(a.image);
  const auto model = decomposer::DecomposerModel::load(a.decomposer);
  std::vector<ObjectMask> oracle;
  if (!a.mask_file.empty()) oracle = scenes::load_masks_json(a.mask_file);
  const auto masks = segmentation::detect_objects(image, *mode, std::span<const ObjectMask>(oracle));

  nlohmann::json doc;
  if (masks.empty()) {
    doc = decomposer::report_to_json({});
  } else {
    doc = decomposer::report_to_json(decomposer::contribution(model, image, masks), masks);
  }
  if (a.out.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    std::ofstream(a.out) << doc.dump(2) << '\n';
  }
  return 0;
}

struct CleanArgs {
  fs::path image;
  fs::path report;
  fs::path inpainter;
  std::string fidelity = "capture";
  fs::path out;
  double threshold = inpaint::kDefaultThreshold;
  fs::path dump_dir;
};

int clean(const CleanArgs& a) {
  const auto fidelity = inpaint::parse_fidelity(a.fidelity);
  const Image image = read_png(a.image);
  std::ifstream in(a.report);
  if (!in) throw std::runtime_error("cannot open report " + a.report.string());
  const auto parsed = decomposer::report_from_json(nlohmann::json::parse(in));
  if (parsed.masks.size() != parsed.report.objects.size()) {
    throw std::runtime_error("report " + a.report.string() + " carries no object masks");
  }
  const auto model = inpaint::InpainterModel::load(a.inpainter);

  Mask hole(image.height, image.width);
  for (std::size_t i = 0; i < parsed.masks.size(); ++i) {
    if (parsed.report.objects[i].is_clutter) hole = mask_union(hole, parsed.masks[i].mask);
  }
  const auto result = inpaint::iterative_inpaint(model, image, hole, inpaint::max_iterations(fidelity), a.threshold,
                                                 !a.dump_dir.empty());
  if (!a.dump_dir.empty()) inpaint::dump_trace(a.dump_dir, result);
  write_png(a.out, result.image);
  std::cout << "wrote " << a.out << " after " << result.iterations << " iteration(s)\n";
  return 0;
}

struct GradCheckArgs {
  verify::GradSuiteOptions options;
};

int grad_check(const GradCheckArgs& a) {
  const auto cases = verify::run_grad_suite(a.options);
  for (const auto& c : cases) {
    std::cout << std::left << std::setw(26) << c.name << (c.report.passed ? " ok  " : " FAIL") << "  max rel error "
              << std::scientific << std::setprecision(3) << c.report.max_rel_error << std::defaultfloat << '\n';
    for (const auto& p : c.report.params) {
      if (p.flagged) std::cout << "    " << p.name << " rel error " << p.max_rel_error << '\n';
    }
  }
  const bool ok = verify::all_passed(cases);
  std::cout << (ok ? "all gradients agree" : "gradient mismatch") << '\n';
  return ok ? 0 : kFailure;
}

struct ServeArgs {
  fs::path decomposer;
  fs::path inpainter;
  std::string detection = "heuristic";
  fs::path static_dir;
  fs::path persist_dir;
  server::ServerConfig config;
};

httplib::Server* g_server = nullptr;

int serve(ServeArgs a) {
  const auto mode = segmentation::parse_detection_mode(a.detection);
  if (!mode) throw CLI::ValidationError("--detection", "expected oracle or heuristic");
  a.config.detection = *mode;
  if (!a.static_dir.empty()) a.config.static_dir = a.static_dir;
  if (!a.persist_dir.empty()) a.config.persist_dir = a.persist_dir;
  const auto dmodel = decomposer::DecomposerModel::load(a.decomposer);
  const auto imodel = inpaint::InpainterModel::load(a.inpainter);

  server::Service service(dmodel, imodel, a.config);
  httplib::Server http;
  service.install(http);
  g_server = &http;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "listening on http://" << a.config.host << ':' << a.config.port << std::endl;
  if (!http.listen(a.config.host, a.config.port)) {
    std::cerr << "error: cannot bind " << a.config.host << ':' << a.config.port << '\n';
    return kFailure;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clutter analysis and removal for photographs"};
  app.require_subcommand(1);

  GenScenesArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-scenes", "Write a synthetic PNG + index.json corpus");
  gen_cmd->add_option("--count", gen.count, "Number of images")->required()->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--seed", gen.seed, "Corpus seed")->required();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--side", gen.side, "Image side in pixels")->capture_default_str();
  gen_cmd->add_option("--max-objects", gen.max_objects, "Subject plus clutter upper bound")->capture_default_str();
  gen_cmd->add_flag("--textures", gen.textures, "Emit object-free textures for inpainter training");

  TrainDecomposerArgs td;
  auto* td_cmd = app.add_subcommand("train-decomposer", "Train the score-decomposition model");
  td_cmd->add_option("--data", td.data, "Corpus directory or TSV manifest")->required();
  td_cmd->add_option("--out", td.out, "Checkpoint path")->required();
  td_cmd->add_option("--loss-csv", td.loss_csv, "Loss history (default <out>.loss.csv)");
  td_cmd->add_option("--lr", td.config.learning_rate)->capture_default_str();
  td_cmd->add_option("--batch", td.config.batch_size)->capture_default_str();
  td_cmd->add_option("--epochs", td.config.max_epochs)->capture_default_str();
  td_cmd->add_option("--patience", td.config.patience)->capture_default_str();
  td_cmd->add_option("--lambda-aes", td.config.lambda_aes)->capture_default_str();
  td_cmd->add_option("--clip", td.config.clip_norm)->capture_default_str();
  td_cmd->add_option("--side", td.config.side)->capture_default_str();
  td_cmd->add_option("--val-fraction", td.config.val_fraction)->capture_default_str();
  td_cmd->add_option("--max-steps", td.config.max_steps, "Stop after this many steps (0 = no limit)");
  td_cmd->add_option("--seed", td.config.seed)->capture_default_str();

  TrainInpainterArgs ti;
  ti.config.batch_size = 64;
  auto* ti_cmd = app.add_subcommand("train-inpainter", "Train the inpainting generator, artifact head and critic");
  ti_cmd->add_option("--data", ti.data, "Corpus directory or TSV manifest")->required();
  ti_cmd->add_option("--out", ti.out, "Checkpoint path")->required();
  ti_cmd->add_option("--loss-csv", ti.loss_csv, "Loss history (default <out>.loss.csv)");
  ti_cmd->add_option("--lr", ti.config.learning_rate)->capture_default_str();
  ti_cmd->add_option("--batch", ti.config.batch_size)->capture_default_str();
  ti_cmd->add_option("--steps", ti.config.steps)->capture_default_str();
  ti_cmd->add_option("--side", ti.config.side)->capture_default_str();
  ti_cmd->add_option("--lambda-b", ti.config.lambda_b)->capture_default_str();
  ti_cmd->add_option("--clip", ti.config.clip_norm, "Gradient-norm ceiling (<= 0 disables)")->capture_default_str();
  ti_cmd->add_option("--seed", ti.config.seed)->capture_default_str();

  AnalyzeArgs an;
  auto* an_cmd = app.add_subcommand("analyze", "Write a contribution report for one image");
  an_cmd->add_option("--image", an.image, "PNG image")->required();
  an_cmd->add_option("--decomposer", an.decomposer, "Decomposer checkpoint")->required();
  an_cmd->add_option("--masks", an.masks, "oracle or heuristic")->capture_default_str();
  an_cmd->add_option("--mask-file", an.mask_file, "Object masks JSON (oracle mode)");
  an_cmd->add_option("--out", an.out, "Report path (default stdout)");

  CleanArgs cl;
  auto* cl_cmd = app.add_subcommand("clean", "Inpaint the clutter objects of a report");
  cl_cmd->add_option("--image", cl.image, "PNG image")->required();
  cl_cmd->add_option("--report", cl.report, "Report from analyze")->required();
  cl_cmd->add_option("--inpainter", cl.inpainter, "Inpainter checkpoint")->required();
  cl_cmd->add_option("--fidelity", cl.fidelity, "capture or high")->capture_default_str();
  cl_cmd->add_option("--out", cl.out, "Preview PNG path")->required();
  cl_cmd->add_option("--threshold", cl.threshold, "Artifact acceptance threshold")->capture_default_str();
  cl_cmd->add_option("--dump-dir", cl.dump_dir, "Write per-iteration y, b and remaining-mask PNGs here");

  GradCheckArgs gc;
  auto* gc_cmd = app.add_subcommand("grad-check", "Compare analytic and finite-difference gradients");
  gc_cmd->add_option("--eps", gc.options.eps)->capture_default_str();
  gc_cmd->add_option("--tol", gc.options.tol)->capture_default_str();
  gc_cmd->add_option("--probes", gc.options.probes_per_param, "Elements probed per tensor")->capture_default_str();
  gc_cmd->add_option("--seed", gc.options.seed)->capture_default_str();

  ServeArgs sv;
  auto* sv_cmd = app.add_subcommand("serve", "Run the session HTTP service");
  sv_cmd->add_option("--decomposer", sv.decomposer, "Decomposer checkpoint")->required();
  sv_cmd->add_option("--inpainter", sv.inpainter, "Inpainter checkpoint")->required();
  sv_cmd->add_option("--host", sv.config.host)->capture_default_str();
  sv_cmd->add_option("--port", sv.config.port)->capture_default_str();
  sv_cmd->add_option("--max-sessions", sv.config.max_sessions)->capture_default_str();
  sv_cmd->add_option("--detection", sv.detection, "oracle or heuristic")->capture_default_str();
  sv_cmd->add_option("--threshold", sv.config.threshold)->capture_default_str();
  sv_cmd->add_option("--static-dir", sv.static_dir, "Directory served at /");
  sv_cmd->add_option("--persist-dir", sv.persist_dir, "Directory for session snapshots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 2;
  }

  try {
    if (*gen_cmd) return gen_scenes(gen);
    if (*td_cmd) return train_decomposer(td);
    if (*ti_cmd) return train_inpainter(ti);
    if (*an_cmd) return analyze(an);
    if (*cl_cmd) return clean(cl);
    if (*gc_cmd) return grad_check(gc);
    if (*sv_cmd) return serve(sv);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return 2;
}
