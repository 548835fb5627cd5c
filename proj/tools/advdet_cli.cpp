// Copyright 2026 The advdet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// advdet command-line tool. Links only the C API.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "advdet/advdet.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

// Thrown with the status of a failed C call.
struct Failure : std::runtime_error {
  advdet_status status;
  Failure(advdet_status s, const std::string& what) : std::runtime_error(what), status(s) {}
};

void check(advdet_status s) {
  if (s != ADVDET_OK) throw Failure(s, advdet_last_error());
}

int exit_code(advdet_status s) {
  switch (s) {
    case ADVDET_OK: return 0;
    case ADVDET_ERR_DEGENERATE_INPUT:
    case ADVDET_ERR_UNDEFINED_METRIC:
    case ADVDET_ERR_NOT_ATTACKABLE:
    case ADVDET_ERR_NUMERIC:
    case ADVDET_ERR_BACKEND:
    case ADVDET_ERR_INTERNAL: return kExitRuntime;
    default: return kExitUsage;
  }
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Detector = std::unique_ptr<advdet_detector, Deleter<advdet_detector, advdet_detector_free>>;
using Image = std::unique_ptr<advdet_image, Deleter<advdet_image, advdet_image_free>>;
using Result = std::unique_ptr<advdet_result, Deleter<advdet_result, advdet_result_free>>;
using Dataset = std::unique_ptr<advdet_dataset, Deleter<advdet_dataset, advdet_dataset_free>>;
using Manifest = std::unique_ptr<advdet_manifest, Deleter<advdet_manifest, advdet_manifest_free>>;
using Matrix = std::unique_ptr<advdet_matrix, Deleter<advdet_matrix, advdet_matrix_free>>;

struct Common {
  std::uint64_t seed = 0;
  std::string model_dir;
};

struct AttackArgs {
  std::string adapter = "toy";
  std::string image;
  std::string dataset;
  std::string images;
  int count = 20;
  std::string output = "advdet-out";
  double step = 0.01;
  int max_iter = 500;
  double conf = 0.50;
  std::optional<double> target_distortion;
  std::optional<double> target_success;
  std::string mask = "binary";
  std::string norm = "max-abs";
  double iou_match = 0.5;
  int workers = 1;
  bool resume = false;
  bool no_traces = false;
  bool annotation_targets = false;
  std::vector<double> sweep_distortion;
  std::vector<double> sweep_conf;
};

struct EvaluateArgs {
  std::vector<std::string> manifests;
  std::vector<std::string> labels;
  std::vector<std::string> targets;
  std::string dataset;
  std::string images;
  bool include_clean = false;
  double conf = 0.50;
  std::string iou = "auto";
  bool include_difficult = false;
  std::string output = "advdet-eval";
};

struct PlotArgs {
  std::string figure;
  std::vector<std::string> inputs;
  std::string output;
  std::string svg;
};

// Cheap check before any input is read or a detector is built.
void check_detector_name(const std::string& spec) {
  const std::string name = spec.substr(0, spec.rfind(':'));
  const std::string list = advdet_available_detectors();
  if ((" " + list + " ").find(" " + name + " ") == std::string::npos) {
    throw Failure(ADVDET_ERR_CONFIGURATION, "unknown detector '" + name + "'; available: " + list);
  }
}

Detector make_detector(const std::string& spec, const Common& common) {
  // "name" uses --seed; "name:K" pins seed K for this detector.
  std::string name = spec;
  std::uint64_t seed = common.seed;
  if (auto colon = spec.rfind(':'); colon != std::string::npos) {
    name = spec.substr(0, colon);
    try {
      seed = std::stoull(spec.substr(colon + 1));
    } catch (const std::exception&) {
      throw Failure(ADVDET_ERR_CONFIGURATION, "bad seed in detector spec '" + spec + "'");
    }
  }
  advdet_detector* d = nullptr;
  check(advdet_detector_create(name.c_str(), seed, common.model_dir.c_str(), &d));
  return Detector(d);
}

Dataset load_dataset(const std::string& dataset, const std::string& images, std::uint64_t seed,
                     int count, const fs::path& output) {
  advdet_dataset* d = nullptr;
  if (dataset == "synthetic") {
    check(advdet_dataset_synthetic((output / "dataset").string().c_str(), seed, count, &d));
  } else {
    if (images.empty()) throw Failure(ADVDET_ERR_CONFIGURATION, "--images is required with --dataset " + dataset);
    if (fs::is_directory(dataset)) {
      check(advdet_dataset_load_voc(dataset.c_str(), images.c_str(), &d));
    } else {
      check(advdet_dataset_load_coco(dataset.c_str(), images.c_str(), &d));
    }
  }
  Dataset out(d);
  for (std::size_t i = 0; i < advdet_dataset_warning_count(d); ++i) {
    std::fprintf(stderr, "warning: %s\n", advdet_dataset_warning(d, i));
  }
  return out;
}

advdet_attack_config attack_config(const AttackArgs& a) {
  advdet_attack_config c;
  advdet_attack_config_default(&c);
  c.step_size = a.step;
  c.max_iterations = a.max_iter;
  c.confidence_threshold = a.conf;
  c.has_target_distortion = a.target_distortion.has_value();
  c.target_distortion = a.target_distortion.value_or(0.0);
  c.has_target_success_rate = a.target_success.has_value();
  c.target_success_rate = a.target_success.value_or(0.0);
  c.mask_mode = a.mask == "additive" ? ADVDET_MASK_ADDITIVE : ADVDET_MASK_BINARY;
  c.normalization = a.norm == "sign" ? ADVDET_NORM_SIGN
                    : a.norm == "raw" ? ADVDET_NORM_RAW
                                      : ADVDET_NORM_MAX_ABS;
  c.iou_match = a.iou_match;
  return c;
}

void echo_config(const CLI::App& app, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream out(dir / "config.toml");
  out << app.config_to_str(true, false);
  if (!out) throw Failure(ADVDET_ERR_IO, "cannot write " + (dir / "config.toml").string());
}

Image read(const std::string& path) {
  advdet_image* img = nullptr;
  check(advdet_image_read(path.c_str(), &img));
  return Image(img);
}

void emit(const char* figure, const std::vector<std::string>& inputs, const fs::path& dir) {
  std::vector<const char*> ptrs;
  for (const auto& s : inputs) ptrs.push_back(s.c_str());
  const auto series = (dir / (std::string(figure) + ".tsv")).string();
  const auto svg = (dir / (std::string(figure) + ".svg")).string();
  check(advdet_emit_series(figure, ptrs.data(), ptrs.size(), series.c_str(), svg.c_str(), nullptr));
  std::printf("series written to %s\n", series.c_str());
}

void run_sweeps(const AttackArgs& a, const Common& common, const std::vector<std::string>& ids,
                const std::vector<std::string>& paths, const fs::path& out) {
  auto det = make_detector(a.adapter, common);
  const auto config = attack_config(a);
  if (!a.sweep_distortion.empty()) {
    const std::size_t k = a.sweep_distortion.size();
    std::vector<advdet_sweep_point> points(ids.size() * k);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto img = read(paths[i]);
      check(advdet_attack_sweep(det.get(), img.get(), &config, a.sweep_distortion.data(), k,
                                points.data() + i * k));
    }
    std::vector<const char*> id_ptrs;
    for (const auto& s : ids) id_ptrs.push_back(s.c_str());
    const auto table = (out / "sweep.tsv").string();
    check(advdet_write_sweep_table(table.c_str(), id_ptrs.data(), points.data(), ids.size(), k));
    for (std::size_t j = 0; j < k; ++j) {
      double sum = 0.0;
      int n = 0;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!points[i * k + j].skipped) {
          sum += points[i * k + j].success;
          ++n;
        }
      }
      if (n > 0) {
        std::printf("S=%.4f  mean success %.4f over %d image(s)\n", a.sweep_distortion[j], sum / n, n);
      } else {
        std::printf("S=%.4f  no attackable images\n", a.sweep_distortion[j]);
      }
    }
    emit("rate_vs_distortion", {table}, out);
  }
  if (!a.sweep_conf.empty()) {
    std::vector<Image> images;
    std::vector<const advdet_image*> ptrs;
    for (const auto& p : paths) {
      images.push_back(read(p));
      ptrs.push_back(images.back().get());
    }
    std::vector<advdet_confidence_point> points(a.sweep_conf.size());
    check(advdet_confidence_sweep(det.get(), ptrs.data(), ptrs.size(), &config, a.sweep_conf.data(),
                                  a.sweep_conf.size(), points.data()));
    const auto table = (out / "confidence.tsv").string();
    check(advdet_write_confidence_table(table.c_str(), points.data(), points.size()));
    for (const auto& p : points) {
      std::printf("T=%.2f  mean distortion %.6f over %d image(s)\n", p.threshold, p.mean_distortion,
                  p.images);
    }
    emit("conf_vs_distortion", {table}, out);
  }
}

void cmd_attack(const CLI::App& app, const AttackArgs& a, const Common& common) {
  const fs::path out = a.output;
  const auto config = attack_config(a);
  const bool sweeping = !a.sweep_distortion.empty() || !a.sweep_conf.empty();
  check_detector_name(a.adapter);

  if (!a.image.empty()) {
    auto img = read(a.image);
    auto det = make_detector(a.adapter, common);
    echo_config(app, out);
    if (sweeping) {
      run_sweeps(a, common, {fs::path(a.image).stem().string()}, {a.image}, out);
      return;
    }
    advdet_result* raw = nullptr;
    check(advdet_attack(det.get(), img.get(), &config, &raw));
    Result result(raw);
    const auto stem = fs::path(a.image).stem().string();
    const auto adv = (out / (stem + ".png")).string();
    check(advdet_image_write(advdet_result_image(raw), adv.c_str()));
    if (advdet_result_initial_detections(raw) == 0) {
      std::printf("no detections, image unchanged\n");
      std::printf("output: %s\n", adv.c_str());
      return;
    }
    if (!a.no_traces) {
      const auto trace = (out / (stem + ".trace.tsv")).string();
      check(advdet_result_write_trace(raw, trace.c_str()));
    }
    std::printf("stop: %s\niterations: %d\ndistortion: %.6f\nsuccess: %.4f\noutput: %s\n",
                advdet_stop_reason_string(advdet_result_stop_reason(raw)),
                advdet_result_iterations(raw), advdet_result_distortion(raw),
                advdet_result_success(raw), adv.c_str());
    return;
  }

  auto det = make_detector(a.adapter, common);
  auto dataset = load_dataset(a.dataset, a.images, common.seed, a.count, out);
  echo_config(app, out);
  if (sweeping) {
    std::vector<std::string> ids;
    std::vector<std::string> paths;
    for (std::size_t i = 0; i < advdet_dataset_size(dataset.get()); ++i) {
      paths.emplace_back(advdet_dataset_image_path(dataset.get(), i));
      ids.push_back(fs::path(paths.back()).stem().string());
    }
    run_sweeps(a, common, ids, paths, out);
    return;
  }

  advdet_batch_options options;
  advdet_batch_options_default(&options);
  const auto root = out.string();
  options.output_root = root.c_str();
  options.workers = a.workers;
  options.resume = a.resume;
  options.write_traces = !a.no_traces;
  options.annotation_targets = a.annotation_targets;
  advdet_manifest* raw = nullptr;
  check(advdet_run_batch(det.get(), dataset.get(), &config, &options, &raw));
  Manifest manifest(raw);

  std::map<std::string, int> reasons;
  int errors = 0;
  for (std::size_t i = 0; i < advdet_manifest_size(raw); ++i) {
    advdet_manifest_row row;
    check(advdet_manifest_row_at(raw, i, &row));
    if (std::string(row.status) != "ok") {
      ++errors;
      std::fprintf(stderr, "error: %s: %s\n", row.image_id, row.error);
      continue;
    }
    ++reasons[advdet_stop_reason_string(row.stop_reason)];
  }
  std::printf("images: %zu (%d failed)\n", advdet_manifest_size(raw), errors);
  for (const auto& [reason, n] : reasons) std::printf("  %s: %d\n", reason.c_str(), n);
  double mean = 0.0;
  if (advdet_manifest_mean_success(raw, &mean) == ADVDET_OK) {
    std::printf("mean success: %.4f\n", mean);
  } else {
    std::printf("mean success: undefined (no image had detections)\n");
  }
  std::printf("manifest: %s\n", (out / "manifest.jsonl").string().c_str());
}

void cmd_evaluate(const CLI::App& app, const EvaluateArgs& e, const Common& common) {
  if (e.manifests.empty() && !e.include_clean) {
    throw Failure(ADVDET_ERR_CONFIGURATION, "give at least one --manifest or --include-clean");
  }
  if (!e.labels.empty() && e.labels.size() != e.manifests.size()) {
    throw Failure(ADVDET_ERR_CONFIGURATION, "--label must be given once per --manifest");
  }
  for (const auto& spec : e.targets) check_detector_name(spec);
  std::vector<Manifest> manifests;
  for (const auto& path : e.manifests) {
    advdet_manifest* m = nullptr;
    check(advdet_manifest_read(path.c_str(), &m));
    manifests.emplace_back(m);
  }
  if (e.images.empty()) throw Failure(ADVDET_ERR_CONFIGURATION, "--images is required");
  Dataset dataset;
  {
    advdet_dataset* d = nullptr;
    if (fs::is_directory(e.dataset)) {
      check(advdet_dataset_load_voc(e.dataset.c_str(), e.images.c_str(), &d));
    } else {
      check(advdet_dataset_load_coco(e.dataset.c_str(), e.images.c_str(), &d));
    }
    dataset.reset(d);
  }
  std::vector<std::string> labels = e.labels;
  for (std::size_t i = labels.size(); i < manifests.size(); ++i) {
    labels.emplace_back(advdet_manifest_detector(manifests[i].get()));
  }
  // Manifests from the same detector (e.g. two toy seeds) share a name; tell
  // them apart by their batch directory.
  if (e.labels.empty()) {
    std::map<std::string, int> uses;
    for (const auto& l : labels) ++uses[l];
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (uses[labels[i]] < 2) continue;
      fs::path p = fs::absolute(e.manifests[i]).lexically_normal();
      if (!fs::is_directory(p)) p = p.parent_path();
      if (p.filename().empty()) p = p.parent_path();
      labels[i] += "@" + p.filename().string();
    }
  }
  if (e.include_clean) {
    advdet_manifest* m = nullptr;
    check(advdet_manifest_identity(dataset.get(), "clean", &m));
    manifests.emplace_back(m);
    labels.emplace_back("clean");
  }
  std::vector<Detector> targets;
  std::vector<std::string> target_labels = e.targets;
  for (const auto& spec : e.targets) targets.push_back(make_detector(spec, common));

  std::vector<const advdet_manifest*> source_ptrs;
  std::vector<const char*> source_label_ptrs;
  for (std::size_t i = 0; i < manifests.size(); ++i) {
    source_ptrs.push_back(manifests[i].get());
    source_label_ptrs.push_back(labels[i].c_str());
  }
  std::vector<advdet_detector*> target_ptrs;
  std::vector<const char*> target_label_ptrs;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    target_ptrs.push_back(targets[i].get());
    target_label_ptrs.push_back(target_labels[i].c_str());
  }
  advdet_eval_options options;
  advdet_eval_options_default(&options);
  options.threshold = e.conf;
  options.include_difficult = e.include_difficult;
  const std::vector<double> voc = {0.5};
  std::vector<double> coco;
  for (int i = 0; i < 10; ++i) coco.push_back(0.5 + 0.05 * i);
  if (e.iou == "voc") {
    options.iou_thresholds = voc.data();
    options.iou_threshold_count = voc.size();
  } else if (e.iou == "coco") {
    options.iou_thresholds = coco.data();
    options.iou_threshold_count = coco.size();
  }

  advdet_matrix* raw = nullptr;
  check(advdet_evaluate(source_ptrs.data(), source_label_ptrs.data(), source_ptrs.size(),
                        target_ptrs.data(), target_label_ptrs.data(), target_ptrs.size(),
                        dataset.get(), &options, &raw));
  Matrix matrix(raw);
  echo_config(app, e.output);
  check(advdet_matrix_write(raw, e.output.c_str()));
  for (std::size_t i = 0; i < advdet_matrix_warning_count(raw); ++i) {
    std::fprintf(stderr, "warning: %s\n", advdet_matrix_warning(raw, i));
  }

  std::printf("%-16s", "source");
  for (const auto& t : target_labels) std::printf("  %-22s", t.c_str());
  std::printf("\n%-16s", "baseline");
  for (std::size_t t = 0; t < targets.size(); ++t) {
    double b = 0.0;
    check(advdet_matrix_baseline(raw, t, &b));
    std::printf("  mAP %-18.4f", b);
  }
  std::printf("\n");
  for (std::size_t s = 0; s < manifests.size(); ++s) {
    std::printf("%-16s", labels[s].c_str());
    for (std::size_t t = 0; t < targets.size(); ++t) {
      double cell = 0.0;
      double rate = 0.0;
      check(advdet_matrix_cell(raw, s, t, &cell));
      if (advdet_matrix_success_rate(raw, s, t, &rate) == ADVDET_OK) {
        std::printf("  mAP %.4f (%6.2f%%)   ", cell, rate);
      } else {
        std::printf("  mAP %.4f (   n/a)   ", cell);
      }
    }
    std::printf("\n");
  }
  std::printf("matrix: %s\n", (fs::path(e.output) / "matrix.tsv").string().c_str());
}

void cmd_plot(const PlotArgs& p) {
  std::vector<const char*> ptrs;
  for (const auto& s : p.inputs) ptrs.push_back(s.c_str());
  std::size_t rows = 0;
  check(advdet_emit_series(p.figure.c_str(), ptrs.data(), ptrs.size(), p.output.c_str(),
                           p.svg.empty() ? nullptr : p.svg.c_str(), &rows));
  std::printf("%zu rows written to %s\n", rows, p.output.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distortion-aware adversarial attacks on object detectors"};
  app.set_config("--config", "", "TOML/INI file of flag values; command-line flags override");
  app.require_subcommand(1);
  app.set_version_flag("--version", advdet_version());

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Seed for detector builds and generated data")
        ->capture_default_str();
    sub->add_option("--model-dir", common.model_dir,
                    "Weight cache directory (default: $ADVDET_MODEL_DIR)");
  };

  AttackArgs a;
  auto* attack = app.add_subcommand("attack", "Generate adversarial images");
  add_common(attack);
  attack->add_option("--adapter", a.adapter, "Detector to attack (name or name:seed)")
      ->capture_default_str();
  auto* image_opt = attack->add_option("--image", a.image, "Single input image");
  auto* dataset_opt = attack->add_option(
      "--dataset", a.dataset,
      "COCO annotation file, VOC XML directory, or 'synthetic' for generated scenes");
  image_opt->excludes(dataset_opt);
  attack->add_option("--images", a.images, "Image root for --dataset");
  attack->add_option("--count", a.count, "Scenes for --dataset synthetic")->capture_default_str();
  attack->add_option("--output", a.output, "Output root")->capture_default_str();
  attack->add_option("--step", a.step, "Step size lambda")->default_str("0.01");
  attack->add_option("--max-iter", a.max_iter, "Iteration budget N")->default_str("500");
  attack->add_option("--conf", a.conf, "Confidence threshold T")->default_str("0.50");
  attack->add_option("--target-distortion", a.target_distortion,
                     "Stop once distortion reaches S (with --target-success, first to fire wins)");
  attack->add_option("--target-success", a.target_success,
                     "Stop once per-image success reaches R");
  attack->add_option("--mask", a.mask, "Mask mode")
      ->check(CLI::IsMember({"binary", "additive"}))
      ->capture_default_str();
  attack->add_option("--norm", a.norm, "Gradient normalization")
      ->check(CLI::IsMember({"max-abs", "sign", "raw"}))
      ->capture_default_str();
  attack->add_option("--iou-match", a.iou_match, "IoU for per-image success matching")
      ->capture_default_str();
  attack->add_option("--workers", a.workers, "Batch worker threads")->capture_default_str();
  attack->add_flag("--resume", a.resume, "Keep finished rows of an existing manifest");
  attack->add_flag("--no-traces", a.no_traces, "Do not write per-image loss traces");
  attack->add_flag("--annotation-targets", a.annotation_targets,
                   "Attack dataset annotations instead of clean detections");
  attack->add_option("--sweep-distortion", a.sweep_distortion,
                     "Ascending S values; writes sweep.tsv and the rate_vs_distortion series")
      ->delimiter(',');
  attack->add_option("--sweep-conf", a.sweep_conf,
                     "T values; writes confidence.tsv and the conf_vs_distortion series")
      ->delimiter(',');

  EvaluateArgs e;
  auto* evaluate = app.add_subcommand("evaluate", "Cross-model transferability matrix");
  add_common(evaluate);
  evaluate->add_option("--manifest", e.manifests, "Manifest file or batch output directory");
  evaluate->add_option("--label", e.labels, "Row label per --manifest");
  evaluate->add_option("--target", e.targets, "Detector to evaluate (name or name:seed)")
      ->required();
  evaluate->add_option("--dataset", e.dataset, "Ground truth: COCO file or VOC XML directory")
      ->required();
  evaluate->add_option("--images", e.images, "Clean image root")->required();
  evaluate->add_flag("--include-clean", e.include_clean, "Add a row evaluated on clean images");
  evaluate->add_option("--conf", e.conf, "Confidence threshold")->default_str("0.50");
  evaluate->add_option("--iou", e.iou, "IoU thresholds: voc (0.5), coco (0.5:0.95) or auto")
      ->check(CLI::IsMember({"auto", "voc", "coco"}))
      ->capture_default_str();
  evaluate->add_flag("--include-difficult", e.include_difficult, "Score difficult boxes");
  evaluate->add_option("--output", e.output, "Output directory")->capture_default_str();

  PlotArgs p;
  auto* plot = app.add_subcommand("plot", "Emit a figure series from traces or sweep tables");
  plot->add_option("--figure", p.figure,
                   "loss_convergence, rate_vs_distortion or conf_vs_distortion")
      ->required();
  plot->add_option("--input", p.inputs, "Trace file, sweep tables, or confidence table")->required();
  plot->add_option("--output", p.output, "Series file")->required();
  plot->add_option("--svg", p.svg, "Optional SVG line chart");

  auto* detectors = app.add_subcommand("detectors", "List registered detectors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (attack->parsed()) {
      if (a.image.empty() && a.dataset.empty()) {
        throw Failure(ADVDET_ERR_CONFIGURATION, "exactly one of --image or --dataset is required");
      }
      cmd_attack(*attack, a, common);
    } else if (evaluate->parsed()) {
      cmd_evaluate(*evaluate, e, common);
    } else if (plot->parsed()) {
      cmd_plot(p);
    } else if (detectors->parsed()) {
      std::printf("%s\n", advdet_available_detectors());
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.what());
    return exit_code(f.status);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kExitRuntime;
  }
  return 0;
}
