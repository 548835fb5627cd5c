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

#include "advdet/advdet.h"

#include <cmath>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "advdet/attack.hpp"
#include "advdet/dataset.hpp"
#include "advdet/harness.hpp"
#include "advdet/image_io.hpp"
#include "advdet/metrics.hpp"

using namespace advdet;

struct advdet_detector {
  std::unique_ptr<DetectorAdapter> adapter;
  std::string name;
};

struct advdet_image {
  ImageBuffer image;
};

struct advdet_result {
  AttackResult result;
  advdet_image image;
  double distortion = 0.0;
  double success = std::numeric_limits<double>::quiet_NaN();
};

struct advdet_dataset {
  DatasetIndex index;
  std::vector<std::string> paths;
};

struct advdet_manifest {
  BatchManifest manifest;
  /// Directory the rows' adversarial paths are relative to.
  std::filesystem::path root;
};

struct advdet_matrix {
  TransferabilityMatrix matrix;
};

namespace {

thread_local std::string g_last_error;

advdet_status status_of(Errc code) { return static_cast<advdet_status>(static_cast<int>(code) + 1); }

template <typename F>
advdet_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return ADVDET_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return ADVDET_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ADVDET_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return ADVDET_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(Errc::invalid_argument, what);
}

AttackConfig to_config(const advdet_attack_config* c) {
  require(c != nullptr, "attack config is NULL");
  AttackConfig config;
  config.step_size = c->step_size;
  config.max_iterations = c->max_iterations;
  if (c->has_target_distortion) config.target_distortion = c->target_distortion;
  if (c->has_target_success_rate) config.target_success_rate = c->target_success_rate;
  config.confidence_threshold = c->confidence_threshold;
  switch (c->mask_mode) {
    case ADVDET_MASK_BINARY: config.mask_mode = MaskMode::binary; break;
    case ADVDET_MASK_ADDITIVE: config.mask_mode = MaskMode::additive; break;
    default: throw Error(Errc::invalid_argument, "unknown mask mode");
  }
  switch (c->normalization) {
    case ADVDET_NORM_MAX_ABS: config.gradient_normalization = GradientNormalization::max_abs; break;
    case ADVDET_NORM_SIGN: config.gradient_normalization = GradientNormalization::sign; break;
    case ADVDET_NORM_RAW: config.gradient_normalization = GradientNormalization::raw; break;
    default: throw Error(Errc::invalid_argument, "unknown gradient normalization");
  }
  config.iou_match = c->iou_match;
  config.validate();
  return config;
}

advdet_stop_reason to_c(StopReason r) { return static_cast<advdet_stop_reason>(static_cast<int>(r)); }

advdet_sweep_point to_c(const SweepPoint& p) {
  return {p.target_distortion, p.skipped ? 1 : 0, p.achieved_distortion, p.success, p.iterations,
          to_c(p.stop_reason)};
}

SweepPoint from_c(const advdet_sweep_point& p) {
  SweepPoint s;
  s.target_distortion = p.target_distortion;
  s.skipped = p.skipped != 0;
  s.achieved_distortion = p.achieved_distortion;
  s.success = p.success;
  s.iterations = p.iterations;
  s.stop_reason = static_cast<StopReason>(p.stop_reason);
  return s;
}

}  // namespace

extern "C" {

const char* advdet_version(void) { return "1.0.0"; }

const char* advdet_last_error(void) { return g_last_error.c_str(); }

const char* advdet_status_string(advdet_status status) {
  if (status == ADVDET_OK) return "ok";
  if (status == ADVDET_ERR_INTERNAL) return "internal";
  if (status < ADVDET_OK || status > ADVDET_ERR_INTERNAL) return "unknown";
  return to_string(static_cast<Errc>(static_cast<int>(status) - 1));
}

const char* advdet_stop_reason_string(advdet_stop_reason reason) {
  if (reason < ADVDET_STOP_NO_DETECTIONS || reason > ADVDET_STOP_MAX_ITERATIONS) return "unknown";
  return to_string(static_cast<StopReason>(reason));
}

// --- detectors ---------------------------------------------------------------

const char* advdet_available_detectors(void) {
  thread_local std::string names;
  names.clear();
  for (const auto& n : available_detectors()) {
    if (!names.empty()) names += ' ';
    names += n;
  }
  return names.c_str();
}

advdet_status advdet_detector_create(const char* name, uint64_t seed, const char* model_dir,
                                     advdet_detector** out) {
  return guarded([&] {
    require(name != nullptr && out != nullptr, "detector name and output must not be NULL");
    AdapterOptions options;
    options.seed = seed;
    if (model_dir != nullptr) options.model_dir = model_dir;
    auto adapter = create_detector(name, options);
    auto d = std::make_unique<advdet_detector>();
    d->name = adapter->name();
    d->adapter = std::move(adapter);
    *out = d.release();
  });
}

void advdet_detector_free(advdet_detector* detector) { delete detector; }

const char* advdet_detector_name(const advdet_detector* detector) {
  return detector != nullptr ? detector->name.c_str() : "";
}

advdet_status advdet_detect(advdet_detector* detector, const advdet_image* image, double threshold,
                            advdet_detection* out, size_t capacity, size_t* count) {
  return guarded([&] {
    require(detector != nullptr && image != nullptr && count != nullptr,
            "detector, image and count must not be NULL");
    require(capacity == 0 || out != nullptr, "output array is NULL");
    const auto dets = detect(*detector->adapter, image->image, threshold);
    *count = dets.size();
    std::size_t i = 0;
    for (const auto& d : dets) {
      if (i == capacity) break;
      out[i++] = {d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max, d.class_id, d.confidence};
    }
  });
}

// --- images ------------------------------------------------------------------

advdet_status advdet_image_create(int height, int width, const double* chw, advdet_image** out) {
  return guarded([&] {
    require(chw != nullptr && out != nullptr, "pixel data and output must not be NULL");
    require(height > 0 && width > 0, "image dimensions must be positive");
    const std::size_t n = static_cast<std::size_t>(height) * width * ImageBuffer::kChannels;
    *out = new advdet_image{ImageBuffer(height, width, std::vector<double>(chw, chw + n))};
  });
}

advdet_status advdet_image_read(const char* path, advdet_image** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and output must not be NULL");
    *out = new advdet_image{read_image(path)};
  });
}

advdet_status advdet_image_write(const advdet_image* image, const char* path) {
  return guarded([&] {
    require(image != nullptr && path != nullptr, "image and path must not be NULL");
    write_image(image->image, path);
  });
}

void advdet_image_free(advdet_image* image) { delete image; }
int advdet_image_height(const advdet_image* image) { return image ? image->image.height() : 0; }
int advdet_image_width(const advdet_image* image) { return image ? image->image.width() : 0; }
const double* advdet_image_data(const advdet_image* image) {
  return image ? image->image.pixels().data() : nullptr;
}

// --- metrics -----------------------------------------------------------------

advdet_status advdet_ncc(const advdet_image* a, const advdet_image* b, double* out) {
  return guarded([&] {
    require(a != nullptr && b != nullptr && out != nullptr, "arguments must not be NULL");
    *out = compute_ncc(a->image, b->image);
  });
}

advdet_status advdet_distortion(const advdet_image* a, const advdet_image* b, double* out) {
  return guarded([&] {
    require(a != nullptr && b != nullptr && out != nullptr, "arguments must not be NULL");
    *out = distortion(a->image, b->image);
  });
}

advdet_status advdet_success_rate_from_map(double baseline_map, double adversarial_map,
                                           double* out) {
  return guarded([&] {
    require(out != nullptr, "output must not be NULL");
    *out = success_rate_from_map(baseline_map, adversarial_map);
  });
}

// --- attack ------------------------------------------------------------------

void advdet_attack_config_default(advdet_attack_config* config) {
  if (config == nullptr) return;
  const AttackConfig d;
  *config = {d.step_size, d.max_iterations, 0, 0.0, 0, 0.0, d.confidence_threshold,
             ADVDET_MASK_BINARY, ADVDET_NORM_MAX_ABS, d.iou_match};
}

advdet_status advdet_attack(advdet_detector* detector, const advdet_image* image,
                            const advdet_attack_config* config, advdet_result** out) {
  return guarded([&] {
    require(detector != nullptr && image != nullptr && out != nullptr, "arguments must not be NULL");
    const auto c = to_config(config);
    auto r = std::make_unique<advdet_result>(advdet_result{
        generate_adversarial(*detector->adapter, image->image, c), {image->image}, 0.0,
        std::numeric_limits<double>::quiet_NaN()});
    r->image.image = r->result.adversarial_image;
    if (!r->result.initial_detections.empty()) {
      r->distortion = distortion(image->image, r->image.image);
      const auto after = detect(*detector->adapter, r->image.image, c.confidence_threshold);
      r->success = per_image_success(r->result.initial_detections, after, c.iou_match);
    }
    *out = r.release();
  });
}

void advdet_result_free(advdet_result* result) { delete result; }
const advdet_image* advdet_result_image(const advdet_result* r) { return r ? &r->image : nullptr; }
int advdet_result_iterations(const advdet_result* r) { return r ? r->result.iterations_run : 0; }
advdet_stop_reason advdet_result_stop_reason(const advdet_result* r) {
  return r ? to_c(r->result.stop_reason) : ADVDET_STOP_NO_DETECTIONS;
}
double advdet_result_distortion(const advdet_result* r) { return r ? r->distortion : 0.0; }
double advdet_result_success(const advdet_result* r) {
  return r ? r->success : std::numeric_limits<double>::quiet_NaN();
}
size_t advdet_result_initial_detections(const advdet_result* r) {
  return r ? r->result.initial_detections.size() : 0;
}
size_t advdet_result_trace_length(const advdet_result* r) { return r ? r->result.trace.size() : 0; }

advdet_status advdet_result_trace_loss(const advdet_result* r, size_t index, double* out) {
  return guarded([&] {
    require(r != nullptr && out != nullptr, "arguments must not be NULL");
    require(index < r->result.trace.size(), "trace index out of range");
    *out = r->result.trace[index].loss.total;
  });
}

advdet_status advdet_result_write_trace(const advdet_result* r, const char* path) {
  return guarded([&] {
    require(r != nullptr && path != nullptr, "arguments must not be NULL");
    write_trace(r->result.trace, path);
  });
}

advdet_status advdet_attack_sweep(advdet_detector* detector, const advdet_image* image,
                                  const advdet_attack_config* config, const double* distortions,
                                  size_t count, advdet_sweep_point* out) {
  return guarded([&] {
    require(detector != nullptr && image != nullptr, "detector and image must not be NULL");
    require(count == 0 || (distortions != nullptr && out != nullptr), "arrays must not be NULL");
    const auto points = attack_sweep(*detector->adapter, image->image, to_config(config),
                                     std::span<const double>(distortions, count));
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = to_c(points[i]);
  });
}

advdet_status advdet_confidence_sweep(advdet_detector* detector, const advdet_image* const* images,
                                      size_t image_count, const advdet_attack_config* config,
                                      const double* thresholds, size_t count,
                                      advdet_confidence_point* out) {
  return guarded([&] {
    require(detector != nullptr, "detector must not be NULL");
    require(image_count == 0 || images != nullptr, "image array is NULL");
    require(count == 0 || (thresholds != nullptr && out != nullptr), "arrays must not be NULL");
    std::vector<ImageBuffer> buffers;
    for (std::size_t i = 0; i < image_count; ++i) {
      require(images[i] != nullptr, "image is NULL");
      buffers.push_back(images[i]->image);
    }
    const auto points = confidence_sweep(*detector->adapter, buffers, to_config(config),
                                         std::span<const double>(thresholds, count));
    for (std::size_t i = 0; i < points.size(); ++i) {
      out[i] = {points[i].threshold, points[i].mean_distortion, points[i].images};
    }
  });
}

// --- datasets ----------------------------------------------------------------

namespace {

advdet_dataset* wrap(DatasetIndex index) {
  auto d = std::make_unique<advdet_dataset>();
  for (const auto& e : index.entries) d->paths.push_back(e.image_path.string());
  d->index = std::move(index);
  return d.release();
}

}  // namespace

advdet_status advdet_dataset_load_coco(const char* annotation_file, const char* image_root,
                                       advdet_dataset** out) {
  return guarded([&] {
    require(annotation_file != nullptr && image_root != nullptr && out != nullptr,
            "arguments must not be NULL");
    *out = wrap(load_coco_annotations(annotation_file, image_root));
  });
}

advdet_status advdet_dataset_load_voc(const char* xml_dir, const char* image_root,
                                      advdet_dataset** out) {
  return guarded([&] {
    require(xml_dir != nullptr && image_root != nullptr && out != nullptr,
            "arguments must not be NULL");
    *out = wrap(load_voc_annotations(xml_dir, image_root));
  });
}

advdet_status advdet_dataset_synthetic(const char* root, uint64_t seed, int count,
                                       advdet_dataset** out) {
  return guarded([&] {
    require(root != nullptr && out != nullptr, "arguments must not be NULL");
    require(count > 0, "scene count must be positive");
    *out = wrap(write_synthetic_dataset(root, seed, count));
  });
}

void advdet_dataset_free(advdet_dataset* dataset) { delete dataset; }
size_t advdet_dataset_size(const advdet_dataset* d) { return d ? d->index.entries.size() : 0; }
const char* advdet_dataset_image_path(const advdet_dataset* d, size_t index) {
  return d && index < d->paths.size() ? d->paths[index].c_str() : nullptr;
}
size_t advdet_dataset_warning_count(const advdet_dataset* d) { return d ? d->index.warnings.size() : 0; }
const char* advdet_dataset_warning(const advdet_dataset* d, size_t index) {
  return d && index < d->index.warnings.size() ? d->index.warnings[index].c_str() : nullptr;
}

// --- batch -------------------------------------------------------------------

void advdet_batch_options_default(advdet_batch_options* options) {
  if (options == nullptr) return;
  *options = {nullptr, 1, 0, 1, 0};
}

advdet_status advdet_run_batch(const advdet_detector* prototype, const advdet_dataset* dataset,
                               const advdet_attack_config* config,
                               const advdet_batch_options* options, advdet_manifest** out) {
  return guarded([&] {
    require(prototype != nullptr && dataset != nullptr && options != nullptr && out != nullptr,
            "arguments must not be NULL");
    require(options->output_root != nullptr, "output root must not be NULL");
    BatchOptions b;
    b.output_root = options->output_root;
    b.workers = options->workers;
    b.resume = options->resume != 0;
    b.write_traces = options->write_traces != 0;
    b.annotation_targets = options->annotation_targets != 0;
    auto m = run_attack_batch(*prototype->adapter, dataset->index, to_config(config), b);
    *out = new advdet_manifest{std::move(m), b.output_root};
  });
}

advdet_status advdet_manifest_read(const char* path, advdet_manifest** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "arguments must not be NULL");
    std::filesystem::path file = path;
    if (std::filesystem::is_directory(file)) file /= "manifest.jsonl";
    *out = new advdet_manifest{read_manifest(file), file.parent_path()};
  });
}

advdet_status advdet_manifest_identity(const advdet_dataset* dataset, const char* label,
                                       advdet_manifest** out) {
  return guarded([&] {
    require(dataset != nullptr && out != nullptr, "arguments must not be NULL");
    auto m = std::make_unique<advdet_manifest>();
    m->manifest.detector = label != nullptr ? label : "clean";
    for (const auto& e : dataset->index.entries) {
      ManifestRow row;
      row.image_id = e.annotation.image_id;
      row.source_path = e.image_path.string();
      row.adversarial_path = std::filesystem::absolute(e.image_path).string();
      row.stop_reason = StopReason::no_detections;
      m->manifest.rows.push_back(std::move(row));
    }
    *out = m.release();
  });
}

void advdet_manifest_free(advdet_manifest* manifest) { delete manifest; }
const char* advdet_manifest_detector(const advdet_manifest* m) {
  return m ? m->manifest.detector.c_str() : "";
}
size_t advdet_manifest_size(const advdet_manifest* m) { return m ? m->manifest.rows.size() : 0; }

advdet_status advdet_manifest_row_at(const advdet_manifest* m, size_t index,
                                     advdet_manifest_row* out) {
  return guarded([&] {
    require(m != nullptr && out != nullptr, "arguments must not be NULL");
    require(index < m->manifest.rows.size(), "manifest row out of range");
    const auto& r = m->manifest.rows[index];
    *out = {r.image_id.c_str(),
            r.adversarial_path.c_str(),
            r.status.c_str(),
            r.error.c_str(),
            to_c(r.stop_reason),
            r.iterations,
            r.distortion,
            r.success ? 1 : 0,
            r.success.value_or(0.0),
            r.initial_detections,
            r.final_detections};
  });
}

advdet_status advdet_manifest_mean_success(const advdet_manifest* m, double* out) {
  return guarded([&] {
    require(m != nullptr && out != nullptr, "arguments must not be NULL");
    const auto mean = m->manifest.mean_success();
    if (!mean) throw Error(Errc::undefined_metric, "no row has a defined per-image success");
    *out = *mean;
  });
}

// --- evaluation --------------------------------------------------------------

void advdet_eval_options_default(advdet_eval_options* options) {
  if (options == nullptr) return;
  *options = {0.5, nullptr, 0, 0};
}

advdet_status advdet_evaluate(const advdet_manifest* const* sources,
                              const char* const* source_labels, size_t source_count,
                              advdet_detector* const* targets, const char* const* target_labels,
                              size_t target_count, const advdet_dataset* ground_truth,
                              const advdet_eval_options* options, advdet_matrix** out) {
  return guarded([&] {
    require(ground_truth != nullptr && out != nullptr, "arguments must not be NULL");
    require(source_count == 0 || sources != nullptr, "source array is NULL");
    require(target_count == 0 || targets != nullptr, "target array is NULL");
    // Each manifest may live in its own directory; resolve rows to full paths
    // so one evaluation can mix them.
    std::vector<BatchManifest> resolved;
    std::vector<std::string> labels;
    for (std::size_t s = 0; s < source_count; ++s) {
      require(sources[s] != nullptr, "manifest is NULL");
      BatchManifest m = sources[s]->manifest;
      for (auto& row : m.rows) {
        if (!row.adversarial_path.empty()) {
          row.adversarial_path = (sources[s]->root / row.adversarial_path).string();
        }
      }
      resolved.push_back(std::move(m));
      labels.push_back(source_labels && source_labels[s] ? source_labels[s] : resolved.back().detector);
    }
    std::vector<EvaluationTarget> evaluation_targets;
    for (std::size_t t = 0; t < target_count; ++t) {
      require(targets[t] != nullptr, "target detector is NULL");
      evaluation_targets.push_back(
          {target_labels && target_labels[t] ? target_labels[t] : targets[t]->name,
           targets[t]->adapter.get()});
    }
    EvaluationOptions eval;
    if (options != nullptr) {
      eval.threshold = options->threshold;
      if (options->iou_threshold_count > 0) {
        require(options->iou_thresholds != nullptr, "IoU threshold array is NULL");
        eval.iou_thresholds.assign(options->iou_thresholds,
                                   options->iou_thresholds + options->iou_threshold_count);
      }
      eval.include_difficult = options->include_difficult != 0;
    }
    auto matrix = evaluate_cross_model(resolved, evaluation_targets, ground_truth->index, eval, {},
                                       labels);
    *out = new advdet_matrix{std::move(matrix)};
  });
}

void advdet_matrix_free(advdet_matrix* matrix) { delete matrix; }

advdet_status advdet_matrix_baseline(const advdet_matrix* m, size_t target, double* out) {
  return guarded([&] {
    require(m != nullptr && out != nullptr, "arguments must not be NULL");
    require(target < m->matrix.targets.size(), "target index out of range");
    *out = m->matrix.baseline[target];
  });
}

advdet_status advdet_matrix_cell(const advdet_matrix* m, size_t source, size_t target,
                                 double* out) {
  return guarded([&] {
    require(m != nullptr && out != nullptr, "arguments must not be NULL");
    require(source < m->matrix.sources.size() && target < m->matrix.targets.size(),
            "cell index out of range");
    *out = m->matrix.cells[source][target];
  });
}

advdet_status advdet_matrix_success_rate(const advdet_matrix* m, size_t source, size_t target,
                                         double* out) {
  return guarded([&] {
    require(m != nullptr && out != nullptr, "arguments must not be NULL");
    require(source < m->matrix.sources.size() && target < m->matrix.targets.size(),
            "cell index out of range");
    *out = m->matrix.success_rate(source, target);
  });
}

advdet_status advdet_matrix_missing(const advdet_matrix* m, size_t source, size_t target,
                                    int* out) {
  return guarded([&] {
    require(m != nullptr && out != nullptr, "arguments must not be NULL");
    require(source < m->matrix.sources.size() && target < m->matrix.targets.size(),
            "cell index out of range");
    *out = m->matrix.missing[source][target];
  });
}

size_t advdet_matrix_warning_count(const advdet_matrix* m) { return m ? m->matrix.warnings.size() : 0; }
const char* advdet_matrix_warning(const advdet_matrix* m, size_t index) {
  return m && index < m->matrix.warnings.size() ? m->matrix.warnings[index].c_str() : nullptr;
}

advdet_status advdet_matrix_write(const advdet_matrix* m, const char* dir) {
  return guarded([&] {
    require(m != nullptr && dir != nullptr, "arguments must not be NULL");
    write_matrix(m->matrix, dir);
  });
}

// --- series ------------------------------------------------------------------

advdet_status advdet_write_sweep_table(const char* path, const char* const* image_ids,
                                       const advdet_sweep_point* points, size_t image_count,
                                       size_t point_count) {
  return guarded([&] {
    require(path != nullptr, "path must not be NULL");
    require(image_count == 0 || (image_ids != nullptr && points != nullptr), "arrays must not be NULL");
    std::vector<ImageSweep> sweeps;
    for (std::size_t i = 0; i < image_count; ++i) {
      ImageSweep s{image_ids[i] ? image_ids[i] : "", {}};
      for (std::size_t k = 0; k < point_count; ++k) s.points.push_back(from_c(points[i * point_count + k]));
      sweeps.push_back(std::move(s));
    }
    write_sweep_table(sweeps, path);
  });
}

advdet_status advdet_write_confidence_table(const char* path, const advdet_confidence_point* points,
                                            size_t count) {
  return guarded([&] {
    require(path != nullptr, "path must not be NULL");
    require(count == 0 || points != nullptr, "points must not be NULL");
    std::vector<ConfidencePoint> out;
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back({points[i].threshold, points[i].mean_distortion, points[i].images});
    }
    write_confidence_table(out, path);
  });
}

advdet_status advdet_emit_series(const char* figure, const char* const* inputs, size_t input_count,
                                 const char* series_path, const char* svg_path, size_t* rows) {
  return guarded([&] {
    require(figure != nullptr && series_path != nullptr, "figure and series path must not be NULL");
    const FigureId id = parse_figure_id(figure);
    if (input_count == 0) throw Error(Errc::precondition, "no input files given");
    require(inputs != nullptr, "input array is NULL");
    FigureSeries series;
    switch (id) {
      case FigureId::loss_convergence:
        if (input_count != 1) throw Error(Errc::invalid_argument, "loss_convergence takes one trace");
        series = loss_convergence_series(read_trace(inputs[0]));
        break;
      case FigureId::rate_vs_distortion: {
        std::vector<std::vector<SweepPoint>> sweeps;
        for (std::size_t i = 0; i < input_count; ++i) {
          for (auto& s : read_sweep_table(inputs[i])) sweeps.push_back(std::move(s.points));
        }
        series = rate_vs_distortion_series(sweeps);
        break;
      }
      case FigureId::conf_vs_distortion: {
        std::vector<ConfidencePoint> points;
        for (std::size_t i = 0; i < input_count; ++i) {
          for (const auto& p : read_confidence_table(inputs[i])) points.push_back(p);
        }
        series = conf_vs_distortion_series(points);
        break;
      }
    }
    write_series(series, series_path, svg_path != nullptr ? svg_path : "");
    if (rows != nullptr) *rows = series.points.size();
  });
}

}  // extern "C"
