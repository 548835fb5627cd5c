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

#include "advdet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "advdet/image_io.hpp"
#include "advdet/metrics.hpp"
#include "json.hpp"

namespace advdet {

using nlohmann::json;

namespace {

constexpr const char* kManifestSchema = "advdet.manifest";
constexpr const char* kMatrixSchema = "advdet.matrix";
constexpr int kMatrixVersion = 1;

std::ofstream open_out(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write '" + file.string() + "'");
  return out;
}

json config_to_json(const AttackConfig& c) {
  json j;
  j["step_size"] = c.step_size;
  j["max_iterations"] = c.max_iterations;
  j["target_distortion"] = c.target_distortion ? json(*c.target_distortion) : json(nullptr);
  j["target_success_rate"] = c.target_success_rate ? json(*c.target_success_rate) : json(nullptr);
  j["confidence_threshold"] = c.confidence_threshold;
  j["mask_mode"] = to_string(c.mask_mode);
  j["gradient_normalization"] = to_string(c.gradient_normalization);
  j["iou_match"] = c.iou_match;
  return j;
}

AttackConfig config_from_json(const json& j) {
  AttackConfig c;
  c.step_size = j.at("step_size").get<double>();
  c.max_iterations = j.at("max_iterations").get<int>();
  if (!j.at("target_distortion").is_null()) c.target_distortion = j["target_distortion"].get<double>();
  if (!j.at("target_success_rate").is_null()) {
    c.target_success_rate = j["target_success_rate"].get<double>();
  }
  c.confidence_threshold = j.at("confidence_threshold").get<double>();
  c.mask_mode = parse_mask_mode(j.at("mask_mode").get<std::string>());
  c.gradient_normalization = parse_gradient_normalization(j.at("gradient_normalization").get<std::string>());
  c.iou_match = j.at("iou_match").get<double>();
  return c;
}

json row_to_json(const ManifestRow& r) {
  json j;
  j["image_id"] = r.image_id;
  j["source"] = r.source_path;
  j["adversarial"] = r.adversarial_path;
  j["status"] = r.status;
  if (!r.error.empty()) j["error"] = r.error;
  j["stop_reason"] = to_string(r.stop_reason);
  j["iterations"] = r.iterations;
  j["distortion"] = r.distortion;
  j["success"] = r.success ? json(*r.success) : json(nullptr);
  j["initial_detections"] = r.initial_detections;
  j["final_detections"] = r.final_detections;
  return j;
}

ManifestRow row_from_json(const json& j) {
  ManifestRow r;
  r.image_id = j.at("image_id").get<std::string>();
  r.source_path = j.at("source").get<std::string>();
  r.adversarial_path = j.at("adversarial").get<std::string>();
  r.status = j.at("status").get<std::string>();
  if (auto it = j.find("error"); it != j.end()) r.error = it->get<std::string>();
  r.stop_reason = parse_stop_reason(j.at("stop_reason").get<std::string>());
  r.iterations = j.at("iterations").get<int>();
  r.distortion = j.at("distortion").get<double>();
  if (!j.at("success").is_null()) r.success = j["success"].get<double>();
  r.initial_detections = j.at("initial_detections").get<int>();
  r.final_detections = j.at("final_detections").get<int>();
  return r;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void write_tsv_row(std::ostream& os, const ManifestRow& r) {
  os << r.image_id << '\t' << r.status << '\t' << to_string(r.stop_reason) << '\t' << r.iterations
     << '\t' << fmt(r.distortion) << '\t' << (r.success ? fmt(*r.success) : std::string("NA"))
     << '\t' << r.initial_detections << '\t' << r.final_detections << '\t' << r.adversarial_path
     << '\n';
}

std::filesystem::path adversarial_relpath(const DatasetIndex& dataset, const DatasetEntry& entry) {
  std::filesystem::path rel;
  if (!dataset.image_root.empty()) {
    rel = entry.image_path.lexically_relative(dataset.image_root);
  }
  if (rel.empty() || *rel.begin() == "..") rel = entry.image_path.filename();
  rel.replace_extension(".png");
  return std::filesystem::path("images") / rel;
}

std::optional<PseudoLabelSet> annotation_targets(const DatasetIndex& dataset,
                                                 const DatasetEntry& entry,
                                                 const DetectorAdapter& adapter) {
  const auto aliases = dataset.kind == DatasetKind::voc2012_val ? voc_to_coco_label_map()
                                                                : std::map<std::string, std::string>{};
  const auto mapping = map_labels(dataset.class_names, adapter.class_vocabulary(), aliases);
  std::vector<BoundingBox> boxes;
  std::vector<int> classes;
  for (const auto& b : entry.annotation.boxes) {
    const int t = mapping.to_target[static_cast<std::size_t>(b.class_id)];
    if (t < 0) continue;
    boxes.push_back(b.box);
    classes.push_back(t);
  }
  if (boxes.empty()) {
    throw Error(Errc::precondition, "no annotated object maps into the detector vocabulary");
  }
  return PseudoLabelSet(std::move(boxes), std::move(classes));
}

ManifestRow attack_one(DetectorAdapter& adapter, const DatasetIndex& dataset,
                       const DatasetEntry& entry, const AttackConfig& config,
                       const BatchOptions& options) {
  ManifestRow row;
  row.image_id = entry.annotation.image_id;
  row.source_path = entry.image_path.string();
  try {
    const auto clean = read_image(entry.image_path);
    std::optional<PseudoLabelSet> targets;
    if (options.annotation_targets) targets = annotation_targets(dataset, entry, adapter);
    const auto result = generate_adversarial(adapter, clean, config, targets);
    row.stop_reason = result.stop_reason;
    row.iterations = result.iterations_run;
    row.initial_detections = static_cast<int>(result.initial_detections.size());

    const auto rel = adversarial_relpath(dataset, entry);
    write_image(result.adversarial_image, options.output_root / rel);
    row.adversarial_path = rel.generic_string();
    // Everything reported is re-measured on what was actually stored.
    const auto stored = read_image(options.output_root / rel);
    const auto after = detect(adapter, stored, config.confidence_threshold);
    row.final_detections = static_cast<int>(after.size());
    // Unattacked images are stored unchanged; D(I, I) = 0 even for flat images.
    if (!result.initial_detections.empty()) {
      row.distortion = distortion(clean, stored);
      row.success = per_image_success(result.initial_detections, after, config.iou_match);
    }
    if (options.write_traces && !result.trace.empty()) {
      auto trace_rel = std::filesystem::path("traces") / rel.lexically_relative("images");
      trace_rel.replace_extension(".tsv");
      write_trace(result.trace, options.output_root / trace_rel);
    }
  } catch (const std::exception& e) {
    row.status = "error";
    row.error = e.what();
  }
  return row;
}

}  // namespace

std::optional<double> BatchManifest::mean_success() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.status == "ok" && r.success) {
      sum += *r.success;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

BatchManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open manifest '" + path.string() + "'");
  BatchManifest m;
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      if (!header) {
        if (j.value("schema", "") != kManifestSchema) {
          throw Error(Errc::parse, "not an advdet manifest");
        }
        if (j.value("version", 0) != BatchManifest::kSchemaVersion) {
          throw Error(Errc::parse, "unsupported manifest version " + std::to_string(j.value("version", 0)));
        }
        m.detector = j.at("detector").get<std::string>();
        m.config = config_from_json(j.at("config"));
        header = true;
      } else {
        m.rows.push_back(row_from_json(j));
      }
    } catch (const Error& e) {
      throw Error(Errc::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(Errc::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header) throw Error(Errc::parse, path.string() + ": empty manifest");
  return m;
}

BatchManifest run_attack_batch(const DetectorAdapter& prototype, const DatasetIndex& dataset,
                               const AttackConfig& config, const BatchOptions& options) {
  config.validate();
  if (dataset.entries.empty()) throw Error(Errc::precondition, "run_attack_batch: empty dataset");
  if (options.output_root.empty()) {
    throw Error(Errc::invalid_argument, "run_attack_batch: output root not set");
  }
  if (options.workers < 1) throw Error(Errc::invalid_argument, "run_attack_batch: workers must be >= 1");

  const auto manifest_path = options.output_root / "manifest.jsonl";
  std::map<std::string, ManifestRow> done;
  if (options.resume && std::filesystem::exists(manifest_path)) {
    for (auto& r : read_manifest(manifest_path).rows) {
      if (r.status == "ok" && !r.adversarial_path.empty() &&
          std::filesystem::exists(options.output_root / r.adversarial_path)) {
        done.emplace(r.image_id, std::move(r));
      } else if (r.status == "ok" && r.adversarial_path.empty()) {
        done.emplace(r.image_id, std::move(r));
      }
    }
  }

  BatchManifest manifest;
  manifest.detector = prototype.name();
  manifest.config = config;
  const std::size_t n = dataset.entries.size();
  std::vector<std::optional<ManifestRow>> slots(n);
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < n; ++i) {
    auto it = done.find(dataset.entries[i].annotation.image_id);
    if (it != done.end()) {
      slots[i] = it->second;
    } else {
      todo.push_back(i);
    }
  }

  auto jsonl = open_out(manifest_path);
  auto tsv = open_out(options.output_root / "manifest.tsv");
  json header;
  header["schema"] = kManifestSchema;
  header["version"] = BatchManifest::kSchemaVersion;
  header["detector"] = manifest.detector;
  header["config"] = config_to_json(config);
  jsonl << header.dump() << '\n';
  tsv << "image_id\tstatus\tstop_reason\titerations\tdistortion\tsuccess\tinitial_detections\t"
         "final_detections\tadversarial\n";

  std::mutex mutex;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  const int worker_count = static_cast<int>(std::min<std::size_t>(options.workers, std::max<std::size_t>(todo.size(), 1)));
  std::vector<std::unique_ptr<DetectorAdapter>> adapters;
  for (int w = 0; w < worker_count; ++w) adapters.push_back(prototype.clone());

  std::vector<std::thread> threads;
  for (int w = 0; w < worker_count; ++w) {
    threads.emplace_back([&, w] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= todo.size()) break;
        const std::size_t i = todo[k];
        auto row = attack_one(*adapters[w], dataset, dataset.entries[i], config, options);
        {
          std::lock_guard<std::mutex> lock(mutex);
          slots[i] = std::move(row);
        }
        ready.notify_one();
      }
    });
  }

  // Single writer: rows go out in dataset order as soon as they are known.
  for (std::size_t i = 0; i < n; ++i) {
    std::unique_lock<std::mutex> lock(mutex);
    ready.wait(lock, [&] { return slots[i].has_value(); });
    ManifestRow row = *slots[i];
    lock.unlock();
    jsonl << row_to_json(row).dump() << '\n';
    jsonl.flush();
    write_tsv_row(tsv, row);
    manifest.rows.push_back(std::move(row));
  }
  for (auto& t : threads) t.join();
  if (!jsonl || !tsv) throw Error(Errc::io, "failed writing manifest under '" + options.output_root.string() + "'");
  return manifest;
}

// --- cross-model evaluation -------------------------------------------------

double TransferabilityMatrix::success_rate(std::size_t source, std::size_t target) const {
  return success_rate_from_map(baseline.at(target), cells.at(source).at(target));
}

TransferabilityMatrix evaluate_cross_model(std::span<const BatchManifest> sources,
                                           std::span<const EvaluationTarget> targets,
                                           const DatasetIndex& ground_truth,
                                           const EvaluationOptions& options,
                                           const std::filesystem::path& manifest_root,
                                           std::span<const std::string> source_labels) {
  if (targets.empty()) throw Error(Errc::invalid_argument, "evaluate_cross_model: no target detectors");
  if (!source_labels.empty() && source_labels.size() != sources.size()) {
    throw Error(Errc::invalid_argument, "evaluate_cross_model: one label per source required");
  }
  const auto thresholds = !options.iou_thresholds.empty() ? options.iou_thresholds
                          : ground_truth.kind == DatasetKind::voc2012_val ? voc_iou_thresholds()
                                                                          : coco_iou_thresholds();
  const auto aliases = ground_truth.kind == DatasetKind::voc2012_val
                           ? voc_to_coco_label_map()
                           : std::map<std::string, std::string>{};

  TransferabilityMatrix m;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    m.sources.push_back(source_labels.empty() ? sources[s].detector : source_labels[s]);
  }
  for (const auto& t : targets) {
    if (t.adapter == nullptr) throw Error(Errc::invalid_argument, "evaluate_cross_model: null adapter");
    m.targets.push_back(t.label.empty() ? t.adapter->name() : t.label);
  }
  m.cells.assign(sources.size(), std::vector<double>(targets.size(), 0.0));
  m.missing.assign(sources.size(), std::vector<int>(targets.size(), 0));

  std::map<std::string, std::size_t> entry_of;
  for (std::size_t i = 0; i < ground_truth.entries.size(); ++i) {
    entry_of[ground_truth.entries[i].annotation.image_id] = i;
  }

  for (std::size_t t = 0; t < targets.size(); ++t) {
    DetectorAdapter& adapter = *targets[t].adapter;
    const auto mapping = map_labels(ground_truth.class_names, adapter.class_vocabulary(), aliases);
    const auto mapped = remap_classes(ground_truth, mapping, adapter.class_vocabulary());
    for (const auto& w : mapped.warnings) {
      if (std::find(ground_truth.warnings.begin(), ground_truth.warnings.end(), w) ==
          ground_truth.warnings.end()) {
        m.warnings.push_back(m.targets[t] + ": " + w);
      }
    }

    auto score = [&](const std::vector<std::size_t>& entries,
                     const std::vector<ImageBuffer>& images) {
      std::vector<DetectionSet> preds;
      std::vector<ImageAnnotation> gts;
      for (std::size_t k = 0; k < entries.size(); ++k) {
        preds.push_back(detect(adapter, images[k], options.threshold));
        gts.push_back(mapped.entries[entries[k]].annotation);
      }
      return compute_map(preds, gts, thresholds, options.include_difficult).map_value;
    };

    std::vector<std::size_t> all(ground_truth.entries.size());
    std::vector<ImageBuffer> clean;
    for (std::size_t i = 0; i < all.size(); ++i) {
      all[i] = i;
      clean.push_back(read_image(ground_truth.entries[i].image_path));
    }
    m.baseline.push_back(score(all, clean));

    for (std::size_t s = 0; s < sources.size(); ++s) {
      std::vector<std::size_t> used;
      std::vector<ImageBuffer> adv;
      int missing = 0;
      std::set<std::size_t> seen;
      for (const auto& row : sources[s].rows) {
        auto it = entry_of.find(row.image_id);
        if (it == entry_of.end()) continue;
        seen.insert(it->second);
        if (row.status != "ok" || row.adversarial_path.empty()) {
          ++missing;
          continue;
        }
        const auto file = manifest_root / row.adversarial_path;
        std::error_code ec;
        if (!std::filesystem::is_regular_file(file, ec)) {
          ++missing;
          continue;
        }
        used.push_back(it->second);
        adv.push_back(read_image(file));
      }
      missing += static_cast<int>(ground_truth.entries.size() - seen.size());
      m.missing[s][t] = missing;
      if (missing > 0) {
        m.warnings.push_back(m.sources[s] + " -> " + m.targets[t] + ": " + std::to_string(missing) +
                             " adversarial image(s) missing; excluded from the cell");
      }
      m.cells[s][t] = used.empty() ? 0.0 : score(used, adv);
    }
  }
  return m;
}

void write_matrix(const TransferabilityMatrix& m, const std::filesystem::path& dir) {
  auto tsv = open_out(dir / "matrix.tsv");
  tsv << "source";
  for (const auto& t : m.targets) tsv << '\t' << t;
  tsv << '\n' << "baseline";
  for (double b : m.baseline) tsv << '\t' << fmt(b);
  tsv << '\n';
  for (std::size_t s = 0; s < m.sources.size(); ++s) {
    tsv << m.sources[s];
    for (double c : m.cells[s]) tsv << '\t' << fmt(c);
    tsv << '\n';
  }

  auto jsonl = open_out(dir / "matrix.jsonl");
  json header;
  header["schema"] = kMatrixSchema;
  header["version"] = kMatrixVersion;
  header["sources"] = m.sources;
  header["targets"] = m.targets;
  header["warnings"] = m.warnings;
  jsonl << header.dump() << '\n';
  for (std::size_t t = 0; t < m.targets.size(); ++t) {
    jsonl << json{{"source", nullptr}, {"target", m.targets[t]}, {"map", m.baseline[t]}}.dump() << '\n';
  }
  for (std::size_t s = 0; s < m.sources.size(); ++s) {
    for (std::size_t t = 0; t < m.targets.size(); ++t) {
      jsonl << json{{"source", m.sources[s]},
                    {"target", m.targets[t]},
                    {"map", m.cells[s][t]},
                    {"success_rate", m.baseline[t] > 0 ? json(m.success_rate(s, t)) : json(nullptr)},
                    {"missing", m.missing[s][t]}}
                   .dump()
            << '\n';
    }
  }
}

// --- figure series ----------------------------------------------------------

const char* to_string(FigureId id) noexcept {
  switch (id) {
    case FigureId::loss_convergence: return "loss_convergence";
    case FigureId::rate_vs_distortion: return "rate_vs_distortion";
    case FigureId::conf_vs_distortion: return "conf_vs_distortion";
  }
  return "loss_convergence";
}

FigureId parse_figure_id(const std::string& text) {
  for (auto id : {FigureId::loss_convergence, FigureId::rate_vs_distortion, FigureId::conf_vs_distortion}) {
    if (text == to_string(id)) return id;
  }
  throw Error(Errc::invalid_argument, "unknown figure '" + text +
                                          "'; valid: loss_convergence, rate_vs_distortion, "
                                          "conf_vs_distortion");
}

std::vector<ConfidencePoint> confidence_sweep(DetectorAdapter& adapter,
                                              std::span<const ImageBuffer> images,
                                              const AttackConfig& base,
                                              std::span<const double> thresholds) {
  std::vector<ConfidencePoint> out;
  for (double t : thresholds) {
    AttackConfig config = base;
    config.confidence_threshold = t;
    ConfidencePoint p;
    p.threshold = t;
    double sum = 0.0;
    for (const auto& image : images) {
      const auto r = generate_adversarial(adapter, image, config);
      if (r.initial_detections.empty()) continue;
      sum += distortion(image, r.adversarial_image);
      ++p.images;
    }
    p.mean_distortion = p.images > 0 ? sum / p.images : 0.0;
    out.push_back(p);
  }
  return out;
}

FigureSeries loss_convergence_series(std::span<const TraceEntry> trace) {
  if (trace.empty()) throw Error(Errc::precondition, "loss_convergence: empty trace");
  FigureSeries s{FigureId::loss_convergence, "iteration", "loss", {}};
  for (std::size_t i = 0; i < trace.size(); ++i) {
    s.points.emplace_back(static_cast<double>(i + 1), trace[i].loss.total);
  }
  return s;
}

FigureSeries rate_vs_distortion_series(std::span<const std::vector<SweepPoint>> sweeps) {
  std::map<double, std::pair<double, int>> acc;
  for (const auto& sweep : sweeps) {
    for (const auto& p : sweep) {
      if (p.skipped) continue;
      auto& a = acc[p.target_distortion];
      a.first += p.success;
      ++a.second;
    }
  }
  if (acc.empty()) throw Error(Errc::precondition, "rate_vs_distortion: no usable sweep points");
  FigureSeries s{FigureId::rate_vs_distortion, "S", "success", {}};
  for (const auto& [sv, a] : acc) s.points.emplace_back(sv, a.first / a.second);
  return s;
}

FigureSeries conf_vs_distortion_series(std::span<const ConfidencePoint> points) {
  FigureSeries s{FigureId::conf_vs_distortion, "T", "mean_distortion", {}};
  for (const auto& p : points) {
    if (p.images > 0) s.points.emplace_back(p.threshold, p.mean_distortion);
  }
  if (s.points.empty()) throw Error(Errc::precondition, "conf_vs_distortion: no usable points");
  std::sort(s.points.begin(), s.points.end());
  return s;
}

namespace {

void write_svg(const FigureSeries& series, const std::filesystem::path& file) {
  constexpr double kW = 480, kH = 320, kPad = 48;
  double x0 = series.points.front().first, x1 = x0;
  double y0 = series.points.front().second, y1 = y0;
  for (const auto& [x, y] : series.points) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return kPad + (x - x0) / (x1 - x0) * (kW - 2 * kPad); };
  auto py = [&](double y) { return kH - kPad - (y - y0) / (y1 - y0) * (kH - 2 * kPad); };
  auto out = open_out(file);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad << "\" y2=\""
      << kH - kPad << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const auto& [x, y] : series.points) out << px(x) << ',' << py(y) << ' ';
  out << "\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">"
      << series.x_label << " [" << fmt(x0) << ", " << fmt(x1) << "]</text>\n";
  out << "<text x=\"12\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 12 " << kH / 2
      << ")\" text-anchor=\"middle\">" << series.y_label << " [" << fmt(y0) << ", " << fmt(y1)
      << "]</text>\n</svg>\n";
}

}  // namespace

void write_series(const FigureSeries& series, const std::filesystem::path& file,
                  const std::filesystem::path& plot) {
  if (series.points.empty()) throw Error(Errc::precondition, "write_series: empty series");
  auto out = open_out(file);
  out << "# " << to_string(series.id) << '\n' << series.x_label << '\t' << series.y_label << '\n';
  for (const auto& [x, y] : series.points) out << fmt(x) << '\t' << fmt(y) << '\n';
  if (!plot.empty()) write_svg(series, plot);
}

FigureSeries read_series(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::io, "cannot open series '" + file.string() + "'");
  FigureSeries s;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw Error(Errc::parse, file.string() + ":1: missing figure id line");
  }
  s.id = parse_figure_id(line.substr(2));
  if (!std::getline(in, line)) throw Error(Errc::parse, file.string() + ":2: missing header");
  const auto tab = line.find('\t');
  s.x_label = line.substr(0, tab);
  s.y_label = tab == std::string::npos ? "" : line.substr(tab + 1);
  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    double x = 0;
    double y = 0;
    if (!(row >> x >> y)) throw Error(Errc::parse, file.string() + ":" + std::to_string(line_no) + ": bad row");
    s.points.emplace_back(x, y);
  }
  return s;
}

void write_trace(std::span<const TraceEntry> trace, const std::filesystem::path& file) {
  auto out = open_out(file);
  out << "iteration\tloss\tloc\tobj\tcls\tdistortion\tdetections\tsuccess\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& t = trace[i];
    out << i + 1 << '\t' << fmt(t.loss.total) << '\t' << fmt(t.loss.loc) << '\t' << fmt(t.loss.obj)
        << '\t' << fmt(t.loss.cls) << '\t' << fmt(t.distortion) << '\t' << t.detection_count << '\t'
        << fmt(t.success) << '\n';
  }
}

std::vector<TraceEntry> read_trace(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::io, "cannot open trace '" + file.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<TraceEntry> trace;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    int iteration = 0;
    TraceEntry t;
    if (!(row >> iteration >> t.loss.total >> t.loss.loc >> t.loss.obj >> t.loss.cls >> t.distortion >>
          t.detection_count >> t.success)) {
      throw Error(Errc::parse, file.string() + ":" + std::to_string(line_no) + ": bad trace row");
    }
    trace.push_back(t);
  }
  return trace;
}

void write_sweep_table(std::span<const ImageSweep> sweeps, const std::filesystem::path& file) {
  auto out = open_out(file);
  out << "image_id\tS\tskipped\tdistortion\tsuccess\titerations\tstop_reason\n";
  for (const auto& sweep : sweeps) {
    for (const auto& p : sweep.points) {
      out << sweep.image_id << '\t' << fmt(p.target_distortion) << '\t' << (p.skipped ? 1 : 0) << '\t'
          << fmt(p.achieved_distortion) << '\t' << fmt(p.success) << '\t' << p.iterations << '\t'
          << to_string(p.stop_reason) << '\n';
    }
  }
}

std::vector<ImageSweep> read_sweep_table(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::io, "cannot open sweep table '" + file.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<ImageSweep> sweeps;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id;
    std::string stop;
    int skipped = 0;
    SweepPoint p;
    if (!std::getline(row, id, '\t') ||
        !(row >> p.target_distortion >> skipped >> p.achieved_distortion >> p.success >> p.iterations >>
          stop)) {
      throw Error(Errc::parse, file.string() + ":" + std::to_string(line_no) + ": bad sweep row");
    }
    p.skipped = skipped != 0;
    p.stop_reason = parse_stop_reason(stop);
    if (sweeps.empty() || sweeps.back().image_id != id) sweeps.push_back({id, {}});
    sweeps.back().points.push_back(p);
  }
  return sweeps;
}

void write_confidence_table(std::span<const ConfidencePoint> points,
                            const std::filesystem::path& file) {
  auto out = open_out(file);
  out << "T\tmean_distortion\timages\n";
  for (const auto& p : points) {
    out << fmt(p.threshold) << '\t' << fmt(p.mean_distortion) << '\t' << p.images << '\n';
  }
}

std::vector<ConfidencePoint> read_confidence_table(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::io, "cannot open confidence table '" + file.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<ConfidencePoint> points;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    ConfidencePoint p;
    if (!(row >> p.threshold >> p.mean_distortion >> p.images)) {
      throw Error(Errc::parse, file.string() + ":" + std::to_string(line_no) + ": bad row");
    }
    points.push_back(p);
  }
  return points;
}

}  // namespace advdet
