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

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advdet/attack.hpp"
#include "advdet/dataset.hpp"

namespace advdet {

// --- batch attacks ------------------------------------------------------------

struct BatchOptions {
  std::filesystem::path output_root;
  int workers = 1;
  /// Keep rows of an existing manifest whose image is still on disk and only
  /// attack the remaining images.
  bool resume = false;
  bool write_traces = true;
  /// Attack dataset annotations instead of the clean-image detections.
  bool annotation_targets = false;
};

struct ManifestRow {
  std::string image_id;
  std::string source_path;
  /// Relative to the output root; empty when no image was written.
  std::string adversarial_path;
  /// "ok" or "error".
  std::string status = "ok";
  std::string error;
  StopReason stop_reason = StopReason::no_detections;
  int iterations = 0;
  /// Measured on the stored 8-bit image against the clean image.
  double distortion = 0.0;
  /// Per-image success of fresh detections on the stored image; unset when
  /// the clean image had no detections.
  std::optional<double> success;
  int initial_detections = 0;
  int final_detections = 0;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct BatchManifest {
  static constexpr int kSchemaVersion = 1;

  std::string detector;
  AttackConfig config;
  std::vector<ManifestRow> rows;

  /// Mean success over rows where it is defined; nullopt when there are none.
  std::optional<double> mean_success() const;
};

/// Attacks every dataset image with one adapter clone per worker. Images are
/// written as PNG under output_root/images mirroring the dataset layout;
/// manifest.jsonl (header line plus one record per image, in dataset order)
/// and manifest.tsv are written by a single writer. Per-image failures become
/// "error" rows and the batch continues. Output is independent of the worker
/// count.
BatchManifest run_attack_batch(const DetectorAdapter& prototype, const DatasetIndex& dataset,
                               const AttackConfig& config, const BatchOptions& options);

/// Parses manifest.jsonl. Errc::io if missing, Errc::parse on a bad record or
/// an unsupported schema version.
BatchManifest read_manifest(const std::filesystem::path& path);

// --- cross-model evaluation -------------------------------------------------

struct EvaluationTarget {
  std::string label;
  DetectorAdapter* adapter = nullptr;
};

struct EvaluationOptions {
  double threshold = 0.5;
  /// Empty selects VOC thresholds for VOC datasets and COCO thresholds
  /// otherwise.
  std::vector<double> iou_thresholds;
  bool include_difficult = false;
};

struct TransferabilityMatrix {
  std::vector<std::string> sources;
  std::vector<std::string> targets;
  /// Clean-image mAP per target.
  std::vector<double> baseline;
  /// cells[source][target]: mAP on that source's adversarial images.
  std::vector<std::vector<double>> cells;
  /// Adversarial files that could not be read, per cell.
  std::vector<std::vector<int>> missing;
  std::vector<std::string> warnings;

  /// Percent, from the baseline and the cell.
  double success_rate(std::size_t source, std::size_t target) const;
};

/// Each manifest is one row (labelled by its detector name, or by
/// `source_labels` when given). mAP per target is computed on the stored
/// adversarial images against `ground_truth`, mapped into the target's class
/// vocabulary (VOC names go through voc_to_coco_label_map()). Images whose
/// adversarial file is missing are left out of that cell and counted.
TransferabilityMatrix evaluate_cross_model(std::span<const BatchManifest> sources,
                                           std::span<const EvaluationTarget> targets,
                                           const DatasetIndex& ground_truth,
                                           const EvaluationOptions& options = {},
                                           const std::filesystem::path& manifest_root = {},
                                           std::span<const std::string> source_labels = {});

/// Writes matrix.tsv and matrix.jsonl into `dir`.
void write_matrix(const TransferabilityMatrix& matrix, const std::filesystem::path& dir);

// --- figure series ----------------------------------------------------------

enum class FigureId { loss_convergence, rate_vs_distortion, conf_vs_distortion };

const char* to_string(FigureId id) noexcept;
/// Errc::invalid_argument listing the valid ids.
FigureId parse_figure_id(const std::string& text);

struct FigureSeries {
  FigureId id = FigureId::loss_convergence;
  std::string x_label;
  std::string y_label;
  std::vector<std::pair<double, double>> points;
};

struct ConfidencePoint {
  double threshold = 0.0;
  /// Mean achieved distortion over images with detections at this threshold.
  double mean_distortion = 0.0;
  int images = 0;
};

/// One attack per image and threshold; images with no clean detections at a
/// threshold are left out of that threshold's mean.
std::vector<ConfidencePoint> confidence_sweep(DetectorAdapter& adapter,
                                              std::span<const ImageBuffer> images,
                                              const AttackConfig& base,
                                              std::span<const double> thresholds);

/// (iteration, total loss), iterations counted from 1. Precondition error on
/// an empty trace.
FigureSeries loss_convergence_series(std::span<const TraceEntry> trace);
/// (S, mean success) over the non-skipped points of every sweep, sorted by S.
FigureSeries rate_vs_distortion_series(std::span<const std::vector<SweepPoint>> sweeps);
/// (T, mean distortion), sorted by T.
FigureSeries conf_vs_distortion_series(std::span<const ConfidencePoint> points);

/// Tab-separated with a header row. When `plot` is set, also renders a
/// simple SVG line chart there.
void write_series(const FigureSeries& series, const std::filesystem::path& file,
                  const std::filesystem::path& plot = {});
/// Reads a file written by write_series.
FigureSeries read_series(const std::filesystem::path& file);

/// Writes per-iteration traces as TSV (iteration, loss, loc, obj, cls,
/// distortion, detections, success) and reads them back.
void write_trace(std::span<const TraceEntry> trace, const std::filesystem::path& file);
std::vector<TraceEntry> read_trace(const std::filesystem::path& file);

struct ImageSweep {
  std::string image_id;
  std::vector<SweepPoint> points;
};

/// One row per (image, S): image_id, S, skipped, distortion, success,
/// iterations, stop_reason.
void write_sweep_table(std::span<const ImageSweep> sweeps, const std::filesystem::path& file);
std::vector<ImageSweep> read_sweep_table(const std::filesystem::path& file);

/// One row per threshold: T, mean_distortion, images.
void write_confidence_table(std::span<const ConfidencePoint> points,
                            const std::filesystem::path& file);
std::vector<ConfidencePoint> read_confidence_table(const std::filesystem::path& file);

}  // namespace advdet
