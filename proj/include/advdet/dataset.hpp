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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "advdet/metrics.hpp"
#include "advdet/synthetic.hpp"

namespace advdet {

enum class DatasetKind { coco2017_val, voc2012_val, synthetic, custom };

std::string to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(const std::string& text);

struct DatasetEntry {
  std::filesystem::path image_path;
  /// Boxes in 0-based corner form; class_id indexes DatasetIndex::class_names.
  ImageAnnotation annotation;
};

struct DatasetIndex {
  DatasetKind kind = DatasetKind::custom;
  /// Directory the image paths are relative to; outputs mirror this layout.
  std::filesystem::path image_root;
  std::vector<std::string> class_names;
  /// Original category id -> contiguous class index (COCO documents only).
  std::map<long long, int> category_ids;
  std::vector<DatasetEntry> entries;
  /// Non-fatal problems found while loading (missing files, dropped boxes).
  std::vector<std::string> warnings;

  /// Errc::invalid_argument on duplicate image ids or boxes that are invalid
  /// or outside their image.
  void validate() const;
  std::vector<ImageAnnotation> annotations() const;
};

/// COCO-format document: images, annotations ([x, y, width, height]) and
/// categories. Category ids are remapped to contiguous indices in ascending id
/// order. iscrowd regions become difficult boxes. Entries whose image file is
/// missing under `image_root` are dropped with a warning. A malformed
/// document raises Errc::parse naming the offending element.
DatasetIndex load_coco_annotations(const std::filesystem::path& annotation_file,
                                   const std::filesystem::path& image_root);

/// Directory of VOC per-image XML files. 1-based inclusive pixel bounds are
/// converted to 0-based corners (xmin - 1, ymin - 1, xmax, ymax). Classes
/// follow voc_class_names(); unknown names are dropped with a warning.
DatasetIndex load_voc_annotations(const std::filesystem::path& xml_dir,
                                  const std::filesystem::path& image_root);

/// The 20 PASCAL VOC classes in their conventional order.
const std::vector<std::string>& voc_class_names();
/// The 80 COCO detection classes in category-id order.
const std::vector<std::string>& coco_class_names();
/// VOC class name -> COCO class name for the classes the two share.
const std::map<std::string, std::string>& voc_to_coco_label_map();

struct LabelMapping {
  /// Source class index -> target class index, or -1 when unmapped.
  std::vector<int> to_target;
  std::vector<std::string> unmapped;
};

/// Matches class names exactly, after translating source names through
/// `aliases` when present.
LabelMapping map_labels(const std::vector<std::string>& source,
                        const std::vector<std::string>& target,
                        const std::map<std::string, std::string>& aliases = {});

/// Ground truth re-expressed in the target vocabulary. Boxes of unmapped
/// classes are removed; one warning names each removed class.
DatasetIndex remap_classes(const DatasetIndex& index, const LabelMapping& mapping,
                           const std::vector<std::string>& target_names);

/// Writes `count` generated scenes as PNGs under root/images plus a COCO
/// document root/annotations.json, and returns the loaded index.
DatasetIndex write_synthetic_dataset(const std::filesystem::path& root, std::uint64_t seed,
                                     int count, const SceneOptions& options = {});

}  // namespace advdet
