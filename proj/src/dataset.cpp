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

#include "advdet/dataset.hpp"

#include <algorithm>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "advdet/image_io.hpp"
#include "json.hpp"

namespace advdet {

using nlohmann::json;

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::coco2017_val: return "coco2017-val";
    case DatasetKind::voc2012_val: return "voc2012-val";
    case DatasetKind::synthetic: return "synthetic";
    case DatasetKind::custom: return "custom";
  }
  return "custom";
}

DatasetKind parse_dataset_kind(const std::string& text) {
  for (auto k : {DatasetKind::coco2017_val, DatasetKind::voc2012_val, DatasetKind::synthetic,
                 DatasetKind::custom}) {
    if (to_string(k) == text) return k;
  }
  throw Error(Errc::invalid_argument, "unknown dataset kind '" + text +
                                          "' (expected coco2017-val, voc2012-val, synthetic or custom)");
}

void DatasetIndex::validate() const {
  std::set<std::string> ids;
  for (const auto& e : entries) {
    const auto& a = e.annotation;
    if (!ids.insert(a.image_id).second) {
      throw Error(Errc::invalid_argument, "duplicate image id '" + a.image_id + "'");
    }
    for (const auto& b : a.boxes) {
      if (!b.box.valid() || b.box.x_min < 0 || b.box.y_min < 0 || b.box.x_max > a.width ||
          b.box.y_max > a.height) {
        throw Error(Errc::invalid_argument, "image '" + a.image_id + "' has a box outside its bounds");
      }
      if (b.class_id < 0 || b.class_id >= static_cast<int>(class_names.size())) {
        throw Error(Errc::invalid_argument, "image '" + a.image_id + "' has an unknown class index");
      }
    }
  }
}

std::vector<ImageAnnotation> DatasetIndex::annotations() const {
  std::vector<ImageAnnotation> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.annotation);
  return out;
}

namespace {

// Keeps a box inside its image. Returns false when nothing is left.
bool fit_box(BoundingBox& box, int width, int height) {
  box = box.clamped(width, height);
  return box.valid();
}

[[noreturn]] void bad_document(const std::filesystem::path& file, const std::string& where,
                               const std::string& what) {
  throw Error(Errc::parse, file.string() + ": " + where + ": " + what);
}

const json& field(const json& obj, const char* key, const std::filesystem::path& file,
                  const std::string& where) {
  if (!obj.is_object()) bad_document(file, where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) bad_document(file, where, std::string("missing \"") + key + "\"");
  return *it;
}

template <typename T>
T number(const json& obj, const char* key, const std::filesystem::path& file,
         const std::string& where) {
  const json& v = field(obj, key, file, where);
  if (!v.is_number()) bad_document(file, where + "." + key, "expected a number");
  return v.get<T>();
}

}  // namespace

DatasetIndex load_coco_annotations(const std::filesystem::path& annotation_file,
                                   const std::filesystem::path& image_root) {
  std::ifstream in(annotation_file);
  if (!in) throw Error(Errc::io, "cannot open annotation file '" + annotation_file.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse, annotation_file.string() + ": " + e.what());
  }

  DatasetIndex index;
  index.image_root = image_root;
  const auto& file = annotation_file;
  const json& images = field(doc, "images", file, "document");
  const json& anns = field(doc, "annotations", file, "document");
  const json& cats = field(doc, "categories", file, "document");
  for (const auto* arr : {&images, &anns, &cats}) {
    if (!arr->is_array()) bad_document(file, "document", "images, annotations and categories must be arrays");
  }

  std::vector<std::pair<long long, std::string>> categories;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const std::string where = "categories[" + std::to_string(i) + "]";
    const json& name = field(cats[i], "name", file, where);
    if (!name.is_string()) bad_document(file, where + ".name", "expected a string");
    categories.emplace_back(number<long long>(cats[i], "id", file, where), name.get<std::string>());
  }
  std::sort(categories.begin(), categories.end());
  for (const auto& [id, name] : categories) {
    if (index.category_ids.count(id) != 0) {
      bad_document(file, "categories", "duplicate category id " + std::to_string(id));
    }
    index.category_ids[id] = static_cast<int>(index.class_names.size());
    index.class_names.push_back(name);
  }

  std::map<long long, std::size_t> by_id;
  std::vector<DatasetEntry> entries;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = "images[" + std::to_string(i) + "]";
    const auto id = number<long long>(images[i], "id", file, where);
    const json& name = field(images[i], "file_name", file, where);
    if (!name.is_string()) bad_document(file, where + ".file_name", "expected a string");
    DatasetEntry e;
    e.image_path = image_root / name.get<std::string>();
    e.annotation.image_id = std::to_string(id);
    e.annotation.width = number<int>(images[i], "width", file, where);
    e.annotation.height = number<int>(images[i], "height", file, where);
    if (e.annotation.width <= 0 || e.annotation.height <= 0) {
      bad_document(file, where, "image size must be positive");
    }
    if (!by_id.emplace(id, entries.size()).second) {
      bad_document(file, where + ".id", "duplicate image id " + std::to_string(id));
    }
    entries.push_back(std::move(e));
  }

  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string where = "annotations[" + std::to_string(i) + "]";
    const auto image_id = number<long long>(anns[i], "image_id", file, where);
    const auto category = number<long long>(anns[i], "category_id", file, where);
    const json& bbox = field(anns[i], "bbox", file, where);
    if (!bbox.is_array() || bbox.size() != 4 ||
        !std::all_of(bbox.begin(), bbox.end(), [](const json& v) { return v.is_number(); })) {
      bad_document(file, where + ".bbox", "expected [x, y, width, height]");
    }
    auto img = by_id.find(image_id);
    if (img == by_id.end()) {
      index.warnings.push_back(where + " refers to unknown image " + std::to_string(image_id));
      continue;
    }
    auto cat = index.category_ids.find(category);
    if (cat == index.category_ids.end()) {
      index.warnings.push_back(where + " has unknown category " + std::to_string(category));
      continue;
    }
    const double x = bbox[0].get<double>();
    const double y = bbox[1].get<double>();
    GroundTruthBox gt;
    gt.box = {x, y, x + bbox[2].get<double>(), y + bbox[3].get<double>()};
    gt.class_id = cat->second;
    if (auto crowd = anns[i].find("iscrowd"); crowd != anns[i].end() && crowd->is_number()) {
      gt.difficult = crowd->get<int>() != 0;
    }
    auto& entry = entries[img->second];
    if (!fit_box(gt.box, entry.annotation.width, entry.annotation.height)) {
      index.warnings.push_back(where + " has an empty box after clipping; dropped");
      continue;
    }
    entry.annotation.boxes.push_back(gt);
  }

  for (auto& e : entries) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(e.image_path, ec)) {
      index.warnings.push_back("image " + e.annotation.image_id + " not found at '" +
                               e.image_path.string() + "'; excluded");
      continue;
    }
    index.entries.push_back(std::move(e));
  }
  return index;
}

const std::vector<std::string>& voc_class_names() {
  static const std::vector<std::string> names{
      "aeroplane", "bicycle", "bird",  "boat",        "bottle", "bus",         "car",
      "cat",       "chair",   "cow",   "diningtable", "dog",    "horse",       "motorbike",
      "person",    "pottedplant", "sheep", "sofa",     "train",  "tvmonitor"};
  return names;
}

const std::vector<std::string>& coco_class_names() {
  static const std::vector<std::string> names{
      "person",        "bicycle",      "car",           "motorcycle",    "airplane",
      "bus",           "train",        "truck",         "boat",          "traffic light",
      "fire hydrant",  "stop sign",    "parking meter", "bench",         "bird",
      "cat",           "dog",          "horse",         "sheep",         "cow",
      "elephant",      "bear",         "zebra",         "giraffe",       "backpack",
      "umbrella",      "handbag",      "tie",           "suitcase",      "frisbee",
      "skis",          "snowboard",    "sports ball",   "kite",          "baseball bat",
      "baseball glove", "skateboard",  "surfboard",     "tennis racket", "bottle",
      "wine glass",    "cup",          "fork",          "knife",         "spoon",
      "bowl",          "banana",       "apple",         "sandwich",      "orange",
      "broccoli",      "carrot",       "hot dog",       "pizza",         "donut",
      "cake",          "chair",        "couch",         "potted plant",  "bed",
      "dining table",  "toilet",       "tv",            "laptop",        "mouse",
      "remote",        "keyboard",     "cell phone",    "microwave",     "oven",
      "toaster",       "sink",         "refrigerator",  "book",          "clock",
      "vase",          "scissors",     "teddy bear",    "hair drier",    "toothbrush"};
  return names;
}

const std::map<std::string, std::string>& voc_to_coco_label_map() {
  static const std::map<std::string, std::string> map{
      {"aeroplane", "airplane"}, {"bicycle", "bicycle"},     {"bird", "bird"},
      {"boat", "boat"},          {"bottle", "bottle"},       {"bus", "bus"},
      {"car", "car"},            {"cat", "cat"},             {"chair", "chair"},
      {"cow", "cow"},            {"diningtable", "dining table"}, {"dog", "dog"},
      {"horse", "horse"},        {"motorbike", "motorcycle"}, {"person", "person"},
      {"pottedplant", "potted plant"}, {"sheep", "sheep"},   {"sofa", "couch"},
      {"train", "train"},        {"tvmonitor", "tv"}};
  return map;
}

DatasetIndex load_voc_annotations(const std::filesystem::path& xml_dir,
                                  const std::filesystem::path& image_root) {
  namespace pt = boost::property_tree;
  std::error_code ec;
  if (!std::filesystem::is_directory(xml_dir, ec)) {
    throw Error(Errc::io, "annotation directory not found: '" + xml_dir.string() + "'");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& item : std::filesystem::directory_iterator(xml_dir)) {
    if (item.is_regular_file() && item.path().extension() == ".xml") files.push_back(item.path());
  }
  std::sort(files.begin(), files.end());

  DatasetIndex index;
  index.kind = DatasetKind::voc2012_val;
  index.image_root = image_root;
  index.class_names = voc_class_names();
  if (files.empty()) {
    index.warnings.push_back("no XML annotations in '" + xml_dir.string() + "'");
    return index;
  }
  std::map<std::string, int> class_of;
  for (std::size_t i = 0; i < index.class_names.size(); ++i) {
    class_of[index.class_names[i]] = static_cast<int>(i);
  }

  for (const auto& path : files) {
    pt::ptree tree;
    try {
      pt::read_xml(path.string(), tree);
    } catch (const pt::xml_parser_error& e) {
      throw Error(Errc::parse, path.string() + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    try {
      const auto& root = tree.get_child("annotation");
      DatasetEntry e;
      const auto filename = root.get<std::string>("filename");
      e.image_path = image_root / filename;
      e.annotation.image_id = path.stem().string();
      e.annotation.width = root.get<int>("size.width");
      e.annotation.height = root.get<int>("size.height");
      for (const auto& [key, obj] : root) {
        if (key != "object") continue;
        const auto name = obj.get<std::string>("name");
        auto cls = class_of.find(name);
        if (cls == class_of.end()) {
          index.warnings.push_back(path.filename().string() + ": unknown class '" + name + "'; dropped");
          continue;
        }
        GroundTruthBox gt;
        gt.class_id = cls->second;
        gt.difficult = obj.get<int>("difficult", 0) != 0;
        gt.box = {obj.get<double>("bndbox.xmin") - 1.0, obj.get<double>("bndbox.ymin") - 1.0,
                  obj.get<double>("bndbox.xmax"), obj.get<double>("bndbox.ymax")};
        if (!fit_box(gt.box, e.annotation.width, e.annotation.height)) {
          index.warnings.push_back(path.filename().string() + ": empty box for '" + name + "'; dropped");
          continue;
        }
        e.annotation.boxes.push_back(gt);
      }
      if (!std::filesystem::is_regular_file(e.image_path, ec)) {
        index.warnings.push_back("image " + e.annotation.image_id + " not found at '" +
                                 e.image_path.string() + "'; excluded");
        continue;
      }
      index.entries.push_back(std::move(e));
    } catch (const pt::ptree_error& e) {
      throw Error(Errc::parse, path.string() + ": " + e.what());
    }
  }
  return index;
}

LabelMapping map_labels(const std::vector<std::string>& source,
                        const std::vector<std::string>& target,
                        const std::map<std::string, std::string>& aliases) {
  LabelMapping m;
  for (const auto& name : source) {
    auto alias = aliases.find(name);
    const std::string& wanted = alias != aliases.end() ? alias->second : name;
    auto it = std::find(target.begin(), target.end(), wanted);
    if (it == target.end()) {
      m.to_target.push_back(-1);
      m.unmapped.push_back(name);
    } else {
      m.to_target.push_back(static_cast<int>(it - target.begin()));
    }
  }
  return m;
}

DatasetIndex remap_classes(const DatasetIndex& index, const LabelMapping& mapping,
                           const std::vector<std::string>& target_names) {
  if (mapping.to_target.size() != index.class_names.size()) {
    throw Error(Errc::invalid_argument, "label mapping does not cover the dataset vocabulary");
  }
  DatasetIndex out = index;
  out.class_names = target_names;
  out.category_ids.clear();
  std::set<int> dropped;
  for (auto& e : out.entries) {
    auto& boxes = e.annotation.boxes;
    std::vector<GroundTruthBox> kept;
    for (auto b : boxes) {
      const int t = mapping.to_target[static_cast<std::size_t>(b.class_id)];
      if (t < 0) {
        dropped.insert(b.class_id);
        continue;
      }
      b.class_id = t;
      kept.push_back(b);
    }
    boxes = std::move(kept);
  }
  for (int c : dropped) {
    out.warnings.push_back("class '" + index.class_names[static_cast<std::size_t>(c)] +
                           "' has no counterpart in the detector vocabulary; its boxes are excluded");
  }
  return out;
}

DatasetIndex write_synthetic_dataset(const std::filesystem::path& root, std::uint64_t seed,
                                     int count, const SceneOptions& options) {
  if (count <= 0) throw Error(Errc::invalid_argument, "synthetic dataset needs at least one scene");
  const auto& names = synthetic_class_names();
  json doc;
  doc["images"] = json::array();
  doc["annotations"] = json::array();
  doc["categories"] = json::array();
  for (std::size_t c = 0; c < names.size(); ++c) {
    doc["categories"].push_back({{"id", c + 1}, {"name", names[c]}});
  }
  long long ann_id = 1;
  for (int i = 0; i < count; ++i) {
    const auto scene = generate_scene(scene_seed(seed, static_cast<std::uint64_t>(i)), options);
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04d.png", i);
    write_image(scene.image, root / "images" / name);
    doc["images"].push_back({{"id", i + 1},
                             {"file_name", name},
                             {"width", scene.image.width()},
                             {"height", scene.image.height()}});
    for (const auto& o : scene.objects) {
      doc["annotations"].push_back(
          {{"id", ann_id++},
           {"image_id", i + 1},
           {"category_id", o.class_id + 1},
           {"bbox", {o.box.x_min, o.box.y_min, o.box.width(), o.box.height()}},
           {"area", o.box.area()},
           {"iscrowd", 0}});
    }
  }
  std::filesystem::create_directories(root);
  {
    std::ofstream out(root / "annotations.json");
    if (!out) throw Error(Errc::io, "cannot write '" + (root / "annotations.json").string() + "'");
    out << doc.dump(1) << '\n';
  }
  auto index = load_coco_annotations(root / "annotations.json", root / "images");
  index.kind = DatasetKind::synthetic;
  return index;
}

}  // namespace advdet
