#include "fakescope/manifest/ingest.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <unordered_map>

#include "fakescope/common/error.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/common/parallel.hpp"

namespace fakescope::manifest {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CocoImage {
  std::int64_t id = 0;
  int width = 0;
  int height = 0;
  std::optional<int> license;
};

struct CocoObject {
  std::int64_t category_id = 0;
  json segmentation;
};

struct CocoIndex {
  std::unordered_map<std::string, CocoImage> images_by_file;
  std::unordered_map<std::int64_t, std::vector<CocoObject>> objects_by_image;
  std::unordered_map<std::int64_t, std::pair<std::string, std::string>> categories;
  std::unordered_map<int, LicenseInfo> licenses;
  Taxonomy taxonomy;
};

CocoIndex load_coco(const fs::path& path) {
  CocoIndex index;
  try {
    const json doc = json::parse(read_file(path));
    for (const auto& c : doc.at("categories")) {
      const auto id = c.at("id").get<std::int64_t>();
      const auto name = c.at("name").get<std::string>();
      const auto super = c.value("supercategory", name);
      index.categories[id] = {name, super};
      index.taxonomy[name] = super;
    }
    if (doc.contains("licenses")) {
      for (const auto& l : doc["licenses"]) {
        LicenseInfo info{l.at("id").get<int>(), l.value("name", ""), l.value("url", "")};
        index.licenses[info.id] = info;
      }
    }
    for (const auto& im : doc.at("images")) {
      CocoImage img;
      img.id = im.at("id").get<std::int64_t>();
      img.width = im.value("width", 0);
      img.height = im.value("height", 0);
      if (im.contains("license") && !im["license"].is_null()) img.license = im["license"].get<int>();
      index.images_by_file[im.at("file_name").get<std::string>()] = img;
    }
    for (const auto& an : doc.at("annotations")) {
      if (an.value("iscrowd", 0) != 0) continue;
      CocoObject obj;
      obj.category_id = an.at("category_id").get<std::int64_t>();
      obj.segmentation = an.at("segmentation");
      if (!index.categories.contains(obj.category_id)) {
        throw Error("annotation references unknown category " + std::to_string(obj.category_id));
      }
      index.objects_by_image[an.at("image_id").get<std::int64_t>()].push_back(std::move(obj));
    }
  } catch (const json::exception& e) {
    throw Error("malformed annotation file " + path.string() + ": " + e.what());
  }
  return index;
}

// Full-image mask of one COCO segmentation (polygons, RLE string, RLE list).
std::optional<BinaryMask> decode_segmentation(const json& seg, int width, int height) {
  if (seg.is_array()) {
    std::vector<std::vector<double>> polys;
    for (const auto& p : seg) polys.push_back(p.get<std::vector<double>>());
    return BinaryMask::from_polygons(width, height, polys);
  }
  if (seg.is_object() && seg.contains("counts") && seg.contains("size")) {
    const int h = seg["size"].at(0).get<int>();
    const int w = seg["size"].at(1).get<int>();
    if (h != height || w != width) return std::nullopt;
    if (seg["counts"].is_string()) {
      return BinaryMask::from_rle(rle_from_string(seg["counts"].get<std::string>(), h, w));
    }
    return BinaryMask::from_rle(Rle{h, w, seg["counts"].get<std::vector<std::uint32_t>>()});
  }
  return std::nullopt;
}

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

std::vector<fs::path> list_images(const fs::path& listing) {
  std::vector<fs::path> files;
  if (fs::is_directory(listing)) {
    for (const auto& entry : fs::directory_iterator(listing)) {
      if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
  }
  std::ifstream in(listing);
  if (!in) throw Error("cannot read listing " + listing.string());
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    fs::path p(line);
    files.push_back(p.is_absolute() ? p : listing.parent_path() / p);
  }
  return files;
}

struct FileOutcome {
  std::optional<ImageRecord> record;
  std::vector<ObjectAnnotation> annotations;
  std::optional<Rejection> rejection;
};

}  // namespace

bool is_creative_commons(const LicenseInfo& license) {
  auto contains = [](const std::string& s, std::string_view needle) {
    return s.find(needle) != std::string::npos;
  };
  return contains(license.url, "creativecommons.org") || contains(license.name, "Creative Commons");
}

Rect largest_central_crop(int width, int height) {
  if (width < 1 || height < 1) throw Error("largest_central_crop: empty image");
  const int side = std::min(width, height);
  return {(width - side) / 2, (height - side) / 2, side, side};
}

IngestResult ingest_reals(const IngestOptions& options) {
  if (options.min_objects >= 1 && !options.annotations) {
    throw Error("an annotation file is required when min_objects >= 1");
  }
  std::optional<CocoIndex> coco;
  if (options.annotations) coco = load_coco(*options.annotations);

  if (!fs::exists(options.listing)) throw Error("listing not found: " + options.listing.string());
  const std::vector<fs::path> files = list_images(options.listing);
  std::vector<FileOutcome> outcomes(files.size());

  auto process = [&](std::size_t i) {
    const fs::path& file = files[i];
    const std::string id = file.stem().string();
    FileOutcome& out = outcomes[i];
    auto reject = [&](std::string reason) { out.rejection = Rejection{id, std::move(reason)}; };

    const CocoImage* entry = nullptr;
    if (coco) {
      const auto it = coco->images_by_file.find(file.filename().string());
      if (it != coco->images_by_file.end()) entry = &it->second;
      if (!entry && options.min_objects >= 1) return reject("no_annotation_entry");
      if (entry && entry->license && options.license_filter) {
        const auto lic = coco->licenses.find(*entry->license);
        const LicenseInfo info = lic != coco->licenses.end() ? lic->second : LicenseInfo{*entry->license, "", ""};
        if (!options.license_filter(info)) return reject("license");
      }
    }

    cv::Mat image;
    try {
      image = load_image(file);
    } catch (const Error& e) {
      spdlog::warn("skipping unreadable image: {}", e.what());
      return reject("unreadable");
    }

    const Rect crop = largest_central_crop(image.cols, image.rows);
    if (entry) {
      const auto objs = coco->objects_by_image.find(entry->id);
      if (objs != coco->objects_by_image.end()) {
        for (const CocoObject& obj : objs->second) {
          const auto full = decode_segmentation(obj.segmentation, image.cols, image.rows);
          if (!full) {
            spdlog::warn("{}: unsupported or mismatched segmentation skipped", id);
            continue;
          }
          BinaryMask m = full->crop(crop);
          const auto area = m.popcount();
          if (area < 1 || area >= static_cast<std::int64_t>(crop.w) * crop.h) continue;
          const auto& [name, super] = coco->categories.at(obj.category_id);
          out.annotations.push_back({id, name, super, m.to_rle(), m.bbox()});
        }
      }
    }
    if (static_cast<int>(out.annotations.size()) < options.min_objects) {
      out.annotations.clear();
      return reject("too_few_objects");
    }

    const cv::Mat cropped = image(cv::Rect(crop.x, crop.y, crop.w, crop.h)).clone();
    const std::string rel = "reals/" + id + ".png";
    write_file(options.output_dir / rel, encode_png(cropped));

    ImageRecord rec;
    rec.id = id;
    rec.path = rel;
    rec.label = Label::kReal;
    rec.pair_id = id;
    rec.variant = Variant::kReal;
    rec.generator_tag = "pristine";
    rec.source_tag = options.source_tag;
    rec.width = crop.w;
    rec.height = crop.h;
    rec.container = Container::kPng;
    out.record = std::move(rec);
  };
  parallel_for(files.size(), process, options.workers ? options.workers : default_workers());

  IngestResult result;
  if (coco) result.manifest.taxonomy = coco->taxonomy;
  result.manifest.provenance.tool_version = tool_version();
  result.manifest.root = options.output_dir;
  std::unordered_map<std::string, int> seen;
  for (auto& o : outcomes) {
    if (o.rejection) {
      result.rejections.push_back(*o.rejection);
      continue;
    }
    if (!o.record) continue;
    if (seen[o.record->id]++ > 0) {
      result.rejections.push_back({o.record->id, "duplicate_id"});
      continue;
    }
    result.manifest.records.push_back(std::move(*o.record));
    for (auto& a : o.annotations) result.manifest.annotations.push_back(std::move(a));
  }
  return result;
}

void write_rejections(const std::vector<Rejection>& rejections, const fs::path& path) {
  std::string csv = "id,reason\n";
  for (const auto& r : rejections) csv += r.id + "," + r.reason + "\n";
  write_file(path, csv);
}

std::size_t select_editable_object_index(const ImageRecord& record,
                                         const std::vector<ObjectAnnotation>& annotations,
                                         std::span<const std::size_t> candidates) {
  std::optional<std::size_t> best;
  std::int64_t best_area = -1;
  for (std::size_t i : candidates) {
    const auto& a = annotations.at(i);
    if (a.record_id != record.id) continue;
    const std::int64_t area = rle_area(a.mask);
    if (!best || area > best_area ||
        (area == best_area && a.category < annotations[*best].category) ||
        (area == best_area && a.category == annotations[*best].category && i < *best)) {
      best = i;
      best_area = area;
    }
  }
  if (!best) throw Error("no editable object for record " + record.id);
  return *best;
}

std::size_t select_editable_object_index(const ImageRecord& record,
                                         const std::vector<ObjectAnnotation>& annotations) {
  std::vector<std::size_t> all(annotations.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return select_editable_object_index(record, annotations, all);
}

const ObjectAnnotation& select_editable_object(const ImageRecord& record,
                                               const std::vector<ObjectAnnotation>& annotations) {
  return annotations[select_editable_object_index(record, annotations)];
}

}  // namespace fakescope::manifest
