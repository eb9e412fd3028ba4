#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fakescope/common/mask.hpp"
#include "fakescope/manifest/types.hpp"

namespace fakescope::manifest {

struct LicenseInfo {
  int id = 0;
  std::string name;
  std::string url;
};

using LicenseFilter = std::function<bool(const LicenseInfo&)>;

// Accepts licenses whose URL or name refers to Creative Commons.
bool is_creative_commons(const LicenseInfo& license);

struct IngestOptions {
  // A directory of images, or a text file listing one image path per line.
  std::filesystem::path listing;
  // COCO-style annotation JSON; required when min_objects >= 1.
  std::optional<std::filesystem::path> annotations;
  // Applied only to images that carry a license in the annotation file.
  LicenseFilter license_filter;
  int min_objects = 1;
  std::string source_tag = "coco";
  // Cropped reals are written here as PNG; manifest paths are relative to it.
  std::filesystem::path output_dir;
  unsigned workers = 0;  // 0 = hardware concurrency
};

struct Rejection {
  std::string id;
  std::string reason;
};

struct IngestResult {
  DatasetManifest manifest;
  std::vector<Rejection> rejections;
};

// Largest centered square of a width x height image.
Rect largest_central_crop(int width, int height);

// Builds the pool of cropped, losslessly re-encoded reals. Unreadable images
// are logged and skipped; a malformed annotation file throws.
IngestResult ingest_reals(const IngestOptions& options);

void write_rejections(const std::vector<Rejection>& rejections,
                      const std::filesystem::path& path);

// Annotation with the largest mask area among `candidates` (indices into
// `annotations`); ties go to the lowest category, then the lowest index.
// Throws Error("no editable object") when there is none.
const ObjectAnnotation& select_editable_object(const ImageRecord& record,
                                               const std::vector<ObjectAnnotation>& annotations);
std::size_t select_editable_object_index(const ImageRecord& record,
                                         const std::vector<ObjectAnnotation>& annotations);
// Same rule restricted to the given candidate indices.
std::size_t select_editable_object_index(const ImageRecord& record,
                                         const std::vector<ObjectAnnotation>& annotations,
                                         std::span<const std::size_t> candidates);

}  // namespace fakescope::manifest
