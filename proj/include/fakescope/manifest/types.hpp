#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fakescope/common/image_io.hpp"
#include "fakescope/common/mask.hpp"

namespace fakescope::manifest {

enum class Label { kReal, kFake };

enum class Variant {
  kReal,
  kSelfCond,
  kSelfCondBg,
  kInpaintSame,
  kInpaintSameBg,
  kInpaintDiff,
  kInpaintDiffBg,
};

// The six fake variants planned for every real image, in plan order.
inline constexpr std::array<Variant, 6> kFakeVariants = {
    Variant::kSelfCond,    Variant::kSelfCondBg,    Variant::kInpaintSame,
    Variant::kInpaintSameBg, Variant::kInpaintDiff, Variant::kInpaintDiffBg,
};

std::string_view to_string(Label l);
std::string_view to_string(Variant v);
Label label_from_string(std::string_view s);
Variant variant_from_string(std::string_view s);

// True for the background-restored variants.
bool is_background_variant(Variant v);
// The generated sibling a background-restored variant composites from.
Variant generated_sibling(Variant v);

struct ImageRecord {
  std::string id;
  std::string path;
  Label label = Label::kReal;
  std::string pair_id;
  Variant variant = Variant::kReal;
  std::string generator_tag;
  std::string source_tag;
  int width = 0;
  int height = 0;
  Container container = Container::kPng;
  std::optional<int> jpeg_qf;
  std::optional<std::uint64_t> seed;

  bool operator==(const ImageRecord&) const = default;
};

struct ObjectAnnotation {
  std::string record_id;
  std::string category;
  std::string supercategory;
  // In crop coordinates.
  Rle mask;
  Rect bbox;

  bool operator==(const ObjectAnnotation&) const = default;
};

struct Provenance {
  std::string config_hash;
  std::string tool_version;

  bool operator==(const Provenance&) const = default;
};

using Taxonomy = std::map<std::string, std::string>;  // category -> supercategory

struct DatasetManifest {
  std::vector<ImageRecord> records;
  std::vector<ObjectAnnotation> annotations;
  Taxonomy taxonomy;
  Provenance provenance;
  // Directory relative record paths resolve against. Not serialized.
  std::filesystem::path root;

  std::filesystem::path resolve(const ImageRecord& rec) const;
  const ImageRecord* find(std::string_view id) const;
  std::size_t count(Label label) const;
  std::vector<std::size_t> annotations_for(std::string_view record_id) const;

  // Throws Error describing the first violated record/manifest invariant.
  void validate() const;
  // validate() plus: six fakes per real with unique (pair_id, variant).
  void validate_training() const;
};

const char* tool_version();

}  // namespace fakescope::manifest
