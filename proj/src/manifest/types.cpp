#include "fakescope/manifest/types.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "fakescope/common/error.hpp"

#ifndef FAKESCOPE_VERSION
#define FAKESCOPE_VERSION "dev"
#endif

namespace fakescope::manifest {

const char* tool_version() { return "fakescope " FAKESCOPE_VERSION; }

std::string_view to_string(Label l) { return l == Label::kReal ? "real" : "fake"; }

Label label_from_string(std::string_view s) {
  if (s == "real") return Label::kReal;
  if (s == "fake") return Label::kFake;
  throw Error("unknown label '" + std::string(s) + "'");
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kReal: return "real";
    case Variant::kSelfCond: return "self_cond";
    case Variant::kSelfCondBg: return "self_cond_bg";
    case Variant::kInpaintSame: return "inpaint_same";
    case Variant::kInpaintSameBg: return "inpaint_same_bg";
    case Variant::kInpaintDiff: return "inpaint_diff";
    case Variant::kInpaintDiffBg: return "inpaint_diff_bg";
  }
  return "real";
}

Variant variant_from_string(std::string_view s) {
  static const std::unordered_map<std::string_view, Variant> kByName = {
      {"real", Variant::kReal},
      {"self_cond", Variant::kSelfCond},
      {"self_cond_bg", Variant::kSelfCondBg},
      {"inpaint_same", Variant::kInpaintSame},
      {"inpaint_same_bg", Variant::kInpaintSameBg},
      {"inpaint_diff", Variant::kInpaintDiff},
      {"inpaint_diff_bg", Variant::kInpaintDiffBg},
  };
  const auto it = kByName.find(s);
  if (it == kByName.end()) throw Error("unknown variant '" + std::string(s) + "'");
  return it->second;
}

bool is_background_variant(Variant v) {
  return v == Variant::kSelfCondBg || v == Variant::kInpaintSameBg ||
         v == Variant::kInpaintDiffBg;
}

Variant generated_sibling(Variant v) {
  switch (v) {
    case Variant::kSelfCondBg: return Variant::kSelfCond;
    case Variant::kInpaintSameBg: return Variant::kInpaintSame;
    case Variant::kInpaintDiffBg: return Variant::kInpaintDiff;
    default: throw Error("variant has no generated sibling: " + std::string(to_string(v)));
  }
}

std::filesystem::path DatasetManifest::resolve(const ImageRecord& rec) const {
  std::filesystem::path p(rec.path);
  if (p.is_absolute() || root.empty()) return p;
  return root / p;
}

const ImageRecord* DatasetManifest::find(std::string_view id) const {
  const auto it = std::find_if(records.begin(), records.end(),
                               [&](const ImageRecord& r) { return r.id == id; });
  return it == records.end() ? nullptr : &*it;
}

std::size_t DatasetManifest::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [&](const ImageRecord& r) { return r.label == label; }));
}

std::vector<std::size_t> DatasetManifest::annotations_for(std::string_view record_id) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    if (annotations[i].record_id == record_id) out.push_back(i);
  }
  return out;
}

void DatasetManifest::validate() const {
  std::unordered_map<std::string_view, const ImageRecord*> by_id;
  for (const auto& r : records) {
    if (r.id.empty()) throw Error("record with empty id");
    if (!by_id.emplace(r.id, &r).second) throw Error("duplicate record id " + r.id);
    if ((r.label == Label::kReal) != (r.variant == Variant::kReal)) {
      throw Error("record " + r.id + ": label/variant mismatch");
    }
    if (r.width < 1 || r.height < 1) throw Error("record " + r.id + ": bad dimensions");
    if (r.jpeg_qf.has_value() != (r.container == Container::kJpeg)) {
      throw Error("record " + r.id + ": jpeg_qf must be set exactly for jpeg containers");
    }
    if (r.jpeg_qf && (*r.jpeg_qf < 1 || *r.jpeg_qf > 100)) {
      throw Error("record " + r.id + ": jpeg_qf out of range");
    }
    if (r.label == Label::kReal && r.pair_id != r.id) {
      throw Error("record " + r.id + ": real pair_id must be its own id");
    }
  }
  for (const auto& r : records) {
    if (r.label != Label::kFake) continue;
    const auto it = by_id.find(r.pair_id);
    if (it == by_id.end() || it->second->label != Label::kReal) {
      throw Error("fake " + r.id + ": pair_id does not resolve to a real record");
    }
  }
  for (const auto& a : annotations) {
    const auto it = by_id.find(a.record_id);
    if (it == by_id.end()) throw Error("annotation for unknown record " + a.record_id);
    const ImageRecord& rec = *it->second;
    if (a.mask.width != rec.width || a.mask.height != rec.height) {
      throw Error("annotation on " + a.record_id + ": mask size differs from record");
    }
  }
}

void DatasetManifest::validate_training() const {
  validate();
  std::set<std::pair<std::string, Variant>> seen;
  std::size_t fakes = 0;
  for (const auto& r : records) {
    if (r.label != Label::kFake) continue;
    ++fakes;
    if (!seen.emplace(r.pair_id, r.variant).second) {
      throw Error("duplicate (pair_id, variant) for " + r.pair_id + "/" +
                  std::string(to_string(r.variant)));
    }
  }
  if (fakes != 6 * count(Label::kReal)) {
    throw Error("training manifest must hold six fakes per real");
  }
}

}  // namespace fakescope::manifest
