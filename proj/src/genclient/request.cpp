#include "fakescope/genclient/request.hpp"

#include <spdlog/spdlog.h>

#include <nlohmann/json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "fakescope/common/base64.hpp"
#include "fakescope/common/error.hpp"
#include "fakescope/common/hash.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/common/rng.hpp"

namespace fakescope::genclient {

using nlohmann::json;

std::string encode_mask_png(const BinaryMask& mask) { return encode_png(mask.to_mat()); }

BinaryMask decode_mask_png(std::string_view bytes) {
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<char*>(bytes.data()));
  cv::Mat m = cv::imdecode(buf, cv::IMREAD_GRAYSCALE);
  if (m.empty()) throw Error("mask decode failed");
  return BinaryMask::from_mat(m);
}

std::string InpaintRequest::to_json() const {
  json j;
  j["image_png_b64"] = base64_encode(reference_png);
  j["mask_png_b64"] = base64_encode(encode_mask_png(mask));
  j["prompt"] = prompt;
  j["seed"] = seed;
  j["steps"] = steps;
  j["guidance"] = guidance;
  return j.dump();
}

InpaintRequest InpaintRequest::from_json(std::string_view body) {
  InpaintRequest r;
  try {
    const json j = json::parse(body);
    r.reference_png = base64_decode(j.at("image_png_b64").get<std::string>());
    r.mask = decode_mask_png(base64_decode(j.at("mask_png_b64").get<std::string>()));
    r.prompt = j.value("prompt", "");
    r.seed = j.value("seed", std::uint64_t{0});
    r.steps = j.value("steps", 50);
    r.guidance = j.value("guidance", 7.5);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed inpaint request: ") + e.what());
  }
  return r;
}

std::string InpaintRequest::hash() const { return sha256_hex(to_json()); }

std::string prompt_for(std::string_view category) {
  return "a photo of a " + std::string(category);
}

ReplacementPools::ReplacementPools(const manifest::Taxonomy& taxonomy) {
  std::map<std::string, std::vector<std::string>> members;
  for (const auto& [cat, super] : taxonomy) {
    all_.push_back(cat);
    members[super].push_back(cat);
  }
  for (const auto& [cat, super] : taxonomy) {
    auto& same = same_super_[cat];
    for (const auto& m : members[super]) {
      if (m != cat) same.push_back(m);
    }
    auto& rest = all_but_[cat];
    for (const auto& m : all_) {
      if (m != cat) rest.push_back(m);
    }
  }
}

ReplacementPools::Pool ReplacementPools::pool(const std::string& category) const {
  const auto same = same_super_.find(category);
  if (same == same_super_.end()) {
    if (category != "person") throw Error("category not in taxonomy: " + category);
    // Person without a taxonomy entry: every category is a candidate.
    return {&all_, false};
  }
  if (category == "person" || same->second.empty()) {
    return {&all_but_.at(category), category != "person"};
  }
  return {&same->second, false};
}

std::string ReplacementPools::draw(const std::string& category, ReplacementMode mode,
                                   std::uint64_t seed) const {
  if (mode == ReplacementMode::kSame) return category;
  const Pool p = pool(category);
  if (p.candidates->empty()) throw Error("no replacement candidates for " + category);
  if (p.fallback) {
    spdlog::info("supercategory of '{}' has no other member; drawing from all categories",
                 category);
  }
  Rng rng(seed, "replacement_category", category);
  const auto n = static_cast<std::int64_t>(p.candidates->size());
  return (*p.candidates)[static_cast<std::size_t>(rng.uniform_int(0, n - 1))];
}

std::string replacement_category(const std::string& category, ReplacementMode mode,
                                 const manifest::Taxonomy& taxonomy, std::uint64_t seed) {
  if (mode == ReplacementMode::kSame) return category;
  return ReplacementPools(taxonomy).draw(category, mode, seed);
}

InpaintRequest build_self_conditioned(const cv::Mat& image, std::uint64_t seed,
                                      const manifest::GenerationParams& params) {
  if (image.empty()) throw Error("build_self_conditioned: empty image");
  InpaintRequest r;
  r.reference_png = encode_png(image);
  r.mask = BinaryMask(image.cols, image.rows);
  r.seed = seed;
  r.steps = params.steps;
  r.guidance = params.guidance;
  return r;
}

InpaintRequest build_inpaint(const cv::Mat& image, const manifest::ObjectAnnotation& annotation,
                             ReplacementMode mode, const manifest::Taxonomy& taxonomy,
                             std::uint64_t seed, const manifest::GenerationParams& params) {
  if (annotation.mask.width != image.cols || annotation.mask.height != image.rows) {
    throw Error("annotation mask does not match image for " + annotation.record_id);
  }
  InpaintRequest r;
  r.reference_png = encode_png(image);
  r.seed = seed;
  r.steps = params.steps;
  r.guidance = params.guidance;
  if (mode == ReplacementMode::kSame) {
    r.mask = BinaryMask::from_rle(annotation.mask);
  } else {
    if (annotation.bbox.w <= 0 || annotation.bbox.h <= 0) {
      throw Error("degenerate bounding box for " + annotation.record_id);
    }
    r.mask = BinaryMask::from_rect(image.cols, image.rows, annotation.bbox);
  }
  r.prompt = prompt_for(replacement_category(annotation.category, mode, taxonomy, seed));
  return r;
}

cv::Mat composite_background(const cv::Mat& original, const cv::Mat& generated,
                             const BinaryMask& mask) {
  if (original.size() != generated.size() || original.type() != generated.type() ||
      mask.width() != original.cols || mask.height() != original.rows) {
    throw Error("composite_background: dimension mismatch");
  }
  cv::Mat out = original.clone();
  generated.copyTo(out, mask.to_mat());
  return out;
}

}  // namespace fakescope::genclient
