#pragma once

#include <cstdint>
#include <map>
#include <opencv2/core.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "fakescope/common/mask.hpp"
#include "fakescope/manifest/plan.hpp"
#include "fakescope/manifest/types.hpp"

namespace fakescope::genclient {

// Inputs of one inpainting call. An all-zero mask asks the model to
// regenerate the whole image (self-conditioning).
struct InpaintRequest {
  std::string reference_png;
  BinaryMask mask;
  std::string prompt;
  std::uint64_t seed = 0;
  int steps = 50;
  double guidance = 7.5;

  // Wire body: {image_png_b64, mask_png_b64, prompt, seed, steps, guidance}.
  std::string to_json() const;
  static InpaintRequest from_json(std::string_view body);
  // SHA-256 of the wire body.
  std::string hash() const;

  bool operator==(const InpaintRequest&) const = default;
};

enum class ReplacementMode { kSame, kDifferent };

std::string prompt_for(std::string_view category);

// Replacement candidates for the different-category edit: other members of
// the category's supercategory; "person" (and any single-member
// supercategory) draws from every other category instead.
class ReplacementPools {
 public:
  explicit ReplacementPools(const manifest::Taxonomy& taxonomy);

  struct Pool {
    const std::vector<std::string>* candidates = nullptr;
    bool fallback = false;  // supercategory had no other member
  };
  Pool pool(const std::string& category) const;
  std::string draw(const std::string& category, ReplacementMode mode, std::uint64_t seed) const;

 private:
  std::vector<std::string> all_;
  std::map<std::string, std::vector<std::string>> same_super_;
  std::map<std::string, std::vector<std::string>> all_but_;
};

std::string replacement_category(const std::string& category, ReplacementMode mode,
                                 const manifest::Taxonomy& taxonomy, std::uint64_t seed);

InpaintRequest build_self_conditioned(const cv::Mat& image, std::uint64_t seed,
                                      const manifest::GenerationParams& params = {});

// Same-category edits use the segmentation mask; different-category edits
// use the filled bounding box.
InpaintRequest build_inpaint(const cv::Mat& image, const manifest::ObjectAnnotation& annotation,
                             ReplacementMode mode, const manifest::Taxonomy& taxonomy,
                             std::uint64_t seed, const manifest::GenerationParams& params = {});

// Generated pixels where the mask is set, original pixels elsewhere.
cv::Mat composite_background(const cv::Mat& original, const cv::Mat& generated,
                             const BinaryMask& mask);

// Mask PNG used on the wire: 8-bit gray, 0 or 255.
std::string encode_mask_png(const BinaryMask& mask);
BinaryMask decode_mask_png(std::string_view bytes);

}  // namespace fakescope::genclient
