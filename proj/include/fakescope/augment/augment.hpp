#pragma once

#include <array>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "fakescope/manifest/types.hpp"

namespace fakescope::augment {

// Images below this side length are rejected by geometric operations.
inline constexpr int kMinSide = 16;

enum class PerturbationKind { kJpeg, kResize, kBlur, kNoise, kCutout, kJitter, kScaleCrop, kSocial };

std::string_view to_string(PerturbationKind k);
PerturbationKind perturbation_kind_from_string(std::string_view s);

struct Jitter {
  std::array<double, 3> brightness{};  // additive, fraction of 255, per BGR channel
  std::array<double, 3> contrast{};    // multiplicative delta around mid-gray
};

// Only the field belonging to `kind` is read.
struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::kBlur;
  int jpeg_qf = 100;
  double resize_scale = 1.0;
  double blur_sigma = 0.0;
  double noise_sigma = 0.0;
  double cutout_frac = 0.0;
  Jitter jitter;
  int crop_max = 504;  // scale_crop: resize by resize_scale, then crop to at most this side

  void validate() const;
  // Value of the field that `kind` reads, for reports.
  double param() const;

  static PerturbationSpec jpeg(int qf);
  static PerturbationSpec resize(double scale);
  static PerturbationSpec blur(double sigma);
  static PerturbationSpec noise(double sigma);
  static PerturbationSpec cutout(double frac);
  static PerturbationSpec social();
};

// Deterministic in (image, spec, seed, key). Throws DegenerateSizeError when
// a side would fall below kMinSide.
cv::Mat apply_perturbation(const cv::Mat& image, const PerturbationSpec& spec, std::uint64_t seed,
                           std::string_view key = {});

cv::Mat gaussian_blur(const cv::Mat& image, double sigma);
cv::Mat resize_bicubic(const cv::Mat& image, double scale);
cv::Mat add_noise(const cv::Mat& image, double sigma, std::uint64_t seed, std::string_view key);
// Erases one rectangle covering `frac` of the image to mid-gray. Returns the rectangle.
cv::Mat cutout(const cv::Mat& image, double frac, std::uint64_t seed, std::string_view key,
               cv::Rect* erased = nullptr);
cv::Mat apply_jitter(const cv::Mat& image, const Jitter& jitter);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};
struct IntRange {
  int lo = 0;
  int hi = 0;
};

enum class PolicyName { kStandard, kCutmixMixup, kInpainted, kInpaintedPlus, kInpaintedPlusPlus };

std::string_view to_string(PolicyName p);
PolicyName policy_from_string(std::string_view s);

struct AugPolicy {
  PolicyName name = PolicyName::kStandard;
  std::uint64_t seed = 0;

  double p_blur = 0.5;
  Range blur_sigma{0.0, 3.0};
  double p_jpeg = 0.5;
  IntRange jpeg_qf{30, 100};

  // cutmix_mixup: each pair is cut-mixed with p_cutmix, otherwise mixed up
  // with p_mixup; lambda ~ U(lambda).
  double p_cutmix = 0.5;
  double p_mixup = 0.5;
  Range lambda{0.0, 1.0};

  double p_scale_crop = 0.1;
  Range scale{0.5, 2.0};
  int crop_max = 504;
  double p_cutout = 0.1;
  Range cutout_frac{0.02, 0.25};
  double p_noise = 0.1;
  Range noise_sigma{0.0, 5.0};
  double p_jitter = 0.1;
  double jitter = 0.1;

  static AugPolicy defaults(PolicyName name);
  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep the defaults of the named policy.
  static AugPolicy from_json(const nlohmann::json& j);
};

// Fake variants each policy trains on.
std::vector<manifest::Variant> variants_for_policy(PolicyName name);
bool uses_mixing(PolicyName name);
bool uses_post_processing(PolicyName name);

struct StandardDraw {
  bool blur = false;
  double sigma = 0.0;
  bool jpeg = false;
  int qf = 100;
};
StandardDraw draw_standard(const AugPolicy& policy, std::uint64_t seed, std::string_view key = {});

// Blur then JPEG, each applied with its own probability.
cv::Mat standard_aug(const cv::Mat& image, const AugPolicy& policy, std::uint64_t seed,
                     std::string_view key = {}, StandardDraw* applied = nullptr);

struct CutmixResult {
  cv::Mat image;
  double weight_a = 1.0;  // label weight of A, 1 - pasted fraction
  cv::Rect pasted;
};
CutmixResult cutmix(const cv::Mat& a, const cv::Mat& b, double lambda, std::uint64_t seed,
                    std::string_view key = {});

cv::Mat mixup(const cv::Mat& a, const cv::Mat& b, double lambda);

struct PostDraw {
  bool scale_crop = false;
  double scale = 1.0;
  bool cutout = false;
  double cutout_frac = 0.0;
  bool noise = false;
  double noise_sigma = 0.0;
  bool jitter = false;
  Jitter jitter_values;
};
PostDraw draw_post(const AugPolicy& policy, std::uint64_t seed, std::string_view key = {});

// Scale-crop, cut-out, noise, jitter in that order, each with its own probability.
cv::Mat inpaintedpp_post(const cv::Mat& image, const AugPolicy& policy, std::uint64_t seed,
                         std::string_view key = {}, PostDraw* applied = nullptr);

struct SocialDraw {
  double scale = 1.0;
  int qf = 100;
};
SocialDraw draw_social(std::uint64_t seed, std::string_view key = {});

struct SocialResult {
  cv::Mat image;
  SocialDraw params;
  cv::Size resized;  // size before recompression
};
SocialResult social_network_sim(const cv::Mat& image, std::uint64_t seed, std::string_view key = {});

}  // namespace fakescope::augment
