#include "fakescope/augment/augment.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/imgproc.hpp>

#include "fakescope/common/error.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/common/rng.hpp"

namespace fakescope::augment {

using nlohmann::json;

namespace {

void require_bgr(const cv::Mat& image) {
  if (image.empty() || image.type() != CV_8UC3) throw Error("expected a non-empty 8-bit BGR image");
}

void require_same_size(const cv::Mat& a, const cv::Mat& b) {
  require_bgr(a);
  require_bgr(b);
  if (a.size() != b.size()) {
    throw Error("dimension mismatch: " + std::to_string(a.cols) + "x" + std::to_string(a.rows) +
                " vs " + std::to_string(b.cols) + "x" + std::to_string(b.rows));
  }
}

int scaled(int dim, double scale) { return static_cast<int>(std::lround(scale * dim)); }

cv::Mat resize_to(const cv::Mat& image, int width, int height) {
  cv::Mat out;
  cv::resize(image, out, cv::Size(width, height), 0, 0, cv::INTER_CUBIC);
  return out;
}

cv::Mat random_crop(const cv::Mat& image, int crop_max, Rng& rng) {
  const int w = std::min(image.cols, crop_max);
  const int h = std::min(image.rows, crop_max);
  const int x = static_cast<int>(rng.uniform_int(0, image.cols - w));
  const int y = static_cast<int>(rng.uniform_int(0, image.rows - h));
  return image(cv::Rect(x, y, w, h)).clone();
}

cv::Mat scale_crop(const cv::Mat& image, double scale, int crop_max, Rng& rng) {
  const int w = std::max(1, scaled(image.cols, scale));
  const int h = std::max(1, scaled(image.rows, scale));
  cv::Mat resized = (w == image.cols && h == image.rows) ? image.clone() : resize_to(image, w, h);
  return random_crop(resized, crop_max, rng);
}

cv::Mat cutout_with(const cv::Mat& image, double frac, Rng& rng, cv::Rect* erased) {
  const int W = image.cols, H = image.rows;
  const int w = std::clamp(static_cast<int>(std::lround(W * std::sqrt(frac))), 0, W);
  const int h = w == 0 ? 0
                       : std::clamp(static_cast<int>(std::lround(frac * W * H / w)), 0, H);
  const int x = static_cast<int>(rng.uniform_int(0, W - w));
  const int y = static_cast<int>(rng.uniform_int(0, H - h));
  cv::Mat out = image.clone();
  const cv::Rect r(x, y, w, h);
  if (r.area() > 0) out(r).setTo(cv::Scalar(128, 128, 128));
  if (erased) *erased = r;
  return out;
}

cv::Mat noise_with(const cv::Mat& image, double sigma, Rng& rng) {
  cv::Mat out = image.clone();
  if (sigma <= 0.0) return out;
  for (int y = 0; y < out.rows; ++y) {
    auto* row = out.ptr<std::uint8_t>(y);
    for (int i = 0; i < out.cols * 3; ++i) {
      row[i] = cv::saturate_cast<std::uint8_t>(std::lround(row[i] + sigma * rng.normal()));
    }
  }
  return out;
}

Jitter draw_jitter(double amount, Rng& rng) {
  Jitter j;
  for (int c = 0; c < 3; ++c) j.brightness[c] = rng.uniform(-amount, amount);
  for (int c = 0; c < 3; ++c) j.contrast[c] = rng.uniform(-amount, amount);
  return j;
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
}

void check_range(const Range& r, const char* name) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    throw ConfigError(std::string(name) + " range is empty");
  }
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }
json range_json(const IntRange& r) { return json::array({r.lo, r.hi}); }

void read_range(const json& j, const char* key, Range& r) {
  if (!j.contains(key)) return;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 2) throw ConfigError(std::string(key) + " must be [lo, hi]");
  r = {a[0].get<double>(), a[1].get<double>()};
}

void read_range(const json& j, const char* key, IntRange& r) {
  if (!j.contains(key)) return;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 2) throw ConfigError(std::string(key) + " must be [lo, hi]");
  r = {a[0].get<int>(), a[1].get<int>()};
}

}  // namespace

std::string_view to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::kJpeg: return "jpeg";
    case PerturbationKind::kResize: return "resize";
    case PerturbationKind::kBlur: return "blur";
    case PerturbationKind::kNoise: return "noise";
    case PerturbationKind::kCutout: return "cutout";
    case PerturbationKind::kJitter: return "jitter";
    case PerturbationKind::kScaleCrop: return "scale_crop";
    case PerturbationKind::kSocial: return "social";
  }
  return "?";
}

PerturbationKind perturbation_kind_from_string(std::string_view s) {
  for (auto k : {PerturbationKind::kJpeg, PerturbationKind::kResize, PerturbationKind::kBlur,
                 PerturbationKind::kNoise, PerturbationKind::kCutout, PerturbationKind::kJitter,
                 PerturbationKind::kScaleCrop, PerturbationKind::kSocial}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown perturbation kind: " + std::string(s));
}

void PerturbationSpec::validate() const {
  switch (kind) {
    case PerturbationKind::kJpeg:
      if (jpeg_qf < 1 || jpeg_qf > 100) throw ConfigError("jpeg_qf must be in 1..100");
      break;
    case PerturbationKind::kResize:
    case PerturbationKind::kScaleCrop:
      if (!(resize_scale > 0.0)) throw ConfigError("resize_scale must be positive");
      if (crop_max < kMinSide) throw ConfigError("crop_max too small");
      break;
    case PerturbationKind::kBlur:
      if (!(blur_sigma >= 0.0)) throw ConfigError("blur_sigma must be non-negative");
      break;
    case PerturbationKind::kNoise:
      if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
      break;
    case PerturbationKind::kCutout:
      if (!(cutout_frac >= 0.0 && cutout_frac <= 1.0)) throw ConfigError("cutout_frac must be in [0, 1]");
      break;
    case PerturbationKind::kJitter:
    case PerturbationKind::kSocial:
      break;
  }
}

double PerturbationSpec::param() const {
  switch (kind) {
    case PerturbationKind::kJpeg: return jpeg_qf;
    case PerturbationKind::kResize:
    case PerturbationKind::kScaleCrop: return resize_scale;
    case PerturbationKind::kBlur: return blur_sigma;
    case PerturbationKind::kNoise: return noise_sigma;
    case PerturbationKind::kCutout: return cutout_frac;
    case PerturbationKind::kJitter: return jitter.brightness[0];
    case PerturbationKind::kSocial: return 0.0;
  }
  return 0.0;
}

PerturbationSpec PerturbationSpec::jpeg(int qf) {
  PerturbationSpec s;
  s.kind = PerturbationKind::kJpeg;
  s.jpeg_qf = qf;
  return s;
}
PerturbationSpec PerturbationSpec::resize(double scale) {
  PerturbationSpec s;
  s.kind = PerturbationKind::kResize;
  s.resize_scale = scale;
  return s;
}
PerturbationSpec PerturbationSpec::blur(double sigma) {
  PerturbationSpec s;
  s.kind = PerturbationKind::kBlur;
  s.blur_sigma = sigma;
  return s;
}
PerturbationSpec PerturbationSpec::noise(double sigma) {
  PerturbationSpec s;
  s.kind = PerturbationKind::kNoise;
  s.noise_sigma = sigma;
  return s;
}
PerturbationSpec PerturbationSpec::cutout(double frac) {
  PerturbationSpec s;
  s.kind = PerturbationKind::kCutout;
  s.cutout_frac = frac;
  return s;
}
PerturbationSpec PerturbationSpec::social() {
  PerturbationSpec s;
  s.kind = PerturbationKind::kSocial;
  return s;
}

cv::Mat gaussian_blur(const cv::Mat& image, double sigma) {
  require_bgr(image);
  if (sigma <= 0.0) return image.clone();
  const int k = 2 * static_cast<int>(std::ceil(4.0 * sigma)) + 1;
  cv::Mat out;
  cv::GaussianBlur(image, out, cv::Size(k, k), sigma, sigma, cv::BORDER_REFLECT_101);
  return out;
}

cv::Mat resize_bicubic(const cv::Mat& image, double scale) {
  require_bgr(image);
  if (scale == 1.0) return image.clone();
  const int w = scaled(image.cols, scale);
  const int h = scaled(image.rows, scale);
  if (w < kMinSide || h < kMinSide) {
    throw DegenerateSizeError("degenerate size: " + std::to_string(w) + "x" + std::to_string(h) +
                              " after resize by " + std::to_string(scale));
  }
  return resize_to(image, w, h);
}

cv::Mat add_noise(const cv::Mat& image, double sigma, std::uint64_t seed, std::string_view key) {
  require_bgr(image);
  Rng rng(seed, key, "noise");
  return noise_with(image, sigma, rng);
}

cv::Mat cutout(const cv::Mat& image, double frac, std::uint64_t seed, std::string_view key,
               cv::Rect* erased) {
  require_bgr(image);
  Rng rng(seed, key, "cutout");
  return cutout_with(image, frac, rng, erased);
}

cv::Mat apply_jitter(const cv::Mat& image, const Jitter& jitter) {
  require_bgr(image);
  cv::Mat out(image.size(), image.type());
  for (int y = 0; y < image.rows; ++y) {
    const auto* src = image.ptr<cv::Vec3b>(y);
    auto* dst = out.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.cols; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = (src[x][c] - 128.0) * (1.0 + jitter.contrast[c]) + 128.0 +
                         255.0 * jitter.brightness[c];
        dst[x][c] = cv::saturate_cast<std::uint8_t>(std::lround(v));
      }
    }
  }
  return out;
}

cv::Mat apply_perturbation(const cv::Mat& image, const PerturbationSpec& spec, std::uint64_t seed,
                           std::string_view key) {
  require_bgr(image);
  spec.validate();
  switch (spec.kind) {
    case PerturbationKind::kJpeg: return jpeg_roundtrip(image, spec.jpeg_qf);
    case PerturbationKind::kResize: return resize_bicubic(image, spec.resize_scale);
    case PerturbationKind::kBlur: return gaussian_blur(image, spec.blur_sigma);
    case PerturbationKind::kNoise: return add_noise(image, spec.noise_sigma, seed, key);
    case PerturbationKind::kCutout: return cutout(image, spec.cutout_frac, seed, key);
    case PerturbationKind::kJitter: return apply_jitter(image, spec.jitter);
    case PerturbationKind::kScaleCrop: {
      cv::Mat resized = resize_bicubic(image, spec.resize_scale);
      Rng rng(seed, key, "scale_crop");
      return random_crop(resized, spec.crop_max, rng);
    }
    case PerturbationKind::kSocial: return social_network_sim(image, seed, key).image;
  }
  throw Error("unhandled perturbation kind");
}

std::string_view to_string(PolicyName p) {
  switch (p) {
    case PolicyName::kStandard: return "standard";
    case PolicyName::kCutmixMixup: return "cutmix_mixup";
    case PolicyName::kInpainted: return "inpainted";
    case PolicyName::kInpaintedPlus: return "inpainted_plus";
    case PolicyName::kInpaintedPlusPlus: return "inpainted_plus_plus";
  }
  return "?";
}

PolicyName policy_from_string(std::string_view s) {
  for (auto p : {PolicyName::kStandard, PolicyName::kCutmixMixup, PolicyName::kInpainted,
                 PolicyName::kInpaintedPlus, PolicyName::kInpaintedPlusPlus}) {
    if (to_string(p) == s) return p;
  }
  throw ConfigError("unknown augmentation policy: " + std::string(s));
}

AugPolicy AugPolicy::defaults(PolicyName name) {
  AugPolicy p;
  p.name = name;
  return p;
}

void AugPolicy::validate() const {
  check_probability(p_blur, "p_blur");
  check_probability(p_jpeg, "p_jpeg");
  check_probability(p_cutmix, "p_cutmix");
  check_probability(p_mixup, "p_mixup");
  check_probability(p_scale_crop, "p_scale_crop");
  check_probability(p_cutout, "p_cutout");
  check_probability(p_noise, "p_noise");
  check_probability(p_jitter, "p_jitter");
  check_range(blur_sigma, "blur_sigma");
  check_range(lambda, "lambda");
  check_range(scale, "scale");
  check_range(cutout_frac, "cutout_frac");
  check_range(noise_sigma, "noise_sigma");
  if (blur_sigma.lo < 0.0 || noise_sigma.lo < 0.0) throw ConfigError("sigma ranges must be non-negative");
  if (lambda.lo < 0.0 || lambda.hi > 1.0) throw ConfigError("lambda range must lie in [0, 1]");
  if (scale.lo <= 0.0) throw ConfigError("scale range must be positive");
  if (cutout_frac.lo < 0.0 || cutout_frac.hi > 1.0) throw ConfigError("cutout_frac range must lie in [0, 1]");
  if (jpeg_qf.lo > jpeg_qf.hi || jpeg_qf.lo < 1 || jpeg_qf.hi > 100) {
    throw ConfigError("jpeg_qf range must be non-empty within 1..100");
  }
  if (crop_max < kMinSide) throw ConfigError("crop_max too small");
  if (!(jitter >= 0.0 && jitter < 1.0)) throw ConfigError("jitter must lie in [0, 1)");
}

json AugPolicy::to_json() const {
  return json{{"name", to_string(name)},
              {"seed", seed},
              {"p_blur", p_blur},
              {"blur_sigma", range_json(blur_sigma)},
              {"p_jpeg", p_jpeg},
              {"jpeg_qf", range_json(jpeg_qf)},
              {"p_cutmix", p_cutmix},
              {"p_mixup", p_mixup},
              {"lambda", range_json(lambda)},
              {"p_scale_crop", p_scale_crop},
              {"scale", range_json(scale)},
              {"crop_max", crop_max},
              {"p_cutout", p_cutout},
              {"cutout_frac", range_json(cutout_frac)},
              {"p_noise", p_noise},
              {"noise_sigma", range_json(noise_sigma)},
              {"p_jitter", p_jitter},
              {"jitter", jitter}};
}

AugPolicy AugPolicy::from_json(const json& j) {
  try {
    AugPolicy p = defaults(policy_from_string(j.value("name", "standard")));
    p.seed = j.value("seed", p.seed);
    p.p_blur = j.value("p_blur", p.p_blur);
    read_range(j, "blur_sigma", p.blur_sigma);
    p.p_jpeg = j.value("p_jpeg", p.p_jpeg);
    read_range(j, "jpeg_qf", p.jpeg_qf);
    p.p_cutmix = j.value("p_cutmix", p.p_cutmix);
    p.p_mixup = j.value("p_mixup", p.p_mixup);
    read_range(j, "lambda", p.lambda);
    p.p_scale_crop = j.value("p_scale_crop", p.p_scale_crop);
    read_range(j, "scale", p.scale);
    p.crop_max = j.value("crop_max", p.crop_max);
    p.p_cutout = j.value("p_cutout", p.p_cutout);
    read_range(j, "cutout_frac", p.cutout_frac);
    p.p_noise = j.value("p_noise", p.p_noise);
    read_range(j, "noise_sigma", p.noise_sigma);
    p.p_jitter = j.value("p_jitter", p.p_jitter);
    p.jitter = j.value("jitter", p.jitter);
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed augmentation policy: ") + e.what());
  }
}

std::vector<manifest::Variant> variants_for_policy(PolicyName name) {
  using manifest::Variant;
  switch (name) {
    case PolicyName::kStandard:
    case PolicyName::kCutmixMixup: return {Variant::kSelfCond};
    case PolicyName::kInpainted:
      return {Variant::kSelfCond, Variant::kSelfCondBg, Variant::kInpaintSame,
              Variant::kInpaintSameBg};
    case PolicyName::kInpaintedPlus:
    case PolicyName::kInpaintedPlusPlus:
      return {manifest::kFakeVariants.begin(), manifest::kFakeVariants.end()};
  }
  return {};
}

bool uses_mixing(PolicyName name) { return name == PolicyName::kCutmixMixup; }
bool uses_post_processing(PolicyName name) { return name == PolicyName::kInpaintedPlusPlus; }

StandardDraw draw_standard(const AugPolicy& policy, std::uint64_t seed, std::string_view key) {
  StandardDraw d;
  Rng blur(seed, key, "standard.blur");
  d.blur = blur.bernoulli(policy.p_blur);
  d.sigma = blur.uniform(policy.blur_sigma.lo, policy.blur_sigma.hi);
  Rng jpeg(seed, key, "standard.jpeg");
  d.jpeg = jpeg.bernoulli(policy.p_jpeg);
  d.qf = static_cast<int>(jpeg.uniform_int(policy.jpeg_qf.lo, policy.jpeg_qf.hi));
  return d;
}

cv::Mat standard_aug(const cv::Mat& image, const AugPolicy& policy, std::uint64_t seed,
                     std::string_view key, StandardDraw* applied) {
  require_bgr(image);
  const StandardDraw d = draw_standard(policy, seed, key);
  if (applied) *applied = d;
  cv::Mat out = d.blur ? gaussian_blur(image, d.sigma) : image.clone();
  if (d.jpeg) out = jpeg_roundtrip(out, d.qf);
  return out;
}

CutmixResult cutmix(const cv::Mat& a, const cv::Mat& b, double lambda, std::uint64_t seed,
                    std::string_view key) {
  require_same_size(a, b);
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("cutmix lambda must lie in [0, 1]");
  const int W = a.cols, H = a.rows;
  const double side = std::sqrt(1.0 - lambda);
  const int w = std::clamp(static_cast<int>(std::lround(W * side)), 0, W);
  const int h = std::clamp(static_cast<int>(std::lround(H * side)), 0, H);
  Rng rng(seed, key, "cutmix");
  const int x = static_cast<int>(rng.uniform_int(0, W - w));
  const int y = static_cast<int>(rng.uniform_int(0, H - h));
  CutmixResult r;
  r.image = a.clone();
  r.pasted = cv::Rect(x, y, w, h);
  if (r.pasted.area() > 0) b(r.pasted).copyTo(r.image(r.pasted));
  r.weight_a = 1.0 - static_cast<double>(r.pasted.area()) / (static_cast<double>(W) * H);
  return r;
}

cv::Mat mixup(const cv::Mat& a, const cv::Mat& b, double lambda) {
  require_same_size(a, b);
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("mixup lambda must lie in [0, 1]");
  cv::Mat out(a.size(), a.type());
  const int n = a.cols * 3;
  for (int y = 0; y < a.rows; ++y) {
    const auto* pa = a.ptr<std::uint8_t>(y);
    const auto* pb = b.ptr<std::uint8_t>(y);
    auto* po = out.ptr<std::uint8_t>(y);
    for (int i = 0; i < n; ++i) {
      po[i] = static_cast<std::uint8_t>(std::lround(lambda * pa[i] + (1.0 - lambda) * pb[i]));
    }
  }
  return out;
}

PostDraw draw_post(const AugPolicy& policy, std::uint64_t seed, std::string_view key) {
  PostDraw d;
  Rng sc(seed, key, "post.scale_crop");
  d.scale_crop = sc.bernoulli(policy.p_scale_crop);
  d.scale = sc.uniform(policy.scale.lo, policy.scale.hi);
  Rng co(seed, key, "post.cutout");
  d.cutout = co.bernoulli(policy.p_cutout);
  d.cutout_frac = co.uniform(policy.cutout_frac.lo, policy.cutout_frac.hi);
  Rng no(seed, key, "post.noise");
  d.noise = no.bernoulli(policy.p_noise);
  d.noise_sigma = no.uniform(policy.noise_sigma.lo, policy.noise_sigma.hi);
  Rng ji(seed, key, "post.jitter");
  d.jitter = ji.bernoulli(policy.p_jitter);
  d.jitter_values = draw_jitter(policy.jitter, ji);
  return d;
}

cv::Mat inpaintedpp_post(const cv::Mat& image, const AugPolicy& policy, std::uint64_t seed,
                         std::string_view key, PostDraw* applied) {
  require_bgr(image);
  const PostDraw d = draw_post(policy, seed, key);
  if (applied) *applied = d;
  cv::Mat out = image.clone();
  if (d.scale_crop) {
    Rng rng(seed, key, "post.scale_crop.position");
    out = scale_crop(out, d.scale, policy.crop_max, rng);
  }
  if (d.cutout) {
    Rng rng(seed, key, "post.cutout.position");
    out = cutout_with(out, d.cutout_frac, rng, nullptr);
  }
  if (d.noise) {
    Rng rng(seed, key, "post.noise.samples");
    out = noise_with(out, d.noise_sigma, rng);
  }
  if (d.jitter) out = apply_jitter(out, d.jitter_values);
  return out;
}

SocialDraw draw_social(std::uint64_t seed, std::string_view key) {
  Rng rng(seed, key, "social");
  SocialDraw d;
  d.scale = rng.uniform(0.7, 1.0);
  d.qf = static_cast<int>(rng.uniform_int(70, 100));
  return d;
}

SocialResult social_network_sim(const cv::Mat& image, std::uint64_t seed, std::string_view key) {
  SocialResult r;
  r.params = draw_social(seed, key);
  const cv::Mat resized = resize_bicubic(image, r.params.scale);
  r.resized = resized.size();
  r.image = jpeg_roundtrip(resized, r.params.qf);
  return r;
}

}  // namespace fakescope::augment
