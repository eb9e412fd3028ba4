#include "fakescope/genclient/mock_sidecar.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <opencv2/imgproc.hpp>

#include "fakescope/common/base64.hpp"
#include "fakescope/common/error.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/common/rng.hpp"
#include "fakescope/genclient/request.hpp"

namespace fakescope::genclient {

using nlohmann::json;

namespace {

int gaussian_ksize(double sigma) { return 2 * static_cast<int>(std::ceil(4.0 * sigma)) + 1; }

cv::Mat blurred(const cv::Mat& src, double sigma) {
  cv::Mat out;
  const int k = gaussian_ksize(sigma);
  cv::GaussianBlur(src, out, cv::Size(k, k), sigma, sigma, cv::BORDER_REFLECT_101);
  return out;
}

}  // namespace

void add_fingerprint(cv::Mat& image_f64, const MockConfig& config) {
  CV_Assert(image_f64.type() == CV_64FC3);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int y = 0; y < image_f64.rows; ++y) {
    auto* row = image_f64.ptr<cv::Vec3d>(y);
    for (int x = 0; x < image_f64.cols; ++x) {
      const double v = config.fingerprint_amplitude *
                       std::sin(two_pi * (config.fingerprint_freq_x * x + config.fingerprint_freq_y * y));
      row[x] += cv::Vec3d(v, v, v);
    }
  }
}

cv::Mat mock_inpaint(const cv::Mat& image, const BinaryMask& mask, const std::string& prompt,
                     std::uint64_t seed, const MockConfig& config) {
  if (mask.width() != image.cols || mask.height() != image.rows) {
    throw Error("mask and image dimensions differ");
  }
  cv::Mat out;
  if (mask.popcount() == 0) {
    cv::Mat f;
    image.convertTo(f, CV_64FC3);
    f = blurred(f, config.lowpass_sigma);
    add_fingerprint(f, config);
    f.convertTo(out, CV_8UC3);
    return out;
  }
  Rng rng(seed, prompt, "mock_fill");
  cv::Mat noise(image.rows, image.cols, CV_64FC3);
  for (int y = 0; y < noise.rows; ++y) {
    auto* row = noise.ptr<cv::Vec3d>(y);
    for (int x = 0; x < noise.cols; ++x) {
      row[x] = cv::Vec3d(rng.normal(), rng.normal(), rng.normal()) * config.fill_noise_std;
    }
  }
  cv::Mat fill = blurred(noise, config.fill_noise_sigma) + cv::Scalar::all(128.0);
  add_fingerprint(fill, config);
  cv::Mat fill8;
  fill.convertTo(fill8, CV_8UC3);
  out = image.clone();
  fill8.copyTo(out, mask.to_mat());
  return out;
}

HttpResult MockSidecar::get(const std::string& path) {
  if (path != "/health") return {404, R"({"error":"not found"})"};
  ++health_calls_;
  return {200, json{{"status", "ok"}, {"model_id", config_.model_id}, {"mock", true}}.dump()};
}

HttpResult MockSidecar::post(const std::string& path, const std::string& json_body) {
  if (path != "/inpaint") return {404, R"({"error":"not found"})"};
  ++inpaint_calls_;
  if (int budget = fail_budget_.load(); budget > 0 && fail_budget_.compare_exchange_strong(budget, budget - 1)) {
    return {500, R"({"error":"injected failure"})"};
  }
  try {
    const InpaintRequest req = InpaintRequest::from_json(json_body);
    const cv::Mat image = decode_image(req.reference_png);
    if (req.mask.width() != image.cols || req.mask.height() != image.rows) {
      return {400, R"({"error":"mask and image dimensions differ"})"};
    }
    const cv::Mat out = mock_inpaint(image, req.mask, req.prompt, req.seed, config_);
    return {200, json{{"image_png_b64", base64_encode(encode_png(out))}}.dump()};
  } catch (const Error& e) {
    return {400, json{{"error", e.what()}}.dump()};
  }
}

}  // namespace fakescope::genclient
