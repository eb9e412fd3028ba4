#include "fakescope/detector/scorer.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <opencv2/dnn.hpp>

#include "fakescope/common/base64.hpp"
#include "fakescope/common/error.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/detector/crops.hpp"

namespace fakescope::detector {

using nlohmann::json;

std::string_view to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::kExternalOnnx: return "external_onnx";
    case DetectorKind::kExternalHttp: return "external_http";
    case DetectorKind::kToyProbe: return "toy_probe";
  }
  return "?";
}

DetectorKind detector_kind_from_string(std::string_view s) {
  for (auto k : {DetectorKind::kExternalOnnx, DetectorKind::kExternalHttp, DetectorKind::kToyProbe}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown detector kind: " + std::string(s));
}

void DetectorHandle::validate() const {
  if (crop_size < 32) throw ConfigError("detector crop_size must be at least 32");
  for (double s : std) {
    if (!(s > 0.0)) throw ConfigError("normalization std must be positive");
  }
}

json DetectorHandle::to_json() const {
  return json{{"kind", to_string(kind)}, {"crop_size", crop_size}, {"location", location},
              {"mean", mean}, {"std", std}};
}

DetectorHandle DetectorHandle::from_json(const json& j) {
  try {
    DetectorHandle h;
    h.kind = detector_kind_from_string(j.value("kind", "toy_probe"));
    h.crop_size = j.value("crop_size", h.crop_size);
    h.location = j.value("location", "");
    if (j.contains("mean")) h.mean = j.at("mean").get<std::array<double, 3>>();
    if (j.contains("std")) h.std = j.at("std").get<std::array<double, 3>>();
    h.validate();
    return h;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed detector handle: ") + e.what());
  }
}

double ProbeScorer::score_crop(const cv::Mat& crop) {
  return probe_.logit(spectral_features(luma(crop), probe_.feature_spec));
}

struct OnnxScorer::Impl {
  cv::dnn::Net net;
};

OnnxScorer::OnnxScorer(const std::filesystem::path& model, int crop_size, std::array<double, 3> mean,
                       std::array<double, 3> std)
    : impl_(std::make_unique<Impl>()), crop_size_(crop_size), mean_(mean), std_(std) {
  try {
    impl_->net = cv::dnn::readNetFromONNX(model.string());
  } catch (const cv::Exception& e) {
    throw Error("cannot load ONNX model " + model.string() + ": " + e.what());
  }
  if (impl_->net.empty()) throw Error("empty ONNX model " + model.string());
}

OnnxScorer::~OnnxScorer() = default;

double OnnxScorer::score_crop(const cv::Mat& crop) {
  if (crop.cols != crop_size_ || crop.rows != crop_size_) throw Error("crop has the wrong size");
  cv::Mat blob = cv::dnn::blobFromImage(crop, 1.0 / 255.0, cv::Size(), cv::Scalar(), true, false, CV_32F);
  const int plane = crop_size_ * crop_size_;
  auto* data = blob.ptr<float>();
  for (int c = 0; c < 3; ++c) {
    const auto m = static_cast<float>(mean_[c]);
    const auto s = static_cast<float>(std_[c]);
    for (int i = 0; i < plane; ++i) data[c * plane + i] = (data[c * plane + i] - m) / s;
  }
  std::lock_guard lock(mu_);
  try {
    impl_->net.setInput(blob);
    const cv::Mat out = impl_->net.forward();
    if (out.total() < 1) throw Error("ONNX model returned no output");
    return static_cast<double>(out.ptr<float>()[0]);
  } catch (const cv::Exception& e) {
    throw Error(std::string("ONNX forward failed: ") + e.what());
  }
}

double HttpScorer::score_crop(const cv::Mat& crop) {
  const json body{{"image_png_b64", base64_encode(encode_png(crop))}};
  const auto res = transport_->post("/score", body.dump());
  if (res.status != 200) {
    throw Error("scorer returned " + (res.status == 0 ? res.body : "HTTP " + std::to_string(res.status)));
  }
  try {
    return json::parse(res.body).at("logit").get<double>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed scorer response: ") + e.what());
  }
}

std::unique_ptr<CropScorer> make_scorer(const DetectorHandle& handle) {
  handle.validate();
  switch (handle.kind) {
    case DetectorKind::kToyProbe: {
      ToyProbe probe = ToyProbe::load(handle.location);
      if (probe.feature_spec.crop_size != handle.crop_size) {
        spdlog::info("toy probe uses its own crop size {} (handle says {})", probe.feature_spec.crop_size,
                     handle.crop_size);
      }
      return std::make_unique<ProbeScorer>(std::move(probe));
    }
    case DetectorKind::kExternalOnnx:
      return std::make_unique<OnnxScorer>(handle.location, handle.crop_size, handle.mean, handle.std);
    case DetectorKind::kExternalHttp:
      return std::make_unique<HttpScorer>(genclient::make_transport(handle.location), handle.crop_size);
  }
  throw ConfigError("unhandled detector kind");
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Score score_image(CropScorer& scorer, const cv::Mat& image) {
  if (image.empty()) throw Error("cannot score an empty image");
  const auto crops = tile_crops(image.cols, image.rows, scorer.crop_size());
  double sum = 0.0;
  for (std::size_t i = 0; i < crops.size(); ++i) {
    try {
      sum += scorer.score_crop(extract_crop(image, crops[i]));
    } catch (const std::exception& e) {
      throw Error("crop " + std::to_string(i) + ": " + e.what());
    }
  }
  Score s;
  s.crops = static_cast<int>(crops.size());
  s.logit = sum / static_cast<double>(crops.size());
  s.prob = sigmoid(s.logit);
  return s;
}

}  // namespace fakescope::detector
