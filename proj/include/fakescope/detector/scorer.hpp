#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <mutex>
#include <opencv2/core.hpp>
#include <string>
#include <vector>

#include "fakescope/detector/probe.hpp"
#include "fakescope/genclient/transport.hpp"

namespace fakescope::detector {

enum class DetectorKind { kExternalOnnx, kExternalHttp, kToyProbe };

std::string_view to_string(DetectorKind k);
DetectorKind detector_kind_from_string(std::string_view s);

struct DetectorHandle {
  DetectorKind kind = DetectorKind::kToyProbe;
  int crop_size = 504;
  std::string location;  // model file, probe JSON, or base URL
  // Applied to RGB values in [0, 1] before an ONNX model sees them.
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};

  void validate() const;
  nlohmann::json to_json() const;
  static DetectorHandle from_json(const nlohmann::json& j);
};

// Produces one logit per crop_size x crop_size BGR crop.
class CropScorer {
 public:
  virtual ~CropScorer() = default;
  virtual double score_crop(const cv::Mat& crop) = 0;
  virtual int crop_size() const = 0;
};

class ProbeScorer final : public CropScorer {
 public:
  explicit ProbeScorer(ToyProbe probe) : probe_(std::move(probe)) {}
  double score_crop(const cv::Mat& crop) override;
  int crop_size() const override { return probe_.feature_spec.crop_size; }
  const ToyProbe& probe() const { return probe_; }

 private:
  ToyProbe probe_;
};

// Model with one N x 3 x S x S float input (RGB, normalised) and N logits out.
// Forward passes are serialised.
class OnnxScorer final : public CropScorer {
 public:
  OnnxScorer(const std::filesystem::path& model, int crop_size, std::array<double, 3> mean,
             std::array<double, 3> std);
  ~OnnxScorer() override;
  double score_crop(const cv::Mat& crop) override;
  int crop_size() const override { return crop_size_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int crop_size_;
  std::array<double, 3> mean_, std_;
  std::mutex mu_;
};

// POST /score {"image_png_b64"} -> {"logit"}.
class HttpScorer final : public CropScorer {
 public:
  HttpScorer(std::unique_ptr<genclient::SidecarTransport> transport, int crop_size)
      : transport_(std::move(transport)), crop_size_(crop_size) {}
  double score_crop(const cv::Mat& crop) override;
  int crop_size() const override { return crop_size_; }

 private:
  std::unique_ptr<genclient::SidecarTransport> transport_;
  int crop_size_;
};

std::unique_ptr<CropScorer> make_scorer(const DetectorHandle& handle);

struct Score {
  double logit = 0.0;
  double prob = 0.5;
  int crops = 0;
};

double sigmoid(double x);

// Mean crop logit over tile_crops. Backend failures are rethrown as Error
// naming the crop index.
Score score_image(CropScorer& scorer, const cv::Mat& image);

}  // namespace fakescope::detector
