#include "fakescope/detector/features.hpp"

#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "fakescope/common/error.hpp"

namespace fakescope::detector {

using nlohmann::json;

std::vector<double> FeatureSpec::band_edges() const {
  std::vector<double> edges(static_cast<std::size_t>(bands) + 1);
  for (int k = 0; k <= bands; ++k) edges[k] = 0.5 * k / bands;
  return edges;
}

void FeatureSpec::validate() const {
  if (bands < 2) throw ConfigError("feature spec needs at least two bands");
  if (crop_size < 32) throw ConfigError("crop_size must be at least 32");
}

json FeatureSpec::to_json() const {
  return json{{"bands", bands}, {"band_edges", band_edges()}, {"crop_size", crop_size}};
}

FeatureSpec FeatureSpec::from_json(const json& j) {
  FeatureSpec s;
  s.bands = j.value("bands", s.bands);
  s.crop_size = j.value("crop_size", s.crop_size);
  s.validate();
  return s;
}

std::vector<double> radial_magnitude(const cv::Mat& gray, int bands) {
  if (gray.empty() || gray.channels() != 1) throw Error("radial_magnitude needs a single-channel image");
  cv::Mat f64;
  gray.convertTo(f64, CV_64F);
  cv::Mat spectrum;
  cv::dft(f64, spectrum, cv::DFT_COMPLEX_OUTPUT);

  const int H = f64.rows, W = f64.cols;
  const double norm = std::sqrt(static_cast<double>(H) * W);
  std::vector<double> sum(static_cast<std::size_t>(bands), 0.0);
  std::vector<long> count(static_cast<std::size_t>(bands), 0);
  for (int v = 0; v < H; ++v) {
    const double fy = static_cast<double>(v <= H / 2 ? v : v - H) / H;
    const auto* row = spectrum.ptr<cv::Vec2d>(v);
    for (int u = 0; u < W; ++u) {
      const double fx = static_cast<double>(u <= W / 2 ? u : u - W) / W;
      const double r = std::hypot(fx, fy);
      if (r >= 0.5) continue;
      const int k = std::min(bands - 1, static_cast<int>(r * 2.0 * bands));
      sum[k] += std::hypot(row[u][0], row[u][1]) / norm;
      ++count[k];
    }
  }
  for (int k = 0; k < bands; ++k) {
    if (count[k] > 0) sum[k] /= static_cast<double>(count[k]);
  }
  return sum;
}

std::vector<double> spectral_features(const cv::Mat& gray, const FeatureSpec& spec) {
  const std::vector<double> mag = radial_magnitude(gray, spec.bands);
  std::vector<double> out(static_cast<std::size_t>(spec.dimension()));
  out[0] = std::log1p(mag[0]);
  for (int k = 1; k < spec.bands; ++k) out[k] = std::log1p(mag[k]);

  cv::Mat f64, residual;
  gray.convertTo(f64, CV_64F);
  const cv::Matx33d laplacian(0, 1, 0, 1, -4, 1, 0, 1, 0);
  cv::filter2D(f64, residual, CV_64F, laplacian, cv::Point(-1, -1), 0, cv::BORDER_REFLECT_101);
  cv::Scalar mean, stddev;
  cv::meanStdDev(residual, mean, stddev);
  out[spec.bands] = std::log1p(stddev[0] * stddev[0]);

  double norm = 0.0;
  for (std::size_t i = 1; i < out.size(); ++i) norm += out[i] * out[i];
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (std::size_t i = 1; i < out.size(); ++i) out[i] /= norm;
  }
  return out;
}

}  // namespace fakescope::detector
