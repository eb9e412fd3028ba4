#pragma once

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>
#include <vector>

namespace fakescope::detector {

struct FeatureSpec {
  int bands = 32;
  int crop_size = 504;

  // bands + 1 edges in cycles/pixel, uniform over [0, 0.5].
  std::vector<double> band_edges() const;
  int dimension() const { return bands + 1; }
  void validate() const;

  nlohmann::json to_json() const;
  static FeatureSpec from_json(const nlohmann::json& j);
  bool operator==(const FeatureSpec&) const = default;
};

// Radially averaged log spectrum of a single-channel image.
//
// Element 0 is the band holding DC, left unnormalised. Elements 1..bands-1
// are the remaining bands and the last element is log1p of the Laplacian
// residual variance; together they are scaled to unit L2 norm. Band k holds
// frequencies with radius in [k, k+1) * 0.5 / bands cycles/pixel; corner
// frequencies beyond 0.5 are dropped. Magnitudes are |F| / sqrt(rows * cols)
// so white noise of standard deviation s has expected magnitude about s.
std::vector<double> spectral_features(const cv::Mat& gray, const FeatureSpec& spec);

// Raw per-band means of |F| / sqrt(rows * cols), before log scaling.
std::vector<double> radial_magnitude(const cv::Mat& gray, int bands);

}  // namespace fakescope::detector
