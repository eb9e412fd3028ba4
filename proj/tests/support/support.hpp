#pragma once

#include <filesystem>
#include <opencv2/core.hpp>
#include <string>
#include <vector>

#include "fakescope/manifest/types.hpp"
#include "fakescope/metrics/metrics.hpp"

namespace fakescope::testkit {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "fs");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

// Uniform random 8-bit BGR image.
cv::Mat random_image(int width, int height, std::uint64_t seed);
cv::Mat constant_image(int width, int height, int value);

// Manifest of `n` reals written as PNG under dir/reals, each with `objects`
// rectangular annotations, rooted at dir.
manifest::DatasetManifest write_reals(const std::filesystem::path& dir, int n, int side, std::uint64_t seed,
                                      int objects = 2);

// Random ScoreSet with both classes present; probabilities optionally snapped
// to a coarse grid to produce ties.
metrics::ScoreSet random_scores(std::uint64_t seed, int n, bool coarse = false);

}  // namespace fakescope::testkit
