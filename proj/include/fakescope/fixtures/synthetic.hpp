#pragma once

#include <cstdint>
#include <filesystem>
#include <opencv2/core.hpp>
#include <optional>
#include <string>
#include <vector>

namespace fakescope::fixtures {

// Procedural stand-ins for natural photographs.
enum class SceneStyle {
  kSmooth,  // few large objects, soft gradients, little fine texture
  kBusy,    // many small textured objects over a textured background
  kMixed,   // either of the above, chosen per image
};

struct SceneObject {
  std::string category;
  std::vector<double> polygon;  // x0, y0, x1, y1, ...
  cv::Rect bbox;
};

struct Scene {
  cv::Mat image;  // 8-bit BGR
  std::vector<SceneObject> objects;
};

// Category -> supercategory table used by generated fixtures.
const std::vector<std::pair<std::string, std::string>>& fixture_categories();

Scene synth_scene(int width, int height, std::uint64_t seed, SceneStyle style = SceneStyle::kMixed);

struct FixtureOptions {
  std::filesystem::path dir;
  int count = 20;
  int min_side = 96;
  int max_side = 160;
  bool square = false;
  std::uint64_t seed = 1;
  SceneStyle style = SceneStyle::kMixed;
  std::optional<int> jpeg_qf;  // store as JPEG at this quality, PNG otherwise
  // Every n-th image gets a non-Creative-Commons license (0 = none).
  int restricted_every = 0;
  std::string prefix = "img";
};

struct FixturePaths {
  std::filesystem::path images;
  std::filesystem::path annotations;
};

// Writes images plus a COCO-style annotation file with polygon masks.
FixturePaths write_coco_fixture(const FixtureOptions& options);

}  // namespace fakescope::fixtures
