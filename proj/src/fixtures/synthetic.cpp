#include "fakescope/fixtures/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <numbers>
#include <opencv2/imgproc.hpp>

#include "fakescope/common/error.hpp"
#include "fakescope/common/hash.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/common/rng.hpp"

namespace fakescope::fixtures {

using nlohmann::json;

namespace {

cv::Vec3d random_color(Rng& rng) { return {rng.uniform(30, 225), rng.uniform(30, 225), rng.uniform(30, 225)}; }

// Sum of a few oriented gratings, zero mean.
void add_gratings(cv::Mat& f, Rng& rng, int n, double fmin, double fmax, double amp_lo, double amp_hi) {
  for (int g = 0; g < n; ++g) {
    const double freq = rng.uniform(fmin, fmax);
    const double theta = rng.uniform(0, std::numbers::pi);
    const double phase = rng.uniform(0, 2 * std::numbers::pi);
    const double amp = rng.uniform(amp_lo, amp_hi);
    const double kx = 2 * std::numbers::pi * freq * std::cos(theta);
    const double ky = 2 * std::numbers::pi * freq * std::sin(theta);
    for (int y = 0; y < f.rows; ++y) {
      auto* row = f.ptr<cv::Vec3d>(y);
      for (int x = 0; x < f.cols; ++x) {
        const double v = amp * std::sin(kx * x + ky * y + phase);
        row[x] += cv::Vec3d(v, v, v);
      }
    }
  }
}

void add_noise(cv::Mat& f, Rng& rng, double sigma) {
  for (int y = 0; y < f.rows; ++y) {
    auto* row = f.ptr<cv::Vec3d>(y);
    for (int x = 0; x < f.cols; ++x) {
      const double l = sigma * rng.normal();
      row[x] += cv::Vec3d(l + 0.3 * sigma * rng.normal(), l, l + 0.3 * sigma * rng.normal());
    }
  }
}

std::vector<cv::Point> blob_polygon(Rng& rng, cv::Point2d center, double radius) {
  const int n = static_cast<int>(rng.uniform_int(6, 10));
  std::vector<cv::Point> pts;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * std::numbers::pi * (i + rng.uniform(-0.3, 0.3)) / n;
    const double r = radius * rng.uniform(0.6, 1.0);
    pts.emplace_back(static_cast<int>(std::lround(center.x + r * std::cos(a))),
                     static_cast<int>(std::lround(center.y + r * std::sin(a))));
  }
  return pts;
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& fixture_categories() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"person", "person"}, {"dog", "animal"},    {"cat", "animal"},      {"horse", "animal"},
      {"car", "vehicle"},   {"bus", "vehicle"},   {"bicycle", "vehicle"}, {"chair", "furniture"},
      {"cup", "kitchen"},   {"bowl", "kitchen"}};
  return table;
}

Scene synth_scene(int width, int height, std::uint64_t seed, SceneStyle style) {
  if (width < 8 || height < 8) throw Error("synthetic scenes need at least 8x8 pixels");
  Rng rng(seed, "synth_scene");
  if (style == SceneStyle::kMixed) style = rng.bernoulli(0.5) ? SceneStyle::kSmooth : SceneStyle::kBusy;
  const bool busy = style == SceneStyle::kBusy;

  // Background: vertical blend of two colours.
  cv::Mat f(height, width, CV_64FC3);
  const cv::Vec3d top = random_color(rng), bottom = random_color(rng);
  for (int y = 0; y < height; ++y) {
    const double t = static_cast<double>(y) / std::max(1, height - 1);
    auto* row = f.ptr<cv::Vec3d>(y);
    for (int x = 0; x < width; ++x) row[x] = top * (1 - t) + bottom * t;
  }
  if (busy) {
    add_gratings(f, rng, 3, 0.08, 0.42, 6, 16);
  } else {
    add_gratings(f, rng, 2, 0.005, 0.03, 8, 20);
  }

  Scene scene;
  const int n_objects = busy ? static_cast<int>(rng.uniform_int(4, 8)) : static_cast<int>(rng.uniform_int(1, 3));
  const auto& cats = fixture_categories();
  const double side = std::min(width, height);
  for (int k = 0; k < n_objects; ++k) {
    const double radius = busy ? side * rng.uniform(0.08, 0.18) : side * rng.uniform(0.2, 0.35);
    const cv::Point2d c(rng.uniform(radius * 0.5, width - radius * 0.5), rng.uniform(radius * 0.5, height - radius * 0.5));
    const auto pts = blob_polygon(rng, c, radius);
    cv::Mat mask = cv::Mat::zeros(height, width, CV_8U);
    cv::fillPoly(mask, std::vector<std::vector<cv::Point>>{pts}, cv::Scalar(255));
    if (cv::countNonZero(mask) == 0) continue;

    cv::Mat fill(height, width, CV_64FC3, cv::Scalar::all(0));
    fill.setTo(cv::Scalar(random_color(rng)));
    if (busy) {
      add_gratings(fill, rng, 2, 0.1, 0.45, 10, 25);
    } else {
      add_gratings(fill, rng, 1, 0.01, 0.04, 5, 15);
    }
    if (!busy) {
      // Soft object edges.
      cv::Mat soft;
      cv::GaussianBlur(mask, soft, cv::Size(0, 0), 1.5);
      for (int y = 0; y < height; ++y) {
        auto* dst = f.ptr<cv::Vec3d>(y);
        const auto* src = fill.ptr<cv::Vec3d>(y);
        const auto* a = soft.ptr<std::uint8_t>(y);
        for (int x = 0; x < width; ++x) {
          const double w = a[x] / 255.0;
          dst[x] = dst[x] * (1 - w) + src[x] * w;
        }
      }
    } else {
      fill.copyTo(f, mask);
    }

    SceneObject obj;
    obj.category = cats[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cats.size()) - 1))].first;
    for (const auto& p : pts) {
      obj.polygon.push_back(std::clamp(p.x, 0, width - 1));
      obj.polygon.push_back(std::clamp(p.y, 0, height - 1));
    }
    obj.bbox = cv::boundingRect(mask);
    scene.objects.push_back(std::move(obj));
  }

  add_noise(f, rng, busy ? 4.0 : 1.5);
  f.convertTo(scene.image, CV_8UC3);
  return scene;
}

FixturePaths write_coco_fixture(const FixtureOptions& o) {
  if (o.count < 0 || o.min_side < 8 || o.max_side < o.min_side) throw Error("invalid fixture options");
  FixturePaths paths{o.dir / "images", o.dir / "annotations.json"};
  std::filesystem::create_directories(paths.images);

  json doc;
  doc["info"] = {{"description", "synthetic fixture"}, {"seed", o.seed}};
  doc["licenses"] = json::array({{{"id", 1}, {"name", "Attribution License"}, {"url", "http://creativecommons.org/licenses/by/2.0/"}},
                                 {{"id", 2}, {"name", "All rights reserved"}, {"url", ""}}});
  doc["categories"] = json::array();
  const auto& cats = fixture_categories();
  for (std::size_t i = 0; i < cats.size(); ++i) {
    doc["categories"].push_back({{"id", i + 1}, {"name", cats[i].first}, {"supercategory", cats[i].second}});
  }
  doc["images"] = json::array();
  doc["annotations"] = json::array();

  Rng sizes(o.seed, "fixture_sizes");
  long ann_id = 1;
  for (int i = 0; i < o.count; ++i) {
    const int w = static_cast<int>(sizes.uniform_int(o.min_side, o.max_side));
    const int h = o.square ? w : static_cast<int>(sizes.uniform_int(o.min_side, o.max_side));
    const Scene scene = synth_scene(w, h, derive_seed(o.seed, o.prefix, std::to_string(i)), o.style);
    char name[64];
    std::snprintf(name, sizeof name, "%s_%04d.%s", o.prefix.c_str(), i, o.jpeg_qf ? "jpg" : "png");
    write_file(paths.images / name, o.jpeg_qf ? encode_jpeg(scene.image, *o.jpeg_qf) : encode_png(scene.image));
    const int license = (o.restricted_every > 0 && (i + 1) % o.restricted_every == 0) ? 2 : 1;
    doc["images"].push_back({{"id", i + 1}, {"file_name", name}, {"width", w}, {"height", h}, {"license", license}});
    for (const auto& obj : scene.objects) {
      std::int64_t cat_id = 0;
      for (std::size_t c = 0; c < cats.size(); ++c) {
        if (cats[c].first == obj.category) cat_id = static_cast<std::int64_t>(c) + 1;
      }
      doc["annotations"].push_back({{"id", ann_id++},
                                    {"image_id", i + 1},
                                    {"category_id", cat_id},
                                    {"iscrowd", 0},
                                    {"segmentation", json::array({obj.polygon})},
                                    {"bbox", {obj.bbox.x, obj.bbox.y, obj.bbox.width, obj.bbox.height}},
                                    {"area", obj.bbox.area()}});
    }
  }
  write_file(paths.annotations, doc.dump());
  return paths;
}

}  // namespace fakescope::fixtures
