#include "support.hpp"

#include <unistd.h>

#include <atomic>
#include <opencv2/imgproc.hpp>

#include "fakescope/common/image_io.hpp"
#include "fakescope/common/rng.hpp"

namespace fakescope::testkit {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter.fetch_add(1)));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

cv::Mat random_image(int width, int height, std::uint64_t seed) {
  cv::Mat m(height, width, CV_8UC3);
  Rng rng(seed);
  for (auto it = m.begin<cv::Vec3b>(); it != m.end<cv::Vec3b>(); ++it) {
    const auto v = rng.next_u64();
    (*it)[0] = static_cast<uchar>(v);
    (*it)[1] = static_cast<uchar>(v >> 8);
    (*it)[2] = static_cast<uchar>(v >> 16);
  }
  return m;
}

cv::Mat constant_image(int width, int height, int value) {
  return cv::Mat(height, width, CV_8UC3, cv::Scalar::all(value));
}

manifest::DatasetManifest write_reals(const fs::path& dir, int n, int side, std::uint64_t seed, int objects) {
  manifest::DatasetManifest m;
  m.root = dir;
  m.taxonomy = {{"cat", "animal"}, {"dog", "animal"}, {"horse", "animal"}, {"chair", "furniture"},
                {"car", "vehicle"}, {"bus", "vehicle"}};
  const std::vector<std::string> cats = {"cat", "dog", "horse", "chair", "car", "bus"};
  Rng rng(seed, "write_reals");
  for (int i = 0; i < n; ++i) {
    manifest::ImageRecord r;
    r.id = "r" + std::to_string(i);
    r.path = "reals/" + r.id + ".png";
    r.pair_id = r.id;
    r.generator_tag = "pristine";
    r.source_tag = "test";
    r.width = side;
    r.height = side;
    cv::Mat img = random_image(side, side, seed * 1000 + static_cast<std::uint64_t>(i));
    cv::GaussianBlur(img, img, cv::Size(0, 0), 2.0);
    write_file(dir / r.path, encode_png(img));
    for (int k = 0; k < objects; ++k) {
      const int w = static_cast<int>(rng.uniform_int(4, side / 2));
      const int h = static_cast<int>(rng.uniform_int(4, side / 2));
      const Rect box{static_cast<int>(rng.uniform_int(0, side - w)), static_cast<int>(rng.uniform_int(0, side - h)), w, h};
      const auto mask = BinaryMask::from_rect(side, side, box);
      const auto& cat = cats[static_cast<std::size_t>(rng.uniform_int(0, 5))];
      m.annotations.push_back({r.id, cat, m.taxonomy.at(cat), mask.to_rle(), box});
    }
    m.records.push_back(r);
  }
  return m;
}

metrics::ScoreSet random_scores(std::uint64_t seed, int n, bool coarse) {
  Rng rng(seed, "random_scores");
  metrics::ScoreSet s;
  for (int i = 0; i < n; ++i) {
    metrics::ScoreEntry e;
    e.id = std::to_string(i);
    e.group = "g";
    e.label = i == 0 ? 0 : i == 1 ? 1 : static_cast<int>(rng.uniform_int(0, 1));
    double p = rng.uniform();
    if (coarse) p = static_cast<double>(rng.uniform_int(0, 20)) / 20.0;
    e.prob = p;
    s.entries.push_back(e);
  }
  return s;
}

}  // namespace fakescope::testkit
