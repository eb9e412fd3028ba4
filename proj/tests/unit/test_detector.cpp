#include <gtest/gtest.h>

#include <httplib.h>

#include <nlohmann/json.hpp>
#include <numbers>
#include <thread>

#include "fakescope/common/base64.hpp"
#include "fakescope/common/error.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/common/rng.hpp"
#include "fakescope/detector/crops.hpp"
#include "fakescope/detector/features.hpp"
#include "fakescope/detector/probe.hpp"
#include "fakescope/detector/scorer.hpp"
#include "fakescope/genclient/transport.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fakescope;
using namespace fakescope::detector;

namespace {

class ConstantScorer final : public CropScorer {
 public:
  explicit ConstantScorer(double v, int size = 504) : v_(v), size_(size) {}
  double score_crop(const cv::Mat&) override { return v_; }
  int crop_size() const override { return size_; }

 private:
  double v_;
  int size_;
};

// Logit that depends on crop content, to tell crops apart.
class MeanScorer final : public CropScorer {
 public:
  explicit MeanScorer(int size = 504) : size_(size) {}
  double score_crop(const cv::Mat& crop) override {
    EXPECT_EQ(crop.cols, size_);
    EXPECT_EQ(crop.rows, size_);
    return cv::mean(crop)[0] / 255.0 - 0.3 * cv::mean(crop)[2] / 255.0;
  }
  int crop_size() const override { return size_; }

 private:
  int size_;
};

class FailingScorer final : public CropScorer {
 public:
  double score_crop(const cv::Mat&) override {
    if (++calls_ == 3) throw std::runtime_error("backend down");
    return 0.0;
  }
  int crop_size() const override { return 32; }

 private:
  int calls_ = 0;
};

cv::Mat sinusoid(int size, double fx, double fy, double amp = 50.0) {
  cv::Mat g(size, size, CV_64F);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) g.at<double>(y, x) = 128 + amp * std::sin(2 * std::numbers::pi * (fx * x + fy * y));
  return g;
}

}  // namespace

TEST(Crops, StatedGrids) {
  EXPECT_EQ(tile_crops(504, 504, 504), (std::vector<cv::Rect>{{0, 0, 504, 504}}));
  EXPECT_EQ(tile_crops(1008, 504, 504), (std::vector<cv::Rect>{{0, 0, 504, 504}, {504, 0, 504, 504}}));
  const auto g = tile_crops(700, 700, 504);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_EQ(g[0].x, 0);
  EXPECT_EQ(g[1].x, 196);
  EXPECT_EQ(tile_crops(100, 80, 504), (std::vector<cv::Rect>{{0, 0, 504, 504}}));
}

TEST(Crops, CoverImageWithFullSizeCrops) {
  Rng rng(3);
  for (int t = 0; t < 300; ++t) {
    const int c = static_cast<int>(rng.uniform_int(16, 64));
    const int w = static_cast<int>(rng.uniform_int(1, 300)), h = static_cast<int>(rng.uniform_int(1, 300));
    const auto crops = tile_crops(w, h, c);
    cv::Mat cover = cv::Mat::zeros(h, w, CV_8U);
    for (const auto& r : crops) {
      ASSERT_EQ(r.width, c);
      ASSERT_EQ(r.height, c);
      if (w > c) ASSERT_LE(r.x + r.width, w);
      if (h > c) ASSERT_LE(r.y + r.height, h);
      cover(r & cv::Rect(0, 0, w, h)).setTo(1);
    }
    ASSERT_EQ(cv::countNonZero(cover), w * h);
    const int nx = w > c ? (w + c - 1) / c : 1, ny = h > c ? (h + c - 1) / c : 1;
    ASSERT_EQ(static_cast<int>(crops.size()), nx * ny);
  }
}

TEST(Crops, ReflectPaddingForSmallImages) {
  const cv::Mat img = testkit::random_image(20, 10, 1);
  const cv::Mat crop = extract_crop(img, {0, 0, 32, 32});
  ASSERT_EQ(crop.size(), cv::Size(32, 32));
  EXPECT_TRUE(identical(crop(cv::Rect(0, 0, 20, 10)), img));
  EXPECT_EQ(crop.at<cv::Vec3b>(0, 20), img.at<cv::Vec3b>(0, 18));
  EXPECT_EQ(crop.at<cv::Vec3b>(10, 0), img.at<cv::Vec3b>(8, 0));
  // Padding wider than the image still yields a full crop.
  const cv::Mat tiny = testkit::random_image(3, 2, 2);
  EXPECT_EQ(extract_crop(tiny, {0, 0, 32, 32}).size(), cv::Size(32, 32));
}

TEST(ScoreImage, SingleCropIsExactAndLargeImageAveragesCrops) {
  MeanScorer s;
  const cv::Mat img = testkit::random_image(504, 504, 5);
  EXPECT_EQ(score_image(s, img).logit, s.score_crop(img));
  const cv::Mat big = testkit::random_image(1008, 1008, 6);
  double sum = 0;
  for (int y : {0, 504})
    for (int x : {0, 504}) sum += s.score_crop(big(cv::Rect(x, y, 504, 504)).clone());
  const auto sc = score_image(s, big);
  EXPECT_EQ(sc.crops, 4);
  EXPECT_NEAR(sc.logit, sum / 4, 1e-12);
  EXPECT_NEAR(sc.prob, 1 / (1 + std::exp(-sc.logit)), 1e-15);
}

TEST(ScoreImage, ConstantStubAnySize) {
  ConstantScorer s(2.0);
  for (auto [w, h] : {std::pair{504, 504}, {100, 37}, {1200, 700}, {505, 1009}}) {
    EXPECT_EQ(score_image(s, testkit::random_image(w, h, 1)).logit, 2.0);
  }
}

TEST(ScoreImage, FailureNamesCrop) {
  FailingScorer s;
  try {
    score_image(s, testkit::random_image(96, 64, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("crop 2"), std::string::npos) << e.what();
  }
}

TEST(Features, ConstantImageHasOnlyDc) {
  const FeatureSpec spec{8, 64};
  const cv::Mat flat(64, 64, CV_64F, cv::Scalar(77));
  const auto mag = radial_magnitude(flat, 8);
  // DC shares band 0 with the other bins inside its radius.
  int in_band0 = 0;
  for (int v = -32; v < 32; ++v)
    for (int u = -32; u < 32; ++u) in_band0 += std::hypot(u / 64.0, v / 64.0) < 0.5 / 8 ? 1 : 0;
  EXPECT_NEAR(mag[0], 77.0 * 64 / in_band0, 1e-9);
  for (int k = 1; k < 8; ++k) EXPECT_NEAR(mag[k], 0.0, 1e-9);
  const auto f = spectral_features(flat, spec);
  for (int k = 1; k <= 8; ++k) EXPECT_NEAR(f[k], 0.0, 1e-9);
}

TEST(Features, SinusoidLandsInItsBand) {
  const int bands = 16;
  for (double r : {0.06, 0.13, 0.21, 0.33, 0.45}) {
    const double fx = r * std::cos(0.6), fy = r * std::sin(0.6);
    const auto mag = radial_magnitude(sinusoid(128, fx, fy), bands);
    const int expected = static_cast<int>(r * 2 * bands);
    const auto arg = std::max_element(mag.begin() + 1, mag.end()) - mag.begin();
    EXPECT_NEAR(arg, expected, 1) << r;
  }
}

TEST(Features, WhiteNoiseIsFlat) {
  const int bands = 16;
  std::vector<double> avg(bands, 0.0);
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    cv::Mat g(64, 64, CV_64F);
    for (auto it = g.begin<double>(); it != g.end<double>(); ++it) *it = 128 + 20 * rng.normal();
    const auto m = radial_magnitude(g, bands);
    for (int k = 0; k < bands; ++k) avg[k] += m[k];
  }
  const auto [mn, mx] = std::minmax_element(avg.begin() + 1, avg.end());
  EXPECT_LT(*mx / *mn, 2.0);
}

TEST(Features, InvariantToBrightnessOffsetExceptDc) {
  const FeatureSpec spec{12, 64};
  cv::Mat g = sinusoid(64, 0.1, 0.2, 30);
  cv::Mat noise(64, 64, CV_64F);
  cv::randn(noise, 0, 5);
  g += noise;
  const auto a = spectral_features(g, spec);
  const auto b = spectral_features(g + 40.0, spec);
  for (int k = 1; k <= spec.bands; ++k) EXPECT_NEAR(a[k], b[k], 1e-9) << k;
  EXPECT_NE(a[0], b[0]);
  double norm = 0;
  for (int k = 1; k <= spec.bands; ++k) norm += a[k] * a[k];
  EXPECT_NEAR(norm, 1.0, 1e-12);
}

TEST(EarlyStop, ConstantImprovementNeverStops) {
  EarlyStopState s;
  for (int i = 0; i < 30; ++i) {
    const auto step = early_stop_step(s, 0.70 + 0.01 * i);
    EXPECT_TRUE(step.keep_going);
    EXPECT_TRUE(step.improved);
    s = step.state;
  }
}

TEST(EarlyStop, FiveStaleEvaluationsStop) {
  EarlyStopState s;
  s = early_stop_step(s, 0.80).state;
  const double stale[] = {0.8009, 0.79, 0.8, 0.8005, 0.7};
  for (int i = 0; i < 5; ++i) {
    const auto step = early_stop_step(s, stale[i]);
    EXPECT_EQ(step.keep_going, i < 4) << i;
    s = step.state;
  }
}

TEST(EarlyStop, CounterResetsOnEnoughImprovement) {
  const std::vector<double> trace = {0.80, 0.79, 0.79, 0.805, 0.79, 0.79, 0.79, 0.79, 0.79, 0.9};
  EarlyStopState s;
  int stop = -1;
  for (int i = 0; i < static_cast<int>(trace.size()); ++i) {
    const auto step = early_stop_step(s, trace[i]);
    if (i == 3) {
      EXPECT_TRUE(step.improved);
      EXPECT_EQ(step.state.evals_since_improve, 0);
    }
    s = step.state;
    if (!step.keep_going) {
      stop = i;
      break;
    }
  }
  EXPECT_EQ(stop, 8);
  EXPECT_EQ(oracle::simulate_early_stop(trace, 0.001, 5).stop_index, 8);
}

TEST(EarlyStop, NeverMoreThanPatienceStaleEvaluations) {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    EarlyStopState s;
    s.patience = static_cast<int>(rng.uniform_int(1, 7));
    int stale = 0;
    for (int i = 0; i < 100; ++i) {
      const auto step = early_stop_step(s, rng.uniform(0.4, 0.9));
      stale = step.improved ? 0 : stale + 1;
      ASSERT_LE(stale, s.patience);
      s = step.state;
      if (!step.keep_going) {
        ASSERT_EQ(stale, s.patience);
        break;
      }
    }
  }
}

namespace {

struct ToyData {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
};

ToyData toy_data(std::uint64_t seed, int n, int d, double separation, bool shuffle_labels) {
  Rng rng(seed);
  ToyData out;
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    std::vector<double> f(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) f[k] = rng.normal() + (k == 1 ? (label ? separation : -separation) : 0.0);
    out.x.push_back(f);
    out.y.push_back(shuffle_labels ? static_cast<int>(rng.uniform_int(0, 1)) : label);
  }
  return out;
}

ToyProbe fit_toy(const ToyData& train, const ToyData& val, std::uint64_t seed, long max_it = 5000) {
  ProbeSchedule sched;
  sched.batch_size = 16;
  sched.max_iterations = max_it;
  sched.early_stop.eval_interval = 20;
  sched.seed = seed;
  auto next = [&](long i) {
    Rng rng(seed, "batch", std::to_string(i));
    std::vector<Sample> b;
    for (int k = 0; k < 16; ++k) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(train.x.size()) - 1));
      b.push_back({train.x[j], static_cast<double>(train.y[j])});
    }
    return b;
  };
  return fit_probe(FeatureSpec{4, 32}, next, val.x, val.y, sched);
}

}  // namespace

TEST(FitProbe, SeparableReachesPerfectValidationAndStops) {
  const auto train = toy_data(1, 400, 5, 6.0, false), val = toy_data(2, 200, 5, 6.0, false);
  const auto probe = fit_toy(train, val, 3);
  EXPECT_EQ(probe.training_log.best_val_bacc, 1.0);
  EXPECT_TRUE(probe.training_log.stopped_early);
  EXPECT_LT(probe.training_log.iterations, 5000);
}

TEST(FitProbe, ShuffledLabelsStayAtChance) {
  const auto train = toy_data(4, 2000, 5, 1.0, true), val = toy_data(5, 4000, 5, 1.0, true);
  const auto probe = fit_toy(train, val, 6);
  EXPECT_TRUE(probe.training_log.stopped_early);
  for (const auto& e : probe.training_log.evaluations) {
    EXPECT_GE(e.val_bacc, 0.45);
    EXPECT_LE(e.val_bacc, 0.55);
  }
}

TEST(FitProbe, DeterministicAndFoldsStandardisation) {
  const auto train = toy_data(7, 300, 5, 1.5, false), val = toy_data(8, 200, 5, 1.5, false);
  const auto a = fit_toy(train, val, 9), b = fit_toy(train, val, 9);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.bias, b.bias);
  // The stored probe reproduces the recorded best validation bAcc on raw features.
  metrics::ScoreSet s;
  for (std::size_t i = 0; i < val.x.size(); ++i) s.entries.push_back({"", "", sigmoid(a.logit(val.x[i])), val.y[i]});
  EXPECT_NEAR(metrics::balanced_accuracy(s), a.training_log.best_val_bacc, 1e-12);
}

TEST(Probe, JsonRoundTripAndScorer) {
  testkit::TempDir tmp;
  ToyProbe p;
  p.feature_spec = {4, 32};
  p.weights = {0.1, -0.2, 0.3, 0.4, -0.5};
  p.bias = 0.25;
  p.training_log.iterations = 10;
  p.save(tmp / "probe.json");
  const auto q = ToyProbe::load(tmp / "probe.json");
  EXPECT_EQ(q.weights, p.weights);
  EXPECT_EQ(q.bias, p.bias);
  EXPECT_EQ(q.feature_spec, p.feature_spec);
  const auto j = nlohmann::json::parse(read_file(tmp / "probe.json"));
  for (const char* k : {"feature_spec", "weights", "bias", "training_log"}) EXPECT_TRUE(j.contains(k));

  DetectorHandle h;
  h.kind = DetectorKind::kToyProbe;
  h.location = (tmp / "probe.json").string();
  auto scorer = make_scorer(h);
  EXPECT_EQ(scorer->crop_size(), 32);
  const cv::Mat img = testkit::random_image(32, 32, 3);
  EXPECT_NEAR(score_image(*scorer, img).logit, p.logit(image_features(img, p.feature_spec)), 1e-12);
  EXPECT_THROW(p.logit({1.0}), Error);
}

TEST(Onnx, LinearHeadOverChannelMeans) {
  DetectorHandle h;
  h.kind = DetectorKind::kExternalOnnx;
  h.location = std::string(FAKESCOPE_TEST_DATA) + "/tiny.onnx";
  h.mean = {0.5, 0.4, 0.3};
  h.std = {0.2, 0.25, 0.5};
  auto scorer = make_scorer(h);
  const cv::Mat img = testkit::random_image(504, 504, 8);
  const cv::Scalar m = cv::mean(img);  // B, G, R
  const double r = (m[2] / 255.0 - 0.5) / 0.2, g = (m[1] / 255.0 - 0.4) / 0.25, b = (m[0] / 255.0 - 0.3) / 0.5;
  const double expected = 0.5 * r - 0.25 * g + 1.0 * b + 0.1;
  EXPECT_NEAR(scorer->score_crop(img), expected, 1e-3);
  const cv::Mat big = testkit::random_image(1008, 504, 9);
  const double a = scorer->score_crop(big(cv::Rect(0, 0, 504, 504)).clone());
  const double c = scorer->score_crop(big(cv::Rect(504, 0, 504, 504)).clone());
  EXPECT_NEAR(score_image(*scorer, big).logit, (a + c) / 2, 1e-12);
}

TEST(Onnx, MissingModelIsConfigError) {
  DetectorHandle h;
  h.kind = DetectorKind::kExternalOnnx;
  h.location = "/nonexistent/model.onnx";
  EXPECT_THROW(make_scorer(h), Error);
}

TEST(HttpScorerTest, PostsPngAndReadsLogit) {
  httplib::Server server;
  server.Post("/score", [](const httplib::Request& req, httplib::Response& res) {
    const auto j = nlohmann::json::parse(req.body);
    const cv::Mat img = decode_image(base64_decode(j.at("image_png_b64").get<std::string>()));
    res.set_content(nlohmann::json{{"logit", cv::mean(img)[1] / 100.0 + img.cols / 1000.0}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  DetectorHandle h;
  h.kind = DetectorKind::kExternalHttp;
  h.crop_size = 64;
  h.location = "http://127.0.0.1:" + std::to_string(port);
  auto scorer = make_scorer(h);
  const cv::Mat img = testkit::random_image(64, 64, 2);
  EXPECT_NEAR(score_image(*scorer, img).logit, cv::mean(img)[1] / 100.0 + 0.064, 1e-12);
  server.stop();
  th.join();
  EXPECT_THROW(score_image(*scorer, img), Error);
}

TEST(Handle, JsonRoundTripAndValidation) {
  DetectorHandle h;
  h.kind = DetectorKind::kExternalOnnx;
  h.location = "m.onnx";
  h.mean = {0.485, 0.456, 0.406};
  const auto back = DetectorHandle::from_json(h.to_json());
  EXPECT_EQ(back.to_json(), h.to_json());
  h.std[1] = 0.0;
  EXPECT_THROW(h.validate(), Error);
}
