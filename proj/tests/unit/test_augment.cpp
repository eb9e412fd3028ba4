#include <gtest/gtest.h>

#include <opencv2/imgproc.hpp>

#include "fakescope/augment/augment.hpp"
#include "fakescope/common/error.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/common/rng.hpp"
#include "fakescope/fixtures/synthetic.hpp"
#include "refcodec.hpp"
#include "support.hpp"

using namespace fakescope;
using namespace fakescope::augment;

namespace {

AugPolicy all_off(PolicyName name = PolicyName::kStandard) {
  AugPolicy p = AugPolicy::defaults(name);
  p.p_blur = p.p_jpeg = 0.0;
  p.p_scale_crop = p.p_cutout = p.p_noise = p.p_jitter = 0.0;
  return p;
}

int max_abs_diff(const cv::Mat& a, const cv::Mat& b) {
  cv::Mat d;
  cv::absdiff(a, b, d);
  double mx = 0;
  cv::minMaxLoc(d.reshape(1), nullptr, &mx);
  return static_cast<int>(mx);
}

}  // namespace

TEST(Perturbation, IdentityParameters) {
  const cv::Mat img = testkit::random_image(64, 48, 1);
  EXPECT_TRUE(identical(apply_perturbation(img, PerturbationSpec::blur(0.0), 1), img));
  EXPECT_TRUE(identical(apply_perturbation(img, PerturbationSpec::resize(1.0), 1), img));
  EXPECT_TRUE(identical(apply_perturbation(img, PerturbationSpec::noise(0.0), 1, "k"), img));
  EXPECT_TRUE(identical(apply_perturbation(img, PerturbationSpec::cutout(0.0), 1, "k"), img));
}

TEST(Perturbation, JpegMatchesReferenceCodec) {
  const cv::Mat img = fixtures::synth_scene(96, 80, 4).image;
  const cv::Mat ours = apply_perturbation(img, PerturbationSpec::jpeg(75), 0);
  const cv::Mat ref = refcodec::decode(refcodec::encode(img, 75));
  EXPECT_TRUE(identical(ours, ref)) << "max diff " << max_abs_diff(ours, ref);
}

TEST(Perturbation, JpegIdempotentWithinOne) {
  const cv::Mat img = fixtures::synth_scene(64, 64, 9).image;
  for (int qf : {50, 75, 95}) {
    const cv::Mat once = jpeg_roundtrip(img, qf);
    EXPECT_LE(max_abs_diff(jpeg_roundtrip(once, qf), once), 1) << qf;
  }
}

TEST(Perturbation, BlurMatchesSeparableKernel) {
  const cv::Mat img = testkit::random_image(40, 30, 3);
  const double sigma = 1.3;
  const int r = static_cast<int>(std::ceil(4 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0;
  for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-i * i / (2 * sigma * sigma));
  for (auto& v : k) v /= sum;
  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
    return i;
  };
  const cv::Mat ours = gaussian_blur(img, sigma);
  int worst = 0;
  for (int y = 0; y < img.rows; ++y)
    for (int x = 0; x < img.cols; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx)
            acc += k[dy + r] * k[dx + r] * img.at<cv::Vec3b>(reflect(y + dy, img.rows), reflect(x + dx, img.cols))[c];
        worst = std::max(worst, std::abs(ours.at<cv::Vec3b>(y, x)[c] - static_cast<int>(std::lround(acc))));
      }
  EXPECT_LE(worst, 1);
}

TEST(Perturbation, DegenerateSize) {
  const cv::Mat img = testkit::random_image(40, 40, 3);
  EXPECT_THROW(apply_perturbation(img, PerturbationSpec::resize(0.3), 1), DegenerateSizeError);
  EXPECT_EQ(apply_perturbation(img, PerturbationSpec::resize(0.4), 1).cols, 16);
  EXPECT_THROW(PerturbationSpec::jpeg(0).validate(), Error);
  EXPECT_THROW(PerturbationSpec::blur(-1).validate(), Error);
}

TEST(Perturbation, Deterministic) {
  const cv::Mat img = testkit::random_image(50, 50, 5);
  for (const auto& spec : {PerturbationSpec::noise(3), PerturbationSpec::cutout(0.2), PerturbationSpec::social()}) {
    EXPECT_TRUE(identical(apply_perturbation(img, spec, 7, "a"), apply_perturbation(img, spec, 7, "a")));
  }
  EXPECT_FALSE(identical(apply_perturbation(img, PerturbationSpec::noise(3), 7, "a"),
                         apply_perturbation(img, PerturbationSpec::noise(3), 7, "b")));
}

TEST(StandardAug, ProbabilityZeroIsIdentity) {
  const cv::Mat img = testkit::random_image(32, 32, 2);
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_TRUE(identical(standard_aug(img, all_off(), s, "r"), img));
}

TEST(StandardAug, DrawsReproduceAndApply) {
  AugPolicy p = AugPolicy::defaults(PolicyName::kStandard);
  const cv::Mat img = fixtures::synth_scene(48, 48, 2).image;
  std::uint64_t seed = 0;
  StandardDraw d;
  for (; seed < 1000; ++seed) {
    d = draw_standard(p, seed, "x");
    if (d.blur && d.jpeg) break;
  }
  ASSERT_TRUE(d.blur && d.jpeg);
  StandardDraw applied;
  const cv::Mat out = standard_aug(img, p, seed, "x", &applied);
  EXPECT_EQ(applied.sigma, d.sigma);
  EXPECT_EQ(applied.qf, d.qf);
  EXPECT_TRUE(identical(out, jpeg_roundtrip(gaussian_blur(img, d.sigma), d.qf)));
  EXPECT_GE(d.sigma, 0.0);
  EXPECT_LE(d.sigma, 3.0);
  EXPECT_GE(d.qf, 30);
  EXPECT_LE(d.qf, 100);
}

TEST(StandardAug, ApplicationRatesMatchProbabilities) {
  AugPolicy p = AugPolicy::defaults(PolicyName::kStandard);
  p.p_blur = 0.3;
  p.p_jpeg = 0.65;
  int blur = 0, jpeg = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto d = draw_standard(p, 11, "rec" + std::to_string(i));
    blur += d.blur;
    jpeg += d.jpeg;
  }
  EXPECT_NEAR(blur / double(n), 0.3, 0.02);
  EXPECT_NEAR(jpeg / double(n), 0.65, 0.02);
}

TEST(Cutmix, LambdaExtremes) {
  const cv::Mat a = testkit::random_image(30, 20, 1), b = testkit::random_image(30, 20, 2);
  auto r = cutmix(a, b, 1.0, 3);
  EXPECT_TRUE(identical(r.image, a));
  EXPECT_EQ(r.weight_a, 1.0);
  r = cutmix(a, b, 0.0, 3);
  EXPECT_TRUE(identical(r.image, b));
  EXPECT_EQ(r.weight_a, 0.0);
  EXPECT_THROW(cutmix(a, testkit::random_image(20, 20, 1), 0.5, 1), Error);
}

TEST(Cutmix, PastedAreaAccounting) {
  const cv::Mat a = testkit::constant_image(100, 100, 0), b = testkit::constant_image(100, 100, 255);
  const auto r = cutmix(a, b, 0.75, 5);
  EXPECT_NEAR(r.pasted.area(), 2500, 100);
  cv::Mat ch;
  cv::extractChannel(r.image, ch, 0);
  EXPECT_EQ(cv::countNonZero(ch), r.pasted.area());
  EXPECT_NEAR(r.weight_a, 1.0 - r.pasted.area() / 10000.0, 1e-15);
}

TEST(Cutmix, FractionTracksLambdaProperty) {
  Rng rng(4);
  for (int t = 0; t < 300; ++t) {
    const int w = static_cast<int>(rng.uniform_int(16, 120)), h = static_cast<int>(rng.uniform_int(16, 120));
    const double lambda = rng.uniform();
    const auto r = cutmix(testkit::constant_image(w, h, 0), testkit::constant_image(w, h, 9), lambda, rng.next_u64());
    const double frac = r.pasted.area() / double(w * h);
    ASSERT_NEAR(frac, 1.0 - lambda, 2.0 / std::min(w, h)) << w << "x" << h << " lambda " << lambda;
  }
}

TEST(Mixup, ArithmeticAndRoundingBound) {
  EXPECT_TRUE(identical(mixup(testkit::constant_image(8, 8, 100), testkit::constant_image(8, 8, 200), 1.0),
                        testkit::constant_image(8, 8, 100)));
  EXPECT_TRUE(identical(mixup(testkit::constant_image(8, 8, 100), testkit::constant_image(8, 8, 200), 0.5),
                        testkit::constant_image(8, 8, 150)));
  const cv::Mat a = testkit::random_image(37, 23, 1), b = testkit::random_image(37, 23, 2);
  const cv::Mat m = mixup(a, b, 0.3);
  double worst = 0;
  for (int y = 0; y < a.rows; ++y)
    for (int x = 0; x < a.cols; ++x)
      for (int c = 0; c < 3; ++c) {
        const double real = 0.3 * a.at<cv::Vec3b>(y, x)[c] + 0.7 * b.at<cv::Vec3b>(y, x)[c];
        worst = std::max(worst, std::abs(m.at<cv::Vec3b>(y, x)[c] - real));
      }
  EXPECT_LE(worst, 0.5 + 1e-9);
}

TEST(PlusPlus, AllOffIsIdentityAndDeterministic) {
  const cv::Mat img = testkit::random_image(60, 60, 3);
  EXPECT_TRUE(identical(inpaintedpp_post(img, all_off(PolicyName::kInpaintedPlusPlus), 1, "r"), img));
  AugPolicy p = AugPolicy::defaults(PolicyName::kInpaintedPlusPlus);
  p.p_scale_crop = p.p_cutout = p.p_noise = p.p_jitter = 1.0;
  p.crop_max = 48;
  const cv::Mat a = inpaintedpp_post(img, p, 9, "r"), b = inpaintedpp_post(img, p, 9, "r");
  EXPECT_TRUE(identical(a, b));
  EXPECT_LE(a.cols, 48);
}

TEST(PlusPlus, CutoutErasesOneMidGrayRectangle) {
  const cv::Mat img = testkit::constant_image(200, 200, 10);
  cv::Rect erased;
  const cv::Mat out = cutout(img, 0.1, 3, "k", &erased);
  cv::Mat gray;
  cv::inRange(out, cv::Scalar::all(128), cv::Scalar::all(128), gray);
  EXPECT_EQ(cv::countNonZero(gray), erased.area());
  EXPECT_NEAR(erased.area(), 4000, 200);
  EXPECT_EQ(cv::countNonZero(gray(erased)), erased.area());
}

TEST(PlusPlus, OpStreamsAreIndependent) {
  AugPolicy p = AugPolicy::defaults(PolicyName::kInpaintedPlusPlus);
  AugPolicy q = p;
  q.p_noise = 0.9;  // changes only the noise decision
  for (int i = 0; i < 200; ++i) {
    const auto a = draw_post(p, 5, std::to_string(i)), b = draw_post(q, 5, std::to_string(i));
    ASSERT_EQ(a.scale_crop, b.scale_crop);
    ASSERT_EQ(a.scale, b.scale);
    ASSERT_EQ(a.cutout, b.cutout);
    ASSERT_EQ(a.jitter, b.jitter);
  }
}

TEST(Social, ParameterBoundsAndSize) {
  for (int i = 0; i < 10000; ++i) {
    const auto d = draw_social(static_cast<std::uint64_t>(i), "img");
    ASSERT_GE(d.scale, 0.7);
    ASSERT_LE(d.scale, 1.0);
    ASSERT_GE(d.qf, 70);
    ASSERT_LE(d.qf, 100);
  }
  EXPECT_EQ(draw_social(3, "x").qf, draw_social(3, "x").qf);
  EXPECT_EQ(static_cast<int>(std::lround(0.7 * 504)), 353);
  const cv::Mat img = testkit::random_image(504, 504, 1);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto r = social_network_sim(img, s, "a");
    EXPECT_EQ(r.resized.width, static_cast<int>(std::lround(r.params.scale * 504)));
    EXPECT_EQ(r.image.size(), r.resized);
  }
}

TEST(Policy, VariantSetsAndJson) {
  EXPECT_EQ(variants_for_policy(PolicyName::kStandard).size(), 1u);
  EXPECT_EQ(variants_for_policy(PolicyName::kInpainted).size(), 4u);
  EXPECT_EQ(variants_for_policy(PolicyName::kInpaintedPlus).size(), 6u);
  EXPECT_TRUE(uses_post_processing(PolicyName::kInpaintedPlusPlus));
  EXPECT_FALSE(uses_post_processing(PolicyName::kInpaintedPlus));
  EXPECT_TRUE(uses_mixing(PolicyName::kCutmixMixup));
  AugPolicy p = AugPolicy::defaults(PolicyName::kInpaintedPlusPlus);
  p.p_blur = 0.25;
  const auto back = AugPolicy::from_json(p.to_json());
  EXPECT_EQ(back.to_json(), p.to_json());
  EXPECT_THROW(policy_from_string("bogus"), Error);
  p.p_jpeg = 2;
  EXPECT_THROW(p.validate(), Error);
}
