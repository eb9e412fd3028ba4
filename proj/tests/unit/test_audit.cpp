#include <gtest/gtest.h>

#include <algorithm>

#include "fakescope/audit/audit.hpp"
#include "fakescope/common/error.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/common/rng.hpp"
#include "fakescope/fixtures/synthetic.hpp"
#include "fakescope/manifest/io.hpp"
#include "refcodec.hpp"
#include "support.hpp"

using namespace fakescope;
using namespace fakescope::audit;
using manifest::Label;

namespace {

// Class-labelled records stored as JPEG at the given QF (0 = PNG).
manifest::DatasetManifest dataset(const std::filesystem::path& dir, const std::vector<int>& real_qf,
                                  const std::vector<int>& fake_qf, int side = 24) {
  manifest::DatasetManifest m;
  m.root = dir;
  auto add = [&](Label label, int i, int qf) {
    manifest::ImageRecord r;
    r.label = label;
    r.id = (label == Label::kReal ? "real" : "fake") + std::to_string(i);
    r.pair_id = label == Label::kReal ? r.id : "real" + std::to_string(i % real_qf.size());
    r.variant = label == Label::kReal ? manifest::Variant::kReal : manifest::Variant::kSelfCond;
    r.width = r.height = side;
    const cv::Mat img = testkit::random_image(side, side, static_cast<std::uint64_t>(i) + (label == Label::kFake ? 100000 : 0));
    if (qf > 0) {
      r.container = Container::kJpeg;
      r.jpeg_qf = qf;
      r.path = "img/" + r.id + ".jpg";
      write_file(dir / r.path, encode_jpeg(img, qf));
    } else {
      r.path = "img/" + r.id + ".png";
      write_file(dir / r.path, encode_png(img));
    }
    m.records.push_back(r);
  };
  for (std::size_t i = 0; i < real_qf.size(); ++i) add(Label::kReal, static_cast<int>(i), real_qf[i]);
  for (std::size_t i = 0; i < fake_qf.size(); ++i) add(Label::kFake, static_cast<int>(i), fake_qf[i]);
  return m;
}

double ecdf_ks(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pts = a;
  pts.insert(pts.end(), b.begin(), b.end());
  double best = 0;
  for (double t : pts) {
    const double fa = std::count_if(a.begin(), a.end(), [&](double v) { return v <= t; }) / double(a.size());
    const double fb = std::count_if(b.begin(), b.end(), [&](double v) { return v <= t; }) / double(b.size());
    best = std::max(best, std::abs(fa - fb));
  }
  return best;
}

}  // namespace

TEST(Qf, EncodeEstimateRoundTrip) {
  const cv::Mat img = fixtures::synth_scene(64, 64, 3).image;
  EXPECT_EQ(estimate_jpeg_qf(encode_jpeg(img, 85)), 85);
  EXPECT_FALSE(estimate_jpeg_qf(encode_png(img)));
  EXPECT_NEAR(*estimate_jpeg_qf(encode_jpeg(img, 96)), 96, 1);
  for (int qf = 50; qf <= 100; ++qf) ASSERT_NEAR(*estimate_jpeg_qf(encode_jpeg(img, qf)), qf, 1) << qf;
  for (int qf : {55, 75, 90}) EXPECT_NEAR(*estimate_jpeg_qf(refcodec::encode(img, qf)), qf, 1);
}

TEST(Qf, ScaledTableMatchesLibjpegScaling) {
  // Standard luminance table (natural order) scaled per the reference encoder.
  const int base[64] = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                        14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                        18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                        49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
  for (int qf : {1, 10, 50, 75, 99, 100}) {
    const int scale = qf < 50 ? 5000 / qf : 200 - 2 * qf;
    const auto t = scaled_luma_table(qf);
    for (int i = 0; i < 64; ++i) ASSERT_EQ(t[i], std::clamp((base[i] * scale + 50) / 100, 1, 255)) << qf << " " << i;
  }
}

TEST(Qf, CorruptFileNamesId) {
  std::string bad = "\xff\xd8\xff\xdb\x00\x05\x00";
  try {
    estimate_jpeg_qf(bad, "img42");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("img42"), std::string::npos);
  }
}

TEST(Ks, MatchesEcdfBruteForce) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a, b;
    for (int i = 0; i < 40; ++i) a.push_back(static_cast<double>(rng.uniform_int(80, 90)));
    for (int i = 0; i < 55; ++i) b.push_back(static_cast<double>(rng.uniform_int(90, 100)));
    ASSERT_NEAR(ks_distance(a, b), ecdf_ks(a, b), 1e-12);
    ASSERT_NEAR(ks_distance(b, a), ks_distance(a, b), 1e-15);
  }
  EXPECT_EQ(ks_distance({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_EQ(ks_distance({1, 1}, {2, 2}), 1.0);
}

TEST(BiasReport, DisjointContainersFlagged) {
  testkit::TempDir tmp;
  const auto m = dataset(tmp.path(), std::vector<int>(6, 85), std::vector<int>(6, 0));
  const auto r = format_bias_report(m);
  EXPECT_EQ(r.ks_container, 1.0);
  EXPECT_TRUE(r.flag_container);
  EXPECT_TRUE(r.flagged());
  EXPECT_EQ(r.real.count, 6);
  long sum = 0;
  for (const auto& [k, v] : r.real.qf) sum += v;
  EXPECT_EQ(sum, 6);
}

TEST(BiasReport, IdenticalDistributionsClean) {
  testkit::TempDir tmp;
  const auto m = dataset(tmp.path(), {80, 90, 0, 70}, {80, 90, 0, 70});
  const auto r = format_bias_report(m);
  EXPECT_EQ(r.ks_container, 0.0);
  EXPECT_EQ(r.ks_qf, 0.0);
  EXPECT_EQ(r.ks_resolution, 0.0);
  EXPECT_FALSE(r.flagged());
}

TEST(BiasReport, QfKsMatchesEcdfAndIsSymmetric) {
  testkit::TempDir tmp;
  Rng rng(9);
  std::vector<int> rq, fq;
  for (int i = 0; i < 30; ++i) rq.push_back(static_cast<int>(rng.uniform_int(80, 90)));
  for (int i = 0; i < 30; ++i) fq.push_back(static_cast<int>(rng.uniform_int(90, 100)));
  auto m = dataset(tmp.path(), rq, fq);
  const auto r = format_bias_report(m);
  std::vector<double> a, b;
  const auto formats = measure_formats(m);
  for (std::size_t i = 0; i < m.records.size(); ++i) (m.records[i].label == Label::kReal ? a : b).push_back(*formats[i].qf);
  EXPECT_NEAR(r.ks_qf, ecdf_ks(a, b), 1e-12);
  EXPECT_TRUE(r.flag_qf);

  // Swapping the class labels leaves the distances unchanged.
  auto swapped = m;
  for (auto& rec : swapped.records) rec.label = rec.label == Label::kReal ? Label::kFake : Label::kReal;
  const auto s = format_bias_report(swapped);
  EXPECT_EQ(s.ks_qf, r.ks_qf);
  EXPECT_EQ(s.ks_container, r.ks_container);
  EXPECT_EQ(s.ks_resolution, r.ks_resolution);
}

TEST(BiasReport, ResolutionSpike) {
  testkit::TempDir tmp;
  auto m = dataset(tmp.path(), std::vector<int>(4, 0), std::vector<int>(4, 0), 32);
  // Resize every real to a different side; fakes all share 32x32.
  for (int i = 0; i < 4; ++i) {
    auto& r = m.records[static_cast<std::size_t>(i)];
    r.width = r.height = 40 + i;
    write_file(m.resolve(r), encode_png(testkit::random_image(40 + i, 40 + i, 7)));
  }
  const auto rep = format_bias_report(m);
  EXPECT_TRUE(rep.flag_resolution_spike);
  EXPECT_FALSE(rep.spike_detail.empty());
}

TEST(BiasReport, SingleClassIsError) {
  testkit::TempDir tmp;
  auto m = dataset(tmp.path(), {80, 90}, {});
  EXPECT_THROW(format_bias_report(m), Error);
}

TEST(Rebalance, ConstantTargetAndRealsUntouched) {
  testkit::TempDir tmp;
  const auto m = dataset(tmp / "in", std::vector<int>(5, 85), std::vector<int>(7, 0));
  const auto out = rebalance_compression(m, tmp / "in_unbiased", 3);
  ASSERT_EQ(out.records.size(), m.records.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    if (m.records[i].label == Label::kReal) {
      EXPECT_EQ(read_file(out.resolve(out.records[i])), read_file(m.resolve(m.records[i])));
      EXPECT_EQ(out.records[i].container, m.records[i].container);
    } else {
      EXPECT_EQ(out.records[i].jpeg_qf, 85);
      EXPECT_EQ(estimate_jpeg_qf(read_file(out.resolve(out.records[i]))), 85);
    }
  }
  out.validate();
  const auto after = format_bias_report(out);
  EXPECT_LT(after.ks_qf, 0.1);
  EXPECT_FALSE(after.flagged());
}

TEST(Rebalance, LosslessRealsHaveNoTarget) {
  testkit::TempDir tmp;
  const auto m = dataset(tmp.path(), {0, 0}, {0});
  try {
    rebalance_compression(m, tmp / "o", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no target distribution"), std::string::npos);
  }
}

TEST(Rebalance, SizesPreservedAtScale) {
  testkit::TempDir tmp;
  Rng rng(2);
  std::vector<int> rq(5000), fq(5000, 0);
  for (auto& q : rq) q = static_cast<int>(rng.uniform_int(70, 95));
  const auto m = dataset(tmp / "big", rq, fq, 8);
  const auto out = rebalance_compression(m, tmp / "big_unbiased", 4);
  EXPECT_EQ(out.count(Label::kReal), 5000u);
  EXPECT_EQ(out.count(Label::kFake), 5000u);
  EXPECT_LT(format_bias_report(out).ks_qf, 0.1);
}
