#include <gtest/gtest.h>

#include <map>

#include "fakescope/common/base64.hpp"
#include "fakescope/common/error.hpp"
#include "fakescope/common/hash.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/common/mask.hpp"
#include "fakescope/common/parallel.hpp"
#include "fakescope/common/rng.hpp"
#include "support.hpp"

using namespace fakescope;

TEST(Hash, Fnv1aKnownVectors) {
  EXPECT_EQ(Fnv1a64{}.value(), 0xcbf29ce484222325ULL);
  EXPECT_EQ(Fnv1a64{}.text("a").value(), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(Fnv1a64{}.text("foobar").value(), 0x85944171f73967e8ULL);
}

TEST(Hash, DeriveSeedLayout) {
  // le64(seed) || key || 0x00 || stream, hashed byte by byte.
  const std::uint64_t seed = 0x0102030405060708ULL;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto eat = [&](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (int i = 0; i < 8; ++i) eat(static_cast<unsigned char>(seed >> (8 * i)));
  for (char c : std::string("rec7")) eat(static_cast<unsigned char>(c));
  eat(0);
  for (char c : std::string("blur")) eat(static_cast<unsigned char>(c));
  EXPECT_EQ(derive_seed(seed, "rec7", "blur"), h);
  EXPECT_NE(derive_seed(seed, "rec7", "blur"), derive_seed(seed, "rec7b", "lur"));
}

TEST(Hash, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(hex_u64(0xabc), "0000000000000abc");
}

TEST(Base64, KnownAndRoundTrip) {
  EXPECT_EQ(base64_encode(""), "");
  EXPECT_EQ(base64_encode("f"), "Zg==");
  EXPECT_EQ(base64_encode("fo"), "Zm8=");
  EXPECT_EQ(base64_encode("foobar"), "Zm9vYmFy");
  Rng rng(5);
  for (int n = 0; n < 64; ++n) {
    std::string bytes;
    for (int i = 0; i < n; ++i) bytes.push_back(static_cast<char>(rng.next_u64()));
    EXPECT_EQ(base64_decode(base64_encode(bytes)), bytes);
  }
  EXPECT_THROW(base64_decode("Zm9v!mFy"), Error);
}

TEST(Rng, SplitmixReferenceSequence) {
  Rng rng(0);
  EXPECT_EQ(rng.next_u64(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rng.next_u64(), 0x6e789e6aa1b965f4ULL);
}

TEST(Rng, UniformIntCoversRangeEvenly) {
  Rng rng(11, "test");
  std::map<std::int64_t, int> counts;
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto v = rng.uniform_int(-3, 3);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 3);
    ++counts[v];
  }
  for (const auto& [v, c] : counts) EXPECT_NEAR(c, n / 7.0, 5 * std::sqrt(n / 7.0)) << v;
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, StreamsAreIndependentOfEachOther) {
  Rng a(3, "rec", "blur"), b(3, "rec", "blur"), c(3, "rec", "jpeg");
  EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(Rng(3, "rec", "blur").next_u64(), c.next_u64());
}

TEST(Mask, RleRoundTripRandomMasks) {
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const int w = static_cast<int>(rng.uniform_int(1, 40)), h = static_cast<int>(rng.uniform_int(1, 40));
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) m.set(x, y, rng.bernoulli(0.3));
    const Rle rle = m.to_rle();
    EXPECT_EQ(BinaryMask::from_rle(rle), m);
    EXPECT_EQ(rle_area(rle), m.popcount());
    EXPECT_EQ(rle_from_string(rle_to_string(rle), h, w), rle);
  }
}

TEST(Mask, RleIsColumnMajorStartingWithZeros) {
  BinaryMask m(3, 2);
  m.set(0, 0, true);  // first pixel set: leading zero run is empty
  m.set(1, 1, true);
  const Rle rle = m.to_rle();
  // Column-major order: (0,0)=1 (0,1)=0 (1,0)=0 (1,1)=1 (2,0)=0 (2,1)=0
  EXPECT_EQ(rle.counts, (std::vector<std::uint32_t>{0, 1, 2, 1, 2}));
}

TEST(Mask, RectPolygonAndBbox) {
  const auto m = BinaryMask::from_rect(20, 10, {3, 2, 5, 4});
  EXPECT_EQ(m.popcount(), 20);
  EXPECT_EQ(m.bbox(), (Rect{3, 2, 5, 4}));
  EXPECT_EQ(BinaryMask(5, 5).bbox(), Rect{});
  const auto c = m.crop({3, 2, 5, 4});
  EXPECT_EQ(c.popcount(), 20);
  const auto poly = BinaryMask::from_polygons(20, 20, {{2, 2, 12, 2, 12, 12, 2, 12}});
  EXPECT_GT(poly.popcount(), 90);
  EXPECT_LE(poly.popcount(), 121);
}

TEST(ImageIo, PngRoundTripAndSniff) {
  const cv::Mat img = testkit::random_image(31, 17, 4);
  const std::string png = encode_png(img);
  EXPECT_EQ(sniff_container(png), Container::kPng);
  EXPECT_TRUE(identical(decode_image(png), img));
  EXPECT_EQ(sniff_container(encode_jpeg(img, 80)), Container::kJpeg);
  EXPECT_EQ(sniff_container("GIF89a"), Container::kOther);
  EXPECT_THROW(decode_image("not an image"), Error);
}

TEST(ImageIo, LumaWeights) {
  cv::Mat px(1, 1, CV_8UC3, cv::Scalar(10, 20, 30));  // B, G, R
  EXPECT_NEAR(luma(px).at<double>(0, 0), 0.299 * 30 + 0.587 * 20 + 0.114 * 10, 1e-12);
}

TEST(Parallel, VisitsEveryIndexAndRethrows) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; }, 4);
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(100, [](std::size_t i) { if (i == 42) throw Error("boom"); }, 4), Error);
}
