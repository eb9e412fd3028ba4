#include "fakescope/common/mask.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/imgproc.hpp>

#include "fakescope/common/error.hpp"

namespace fakescope {

std::string rle_to_string(const Rle& rle) {
  std::string s;
  const auto& cnts = rle.counts;
  for (std::size_t i = 0; i < cnts.size(); ++i) {
    std::int64_t x = cnts[i];
    if (i > 2) x -= static_cast<std::int64_t>(cnts[i - 2]);
    bool more = true;
    while (more) {
      char c = static_cast<char>(x & 0x1f);
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      s.push_back(static_cast<char>(c + 48));
    }
  }
  return s;
}

Rle rle_from_string(std::string_view s, int height, int width) {
  Rle rle{height, width, {}};
  std::size_t p = 0;
  while (p < s.size()) {
    std::int64_t x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= s.size()) throw Error("truncated RLE string");
      const int c = static_cast<int>(s[p]) - 48;
      if (c < 0 || c > 63) throw Error("invalid RLE character");
      x |= static_cast<std::int64_t>(c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= -(std::int64_t{1} << (5 * k));
    }
    const std::size_t m = rle.counts.size();
    if (m > 2) x += static_cast<std::int64_t>(rle.counts[m - 2]);
    if (x < 0) throw Error("negative RLE run");
    rle.counts.push_back(static_cast<std::uint32_t>(x));
  }
  return rle;
}

std::int64_t rle_area(const Rle& rle) {
  std::int64_t area = 0;
  for (std::size_t i = 1; i < rle.counts.size(); i += 2) area += rle.counts[i];
  return area;
}

BinaryMask::BinaryMask(int width, int height, bool value)
    : width_(width),
      height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) *
                static_cast<std::size_t>(std::max(height, 0)),
            value ? 1 : 0) {
  if (width < 0 || height < 0) throw Error("negative mask dimensions");
}

BinaryMask BinaryMask::from_rect(int width, int height, const Rect& rect) {
  BinaryMask m(width, height);
  const int x0 = std::clamp(rect.x, 0, width);
  const int y0 = std::clamp(rect.y, 0, height);
  const int x1 = std::clamp(rect.x + rect.w, 0, width);
  const int y1 = std::clamp(rect.y + rect.h, 0, height);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m.set(x, y, true);
  }
  return m;
}

BinaryMask BinaryMask::from_rle(const Rle& rle) {
  BinaryMask m(rle.width, rle.height);
  const std::size_t total = m.bits_.size();
  std::size_t pos = 0;
  bool value = false;
  for (std::uint32_t run : rle.counts) {
    if (pos + run > total) throw Error("RLE runs exceed mask size");
    if (value) {
      for (std::size_t k = pos; k < pos + run; ++k) {
        // Column-major position k -> (x, y).
        const int x = static_cast<int>(k / static_cast<std::size_t>(rle.height));
        const int y = static_cast<int>(k % static_cast<std::size_t>(rle.height));
        m.set(x, y, true);
      }
    }
    pos += run;
    value = !value;
  }
  if (pos != total) throw Error("RLE runs do not cover the mask");
  return m;
}

BinaryMask BinaryMask::from_mat(const cv::Mat& mask) {
  CV_Assert(mask.type() == CV_8UC1);
  BinaryMask m(mask.cols, mask.rows);
  for (int y = 0; y < mask.rows; ++y) {
    const auto* row = mask.ptr<std::uint8_t>(y);
    for (int x = 0; x < mask.cols; ++x) m.set(x, y, row[x] != 0);
  }
  return m;
}

BinaryMask BinaryMask::from_polygons(int width, int height,
                                     const std::vector<std::vector<double>>& polygons) {
  cv::Mat canvas = cv::Mat::zeros(height, width, CV_8UC1);
  std::vector<std::vector<cv::Point>> contours;
  for (const auto& poly : polygons) {
    if (poly.size() < 6 || poly.size() % 2 != 0) continue;
    std::vector<cv::Point> pts;
    for (std::size_t i = 0; i + 1 < poly.size(); i += 2) {
      pts.emplace_back(static_cast<int>(std::lround(poly[i])),
                       static_cast<int>(std::lround(poly[i + 1])));
    }
    contours.push_back(std::move(pts));
  }
  if (!contours.empty()) cv::fillPoly(canvas, contours, cv::Scalar(255));
  return from_mat(canvas);
}

std::int64_t BinaryMask::popcount() const {
  return std::count(bits_.begin(), bits_.end(), std::uint8_t{1});
}

Rect BinaryMask::bbox() const {
  int x0 = width_, y0 = height_, x1 = -1, y1 = -1;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (!at(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return {};
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

BinaryMask BinaryMask::crop(const Rect& rect) const {
  if (rect.x < 0 || rect.y < 0 || rect.w < 0 || rect.h < 0 ||
      rect.x + rect.w > width_ || rect.y + rect.h > height_) {
    throw Error("mask crop outside bounds");
  }
  BinaryMask out(rect.w, rect.h);
  for (int y = 0; y < rect.h; ++y) {
    for (int x = 0; x < rect.w; ++x) out.set(x, y, at(rect.x + x, rect.y + y));
  }
  return out;
}

Rle BinaryMask::to_rle() const {
  Rle rle{height_, width_, {}};
  bool value = false;
  std::uint32_t run = 0;
  for (int x = 0; x < width_; ++x) {
    for (int y = 0; y < height_; ++y) {
      if (at(x, y) != value) {
        rle.counts.push_back(run);
        run = 0;
        value = !value;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

cv::Mat BinaryMask::to_mat() const {
  cv::Mat out(height_, width_, CV_8UC1);
  for (int y = 0; y < height_; ++y) {
    auto* row = out.ptr<std::uint8_t>(y);
    for (int x = 0; x < width_; ++x) row[x] = at(x, y) ? 255 : 0;
  }
  return out;
}

}  // namespace fakescope
