#pragma once

#include <cstdint>
#include <opencv2/core.hpp>
#include <string>
#include <string_view>
#include <vector>

namespace fakescope {

// Integer rectangle, top-left origin.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  std::int64_t area() const { return static_cast<std::int64_t>(w) * h; }
  bool operator==(const Rect&) const = default;
};

// COCO-style run-length encoding: column-major (Fortran order) runs that
// alternate 0s and 1s, starting with a (possibly empty) run of 0s.
struct Rle {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  bool operator==(const Rle&) const = default;
};

// Compact string form used by the COCO tools (LEB128-like, delta coded).
std::string rle_to_string(const Rle& rle);
Rle rle_from_string(std::string_view s, int height, int width);

// Number of set pixels, summed from the runs.
std::int64_t rle_area(const Rle& rle);

// Dense binary mask stored row-major, one byte per pixel (0 or 1).
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool value = false);

  static BinaryMask from_rect(int width, int height, const Rect& rect);
  static BinaryMask from_rle(const Rle& rle);
  // Any nonzero pixel of a CV_8UC1 matrix is set.
  static BinaryMask from_mat(const cv::Mat& mask);
  // Fills polygons given as flat [x0, y0, x1, y1, ...] lists.
  static BinaryMask from_polygons(int width, int height,
                                  const std::vector<std::vector<double>>& polygons);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty_extent() const { return width_ == 0 || height_ == 0; }

  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v) { bits_[index(x, y)] = v ? 1 : 0; }

  std::int64_t popcount() const;
  // Tight bounding rectangle; zero rect when empty.
  Rect bbox() const;
  BinaryMask crop(const Rect& rect) const;
  Rle to_rle() const;
  // CV_8UC1 with 0 / 255.
  cv::Mat to_mat() const;

  bool operator==(const BinaryMask&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace fakescope
