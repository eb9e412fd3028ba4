#include "fakescope/detector/crops.hpp"

#include <cmath>
#include <opencv2/core.hpp>

#include "fakescope/common/error.hpp"

namespace fakescope::detector {

namespace {

std::vector<int> positions(int dim, int crop) {
  if (dim <= crop) return {0};
  const int n = (dim + crop - 1) / crop;
  std::vector<int> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[i] = static_cast<int>(std::lround(static_cast<double>(i) * (dim - crop) / (n - 1)));
  }
  return out;
}

}  // namespace

std::vector<cv::Rect> tile_crops(int width, int height, int crop_size) {
  if (width < 1 || height < 1) throw Error("tile_crops needs a non-empty image");
  if (crop_size < 1) throw Error("crop size must be positive");
  std::vector<cv::Rect> out;
  for (int y : positions(height, crop_size)) {
    for (int x : positions(width, crop_size)) out.emplace_back(x, y, crop_size, crop_size);
  }
  return out;
}

cv::Mat extract_crop(const cv::Mat& image, const cv::Rect& rect) {
  const cv::Rect inside = rect & cv::Rect(0, 0, image.cols, image.rows);
  if (inside.area() == 0) throw Error("crop lies outside the image");
  if (inside == rect) return image(rect).clone();
  cv::Mat out;
  cv::copyMakeBorder(image(inside), out, inside.y - rect.y, rect.br().y - inside.br().y,
                     inside.x - rect.x, rect.br().x - inside.br().x, cv::BORDER_REFLECT_101);
  return out;
}

}  // namespace fakescope::detector
