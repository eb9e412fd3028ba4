#pragma once

#include <opencv2/core.hpp>
#include <vector>

namespace fakescope::detector {

// Crop grid covering a width x height image with crop_size squares. Axes no
// longer than crop_size get one position at 0 (padded); longer axes get
// ceil(dim / crop_size) positions spread evenly from 0 to dim - crop_size.
std::vector<cv::Rect> tile_crops(int width, int height, int crop_size);

// Pixels of `rect`, reflect-padded where it extends past the image.
cv::Mat extract_crop(const cv::Mat& image, const cv::Rect& rect);

}  // namespace fakescope::detector
