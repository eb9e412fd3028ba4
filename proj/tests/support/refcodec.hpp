#pragma once

#include <opencv2/core.hpp>
#include <string>

namespace fakescope::refcodec {

// Baseline encode at `quality` and decode, both straight through libjpeg
// with library defaults. BGR in, BGR out.
std::string encode(const cv::Mat& bgr, int quality);
cv::Mat decode(const std::string& bytes);

}  // namespace fakescope::refcodec
