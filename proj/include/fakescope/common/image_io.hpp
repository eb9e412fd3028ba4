#pragma once

#include <filesystem>
#include <opencv2/core.hpp>
#include <string>
#include <string_view>

namespace fakescope {

enum class Container { kJpeg, kPng, kOther };

std::string_view to_string(Container c);
Container container_from_string(std::string_view s);

// Container detected from magic bytes.
Container sniff_container(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// Decodes to 8-bit, 3-channel BGR. Throws Error on failure.
cv::Mat decode_image(std::string_view bytes);
cv::Mat load_image(const std::filesystem::path& path);

std::string encode_png(const cv::Mat& image);
// Baseline JPEG at the given quality factor (1..100), standard tables,
// 4:4:4 sampling.
std::string encode_jpeg(const cv::Mat& image, int quality);

// Encode at `quality` and decode again.
cv::Mat jpeg_roundtrip(const cv::Mat& image, int quality);

// ITU-R BT.601 luma as CV_64F, unrounded.
cv::Mat luma(const cv::Mat& bgr);

bool identical(const cv::Mat& a, const cv::Mat& b);

}  // namespace fakescope
