#include "fakescope/common/image_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <vector>

#include "fakescope/common/error.hpp"

// jpeglib.h needs FILE declared first.
#include <jpeglib.h>

namespace fakescope {

std::string_view to_string(Container c) {
  switch (c) {
    case Container::kJpeg: return "jpeg";
    case Container::kPng: return "png";
    case Container::kOther: return "other";
  }
  return "other";
}

Container container_from_string(std::string_view s) {
  if (s == "jpeg") return Container::kJpeg;
  if (s == "png") return Container::kPng;
  if (s == "other") return Container::kOther;
  throw Error("unknown container '" + std::string(s) + "'");
}

Container sniff_container(std::string_view bytes) {
  if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
      static_cast<unsigned char>(bytes[1]) == 0xD8 &&
      static_cast<unsigned char>(bytes[2]) == 0xFF) {
    return Container::kJpeg;
  }
  static constexpr char kPngMagic[] = "\x89PNG\r\n\x1a\n";
  if (bytes.size() >= 8 && bytes.substr(0, 8) == std::string_view(kPngMagic, 8)) {
    return Container::kPng;
  }
  return Container::kOther;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error("read failed for " + path.string());
  return data;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Write-then-rename so a crash never leaves a truncated file under the
  // final (content-addressed) name.
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

cv::Mat decode_image(std::string_view bytes) {
  if (bytes.empty()) throw Error("empty image buffer");
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1,
              const_cast<char*>(bytes.data()));
  cv::Mat img = cv::imdecode(buf, cv::IMREAD_COLOR);
  if (img.empty()) throw Error("image decode failed");
  return img;
}

cv::Mat load_image(const std::filesystem::path& path) {
  try {
    return decode_image(read_file(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string encode_png(const cv::Mat& image) {
  std::vector<uchar> out;
  const std::vector<int> params = {cv::IMWRITE_PNG_COMPRESSION, 3};
  if (!cv::imencode(".png", image, out, params)) throw Error("png encode failed");
  return {out.begin(), out.end()};
}

namespace {

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr info) {
  auto* e = reinterpret_cast<JpegError*>(info->err);
  (*info->err->format_message)(info, e->message);
  std::longjmp(e->jump, 1);
}

}  // namespace

std::string encode_jpeg(const cv::Mat& image, int quality) {
  if (quality < 1 || quality > 100) {
    throw Error("jpeg quality out of range: " + std::to_string(quality));
  }
  if (image.type() != CV_8UC3) throw Error("jpeg encode expects 8-bit BGR");
  // Rows are converted ahead of the setjmp so nothing with a destructor
  // lives across it.
  cv::Mat rgb;
  cv::cvtColor(image, rgb, cv::COLOR_BGR2RGB);
  if (!rgb.isContinuous()) rgb = rgb.clone();

  jpeg_compress_struct c{};
  JpegError err{};
  c.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = on_jpeg_error;
  unsigned char* buf = nullptr;
  unsigned long size = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&c);
    std::free(buf);
    throw Error(std::string("jpeg encode failed: ") + err.message);
  }
  jpeg_create_compress(&c);
  jpeg_mem_dest(&c, &buf, &size);
  c.image_width = static_cast<JDIMENSION>(rgb.cols);
  c.image_height = static_cast<JDIMENSION>(rgb.rows);
  c.input_components = 3;
  c.in_color_space = JCS_RGB;
  jpeg_set_defaults(&c);
  jpeg_set_quality(&c, quality, TRUE);
  // 4:4:4, no chroma subsampling.
  for (int i = 0; i < c.num_components; ++i) {
    c.comp_info[i].h_samp_factor = 1;
    c.comp_info[i].v_samp_factor = 1;
  }
  jpeg_start_compress(&c, TRUE);
  while (c.next_scanline < c.image_height) {
    JSAMPROW row = rgb.ptr<unsigned char>(static_cast<int>(c.next_scanline));
    jpeg_write_scanlines(&c, &row, 1);
  }
  jpeg_finish_compress(&c);
  std::string out(reinterpret_cast<char*>(buf), size);
  jpeg_destroy_compress(&c);
  std::free(buf);
  return out;
}

cv::Mat jpeg_roundtrip(const cv::Mat& image, int quality) {
  return decode_image(encode_jpeg(image, quality));
}

cv::Mat luma(const cv::Mat& bgr) {
  CV_Assert(bgr.type() == CV_8UC3);
  cv::Mat out(bgr.rows, bgr.cols, CV_64F);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* src = bgr.ptr<cv::Vec3b>(y);
    auto* dst = out.ptr<double>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      dst[x] = 0.299 * src[x][2] + 0.587 * src[x][1] + 0.114 * src[x][0];
    }
  }
  return out;
}

bool identical(const cv::Mat& a, const cv::Mat& b) {
  if (a.size() != b.size() || a.type() != b.type()) return false;
  if (a.empty()) return true;
  cv::Mat diff;
  cv::compare(a.reshape(1), b.reshape(1), diff, cv::CMP_NE);
  return cv::countNonZero(diff) == 0;
}

}  // namespace fakescope
