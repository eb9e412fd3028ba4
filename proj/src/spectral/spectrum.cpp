#include "fakescope/spectral/spectrum.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <opencv2/imgproc.hpp>
#include <sstream>

#include "fakescope/common/error.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/common/parallel.hpp"

namespace fakescope::spectral {

namespace {

cv::Mat center_crop(const cv::Mat& image, int size) {
  return image(cv::Rect((image.cols - size) / 2, (image.rows - size) / 2, size, size));
}

void fftshift(cv::Mat& m) {
  const int cx = m.cols / 2, cy = m.rows / 2;
  cv::Mat shifted(m.size(), m.type());
  // Quadrant swap that also works for odd sizes.
  for (int y = 0; y < m.rows; ++y) {
    const int sy = (y + cy) % m.rows;
    for (int x = 0; x < m.cols; ++x) shifted.at<double>(sy, (x + cx) % m.cols) = m.at<double>(y, x);
  }
  m = shifted;
}

// Binary-counter pairwise summation: sums of equal weight are merged, so the
// result depends only on the order in which terms are pushed.
class PairwiseSum {
 public:
  void push(cv::Mat term) {
    std::size_t level = 0;
    while (!stack_.empty() && stack_.back().second == level) {
      term += stack_.back().first;
      stack_.pop_back();
      ++level;
    }
    stack_.emplace_back(std::move(term), level);
  }
  cv::Mat result() const {
    cv::Mat acc;
    for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
      if (acc.empty()) {
        acc = it->first.clone();
      } else {
        acc += it->first;
      }
    }
    return acc;
  }

 private:
  std::vector<std::pair<cv::Mat, std::size_t>> stack_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double SpectrumMap::total() const { return grid.empty() ? 0.0 : cv::sum(grid)[0]; }

cv::Mat difference_power(const cv::Mat& a, const cv::Mat& b, int size) {
  cv::Mat d = luma(center_crop(a, size)) - luma(center_crop(b, size));
  cv::Mat spectrum;
  cv::dft(d, spectrum, cv::DFT_COMPLEX_OUTPUT);
  cv::Mat power(size, size, CV_64F);
  const double norm = static_cast<double>(size) * size;
  for (int y = 0; y < size; ++y) {
    const auto* src = spectrum.ptr<cv::Vec2d>(y);
    auto* dst = power.ptr<double>(y);
    for (int x = 0; x < size; ++x) dst[x] = (src[x][0] * src[x][0] + src[x][1] * src[x][1]) / norm;
  }
  fftshift(power);
  return power;
}

SpectrumMap diff_power_spectrum(std::size_t n, const std::function<ImagePair(std::size_t)>& load, int size,
                                const std::string& pair_kind) {
  if (n == 0) throw Error("diff_power_spectrum needs at least one pair");
  if (size < 2) throw Error("spectrum size must be at least 2");
  const std::size_t block = std::max<std::size_t>(8, 2 * default_workers());
  PairwiseSum sum;
  long used = 0;
  for (std::size_t start = 0; start < n; start += block) {
    const std::size_t m = std::min(block, n - start);
    std::vector<cv::Mat> terms(m);
    parallel_for(m, [&](std::size_t k) {
      const auto [a, b] = load(start + k);
      if (a.size() != b.size()) {
        spdlog::warn("pair {}: size mismatch {}x{} vs {}x{}, skipped", start + k, a.cols, a.rows, b.cols, b.rows);
        return;
      }
      if (a.cols < size || a.rows < size) {
        spdlog::warn("pair {}: smaller than {}x{}, skipped", start + k, size, size);
        return;
      }
      terms[k] = difference_power(a, b, size);
    });
    for (auto& t : terms) {
      if (t.empty()) continue;
      sum.push(std::move(t));
      ++used;
    }
  }
  if (used == 0) throw Error("no usable image pairs for the spectrum");
  SpectrumMap map;
  map.size = size;
  map.count = used;
  map.pair_kind = pair_kind;
  map.grid = sum.result() / static_cast<double>(used);
  return map;
}

SpectrumMap diff_power_spectrum(const std::vector<ImagePair>& pairs, int size, const std::string& pair_kind) {
  return diff_power_spectrum(pairs.size(), [&](std::size_t i) { return pairs[i]; }, size, pair_kind);
}

SpectrumMap combine(const std::vector<SpectrumMap>& maps) {
  if (maps.empty()) throw Error("nothing to combine");
  SpectrumMap out;
  out.size = maps.front().size;
  out.pair_kind = maps.front().pair_kind;
  out.grid = cv::Mat::zeros(out.size, out.size, CV_64F);
  for (const auto& m : maps) {
    if (m.size != out.size) throw Error("cannot combine spectra of different sizes");
    out.grid += m.grid * static_cast<double>(m.count);
    out.count += m.count;
  }
  out.grid /= static_cast<double>(out.count);
  return out;
}

std::vector<double> radial_profile(const SpectrumMap& map, int bands) {
  if (bands < 1) throw Error("radial profile needs at least one band");
  std::vector<double> sum(static_cast<std::size_t>(bands), 0.0);
  std::vector<long> count(static_cast<std::size_t>(bands), 0);
  const int S = map.size;
  for (int y = 0; y < S; ++y) {
    const double fy = static_cast<double>(y - S / 2) / S;
    for (int x = 0; x < S; ++x) {
      const double fx = static_cast<double>(x - S / 2) / S;
      const double r = std::hypot(fx, fy);
      if (r >= 0.5) continue;
      const int k = std::min(bands - 1, static_cast<int>(r * 2.0 * bands));
      sum[k] += map.grid.at<double>(y, x);
      ++count[k];
    }
  }
  for (int k = 0; k < bands; ++k) {
    if (count[k] > 0) sum[k] /= static_cast<double>(count[k]);
  }
  return sum;
}

void emit_spectrum(const SpectrumMap& map, const std::filesystem::path& dir, int bands) {
  std::ostringstream grid;
  for (int y = 0; y < map.size; ++y) {
    for (int x = 0; x < map.size; ++x) grid << (x ? "," : "") << fmt(map.grid.at<double>(y, x));
    grid << '\n';
  }
  write_file(dir / "spectrum.csv", grid.str());

  std::ostringstream radial;
  radial << "band,lo,hi,power\n";
  const auto profile = radial_profile(map, bands);
  for (int k = 0; k < bands; ++k) {
    radial << k << ',' << fmt(0.5 * k / bands) << ',' << fmt(0.5 * (k + 1) / bands) << ',' << fmt(profile[k])
           << '\n';
  }
  write_file(dir / "radial.csv", radial.str());

  cv::Mat logged;
  cv::log(map.grid + 1.0, logged);
  double max_v = 0.0;
  cv::minMaxLoc(logged, nullptr, &max_v);
  cv::Mat gray;
  logged.convertTo(gray, CV_8U, max_v > 0.0 ? 255.0 / max_v : 0.0);
  cv::Mat bgr;
  cv::cvtColor(gray, bgr, cv::COLOR_GRAY2BGR);
  write_file(dir / "spectrum.png", encode_png(bgr));
}

cv::Mat parse_spectrum_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error("empty spectrum CSV");
  cv::Mat out(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()), CV_64F);
  for (int y = 0; y < out.rows; ++y) {
    if (rows[y].size() != static_cast<std::size_t>(out.cols)) throw Error("ragged spectrum CSV");
    for (int x = 0; x < out.cols; ++x) out.at<double>(y, x) = rows[y][x];
  }
  return out;
}

}  // namespace fakescope::spectral
