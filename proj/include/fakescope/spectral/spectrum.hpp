#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <opencv2/core.hpp>
#include <string>
#include <utility>
#include <vector>

namespace fakescope::spectral {

struct SpectrumMap {
  int size = 0;  // S
  long count = 0;
  std::string pair_kind = "custom";  // real_vs_recon, real_vs_selfcond, recon_vs_selfcond, custom
  // S x S CV_64F mean of |FFT(a - b)|^2 / S^2, DC at (S/2, S/2).
  cv::Mat grid;

  double total() const;
};

using ImagePair = std::pair<cv::Mat, cv::Mat>;

// Averages the power spectrum of luma differences over central S x S crops.
// Pairs whose images differ in size, or are smaller than S, are skipped with
// a warning. Throws when no pair is usable.
SpectrumMap diff_power_spectrum(const std::vector<ImagePair>& pairs, int size,
                                const std::string& pair_kind = "custom");
// Streaming form: load(i) supplies pair i of n.
SpectrumMap diff_power_spectrum(std::size_t n, const std::function<ImagePair(std::size_t)>& load, int size,
                                const std::string& pair_kind = "custom");

// Power spectrum of one difference image (luma, CV_64F, S x S), DC centred.
cv::Mat difference_power(const cv::Mat& a, const cv::Mat& b, int size);

// Count-weighted mean of maps with equal size.
SpectrumMap combine(const std::vector<SpectrumMap>& maps);

// Mean power in `bands` annuli of width 0.5 / bands cycles/pixel from DC to
// Nyquist; frequencies beyond Nyquist radius are ignored.
std::vector<double> radial_profile(const SpectrumMap& map, int bands);

// spectrum.csv (S rows of S values), radial.csv, spectrum.png (log-scaled).
void emit_spectrum(const SpectrumMap& map, const std::filesystem::path& dir, int bands = 32);
cv::Mat parse_spectrum_csv(const std::string& text);

}  // namespace fakescope::spectral
