#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fakescope/manifest/types.hpp"

namespace fakescope::audit {

// Quality factor of a JPEG file, nullopt for lossless containers.
using QfEstimate = std::optional<int>;

// Nearest match of the first luminance quantization table against the
// standard table scaled for QF 1..100. Throws Error naming `id` on corrupt input.
QfEstimate estimate_jpeg_qf(std::string_view bytes, std::string_view id = {});

// Standard luminance table scaled for `qf`, natural (row-major) order.
std::vector<int> scaled_luma_table(int qf);

// Two-sample Kolmogorov-Smirnov distance between empirical distributions.
double ks_distance(std::vector<double> a, std::vector<double> b);

struct AuditOptions {
  double ks_threshold = 0.25;
  double container_threshold = 0.25;  // total-variation distance
  double spike_threshold = 0.5;
};

struct ClassStats {
  long count = 0;
  std::map<std::string, long> container;
  std::map<std::string, long> qf;  // "lossless" or the QF
  std::map<std::string, long> resolution;  // "WxH"
};

struct BiasReport {
  ClassStats real, fake;
  double ks_container = 0.0;
  double tv_container = 0.0;
  double ks_qf = 0.0;
  double ks_resolution = 0.0;  // on min(width, height)
  bool flag_container = false;
  bool flag_qf = false;
  bool flag_resolution = false;
  bool flag_resolution_spike = false;
  std::string spike_detail;
  AuditOptions options;

  bool flagged() const { return flag_container || flag_qf || flag_resolution || flag_resolution_spike; }
  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Per-record attributes measured from the files themselves.
struct RecordFormat {
  std::string container;
  QfEstimate qf;
  int width = 0;
  int height = 0;
};
std::vector<RecordFormat> measure_formats(const manifest::DatasetManifest& m);

BiasReport format_bias_report(const manifest::DatasetManifest& m, const AuditOptions& options = {});

// Re-encodes every fake as JPEG at a QF drawn from the reals' QF distribution.
// Reals keep their files; the returned manifest is rooted at `output_dir`.
// Throws Error("no target distribution") when every real is lossless.
manifest::DatasetManifest rebalance_compression(const manifest::DatasetManifest& m,
                                                const std::filesystem::path& output_dir, std::uint64_t seed);

}  // namespace fakescope::audit
