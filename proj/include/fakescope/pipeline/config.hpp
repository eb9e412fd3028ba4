#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "fakescope/audit/audit.hpp"
#include "fakescope/augment/augment.hpp"
#include "fakescope/detector/probe.hpp"
#include "fakescope/detector/scorer.hpp"
#include "fakescope/manifest/plan.hpp"
#include "fakescope/metrics/metrics.hpp"

namespace fakescope::pipeline {

struct DatasetSection {
  std::filesystem::path listing;
  std::optional<std::filesystem::path> annotations;
  int min_objects = 1;
  std::string source_tag = "coco";
  bool require_creative_commons = true;
};

struct GenerationSection {
  std::string endpoint = "mock://";
  manifest::GenerationParams params;
  int max_in_flight = 4;
  int retries = 2;
  std::string generator_tag;  // empty: the sidecar's model id
  std::vector<manifest::Variant> variants;  // empty: all six
};

struct AugmentSection {
  augment::AugPolicy policy;
  double train_fraction = 0.7;
  double val_fraction = 0.1;  // the rest is the evaluation split
  bool materialize = true;    // write one augmented view of the training split
};

struct DetectorSection {
  detector::DetectorHandle handle;  // toy_probe with empty location: train one
  detector::ProbeSchedule schedule;
  detector::FeatureSpec features;
};

struct SpectraSection {
  int size = 256;  // 0: largest power of two that fits every pair
  int bands = 32;
  manifest::Variant variant = manifest::Variant::kSelfCond;
  std::string pair_kind = "real_vs_selfcond";
  long max_pairs = 2000;
};

struct AuditSection {
  audit::AuditOptions options;
  bool rebalance = false;
  std::optional<std::filesystem::path> manifest;  // default: the generated dataset
};

std::vector<augment::PerturbationSpec> default_robustness_grid();

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  DatasetSection dataset;
  GenerationSection generation;
  AugmentSection augment;
  DetectorSection detector;
  metrics::ReportOptions metrics;
  std::vector<augment::PerturbationSpec> robustness = default_robustness_grid();
  SpectraSection spectra;
  AuditSection audit;

  // The JSON the typed fields were parsed from, after overrides.
  nlohmann::json raw = nlohmann::json::object();

  std::string hash() const;
  // Hash of selected top-level sections plus seed and tool version.
  std::string section_hash(const std::vector<std::string>& sections) const;

  // Throws ConfigError on malformed input.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

nlohmann::json perturbation_to_json(const augment::PerturbationSpec& s);
augment::PerturbationSpec perturbation_from_json(const nlohmann::json& j);

// Applies "a.b.c=value"; the value is parsed as JSON when possible and kept
// as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

struct ConfigSources {
  std::optional<std::filesystem::path> file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
};
ExperimentConfig load_config(const ConfigSources& sources);

}  // namespace fakescope::pipeline
