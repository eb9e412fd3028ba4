#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fakescope/augment/augment.hpp"
#include "fakescope/detector/scorer.hpp"
#include "fakescope/genclient/transport.hpp"
#include "fakescope/manifest/types.hpp"
#include "fakescope/metrics/metrics.hpp"
#include "fakescope/pipeline/config.hpp"

namespace fakescope::pipeline {

// In execution order.
enum class Stage { kDataset, kGenerate, kAugment, kScore, kEvaluate, kRobustness, kSpectra, kAudit };

inline constexpr Stage kAllStages[] = {Stage::kDataset,  Stage::kGenerate,   Stage::kAugment,
                                       Stage::kScore,    Stage::kEvaluate,   Stage::kRobustness,
                                       Stage::kSpectra,  Stage::kAudit};

std::string_view to_string(Stage s);
// Accepts stage names and CLI subcommand names ("build-dataset").
Stage stage_from_string(std::string_view s);
std::vector<Stage> stage_dependencies(Stage s);

struct StageOutcome {
  Stage stage;
  bool skipped = false;  // already complete for this configuration
  std::string hash;
};

struct PipelineOptions {
  // Replaces the transport built from generation.endpoint.
  std::shared_ptr<genclient::SidecarTransport> transport;
};

// Runs the requested stages in fixed order. A stage whose recorded hash
// matches the configuration is skipped. Missing upstream outputs raise Error
// naming the stage to run first.
std::vector<StageOutcome> run_pipeline(const ExperimentConfig& config, const std::set<Stage>& stages,
                                       const PipelineOptions& options = {});

// Scores every record (optionally perturbed first, seeded per record id).
// Reals are grouped under kSharedGroup, fakes under "generator:variant".
metrics::ScoreSet score_manifest(const manifest::DatasetManifest& m, detector::CropScorer& scorer,
                                 const std::optional<augment::PerturbationSpec>& perturbation = std::nullopt,
                                 std::uint64_t seed = 0);

struct SweepPoint {
  augment::PerturbationSpec spec;
  std::optional<metrics::MetricsReport> report;  // absent when the point was skipped
  std::string note;
};

// One report per grid point; degenerate-size points are skipped with a warning.
std::vector<SweepPoint> robustness_sweep(const manifest::DatasetManifest& eval, detector::CropScorer& scorer,
                                         const std::vector<augment::PerturbationSpec>& grid, std::uint64_t seed,
                                         const metrics::ReportOptions& options);

// robustness.csv: kind,param,bacc,auc,ece,nll (macro averages), one row per
// evaluated point.
std::string robustness_csv(const std::vector<SweepPoint>& points);

// Split of a record by the hash of its pair id: 0 train, 1 val, 2 eval.
int split_of(const std::string& pair_id, std::uint64_t seed, double train_fraction, double val_fraction);

}  // namespace fakescope::pipeline
