#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "fakescope/augment/augment.hpp"
#include "fakescope/detector/features.hpp"
#include "fakescope/manifest/types.hpp"

namespace fakescope::detector {

struct EarlyStopState {
  double best_bacc = -std::numeric_limits<double>::infinity();
  int evals_since_improve = 0;
  double min_delta = 0.001;
  int patience = 5;
  long eval_interval = 3435;
};

struct EarlyStopStep {
  EarlyStopState state;
  bool keep_going = true;
  bool improved = false;
};

// An evaluation improves when it reaches best + min_delta; training stops
// once `patience` consecutive evaluations fail to improve.
EarlyStopStep early_stop_step(EarlyStopState state, double new_val_bacc);

struct Evaluation {
  long iteration = 0;
  double val_bacc = 0.0;
  double train_loss = 0.0;
};

struct TrainingLog {
  long iterations = 0;
  std::vector<Evaluation> evaluations;
  bool stopped_early = false;
  long best_iteration = 0;
  double best_val_bacc = 0.0;
};

// Logistic model over spectral_features.
struct ToyProbe {
  FeatureSpec feature_spec;
  std::vector<double> weights;
  double bias = 0.0;
  TrainingLog training_log;

  double logit(const std::vector<double>& features) const;
  void validate() const;

  nlohmann::json to_json() const;
  static ToyProbe from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static ToyProbe load(const std::filesystem::path& path);
};

struct ProbeSchedule {
  int batch_size = 32;  // even; half real, half fake
  double learning_rate = 0.01;
  long max_iterations = 20000;
  EarlyStopState early_stop;
  std::uint64_t seed = 0;
};

// One training example; `label` may be fractional after mixing.
struct Sample {
  std::vector<double> features;
  double label = 0.0;
};

// Adam on binary cross-entropy over standardized features. `next_batch(i)`
// yields the samples of iteration i. Validation bAcc (threshold 0.5) is
// computed every eval_interval iterations and fed to early_stop_step; the
// returned weights are those of the best evaluation, mapped back to the raw
// feature scale.
ToyProbe fit_probe(const FeatureSpec& spec, const std::function<std::vector<Sample>(long)>& next_batch,
                   const std::vector<std::vector<double>>& val_features, const std::vector<int>& val_labels,
                   const ProbeSchedule& schedule);

// Mean of spectral_features over the image's crops; the toy probe's logit on
// an image is linear in this vector.
std::vector<double> image_features(const cv::Mat& bgr, const FeatureSpec& spec);

// Features of one training view: augmentation per policy, then a random crop
// (or reflect padding) to crop_size.
std::vector<double> training_view_features(const cv::Mat& bgr, const FeatureSpec& spec,
                                           const augment::AugPolicy& policy, std::uint64_t seed,
                                           std::string_view key);

// Trains on class-balanced batches drawn from `train` (fakes restricted to the
// policy's variants) and early-stops on `val`.
ToyProbe train_probe(const manifest::DatasetManifest& train, const manifest::DatasetManifest& val,
                     const augment::AugPolicy& policy, const ProbeSchedule& schedule,
                     const FeatureSpec& spec = {});

}  // namespace fakescope::detector
