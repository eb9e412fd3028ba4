#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace fakescope::metrics {

struct ScoreEntry {
  std::string id;
  std::string group;
  double prob = 0.5;  // probability of the fake class
  int label = 0;      // 1 = fake
};

// Entries whose group is kSharedGroup (typically the reals) belong to every
// other group of a report.
inline constexpr const char* kSharedGroup = "*";

struct ScoreSet {
  std::vector<ScoreEntry> entries;
  double threshold = 0.5;

  void validate() const;
  std::size_t count(int label) const;
};

// Mean of per-class accuracies, predicting fake when prob >= threshold.
double balanced_accuracy(const ScoreSet& s);
// Mann-Whitney statistic: P(fake > real) + P(tie) / 2.
double auc(const ScoreSet& s);
// Class-balanced binary ECE over bins ((m-1)/M, m/M], 0 going to the first bin.
double binary_ece(const ScoreSet& s, int bins = 15);
double balanced_nll(const ScoreSet& s, double epsilon = 1e-7);

// Index in [0, bins) of the bin holding p.
int ece_bin(double p, int bins);

struct Bin {
  double lo = 0.0, hi = 0.0;
  long count_0 = 0, count_1 = 0;
  double mean_pred = 0.0;        // weighted
  double weighted_actual = 0.0;  // weighted fraction of fakes
};
std::vector<Bin> ece_bins(const ScoreSet& s, int bins = 15);

struct ReportOptions {
  int bins = 15;
  double threshold = 0.5;
  double epsilon = 1e-7;
  // Scores are hard 0/1 labels: calibration metrics are not reported.
  bool hard_labels = false;
};

struct GroupMetrics {
  std::string group;
  long n_real = 0;
  long n_fake = 0;
  std::optional<double> bacc, auc, ece, nll;
  std::vector<std::string> notes;
  std::vector<Bin> bins;
};

struct MetricsReport {
  std::vector<GroupMetrics> groups;
  GroupMetrics average;  // macro mean over groups where each metric is present
  ReportOptions options;

  const GroupMetrics* find(const std::string& group) const;
  nlohmann::json to_json() const;
  std::string to_csv() const;
  std::string bins_csv() const;
};

MetricsReport build_report(const ScoreSet& s, const ReportOptions& options = {});

// Writes report.csv, report.json and bins.csv.
void write_report(const MetricsReport& report, const std::filesystem::path& dir);

// CSV with header id,group,prob,label.
std::string scores_to_csv(const ScoreSet& s);
ScoreSet scores_from_csv(std::string_view text);

}  // namespace fakescope::metrics
