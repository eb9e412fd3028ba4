#include "fakescope/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "fakescope/common/error.hpp"
#include "fakescope/common/image_io.hpp"

namespace fakescope::metrics {

using nlohmann::json;

namespace {

void require_both_classes(const ScoreSet& s, const char* what) {
  if (s.count(0) == 0 || s.count(1) == 0) {
    throw Error(std::string(what) + " needs both classes");
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void ScoreSet::validate() const {
  for (const auto& e : entries) {
    if (!(e.prob >= 0.0 && e.prob <= 1.0)) throw Error("probability out of [0, 1] for " + e.id);
    if (e.label != 0 && e.label != 1) throw Error("label must be 0 or 1 for " + e.id);
  }
}

std::size_t ScoreSet::count(int label) const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [&](const ScoreEntry& e) { return e.label == label; }));
}

double balanced_accuracy(const ScoreSet& s) {
  require_both_classes(s, "balanced accuracy");
  long correct[2] = {0, 0}, total[2] = {0, 0};
  for (const auto& e : s.entries) {
    const int pred = e.prob >= s.threshold ? 1 : 0;
    ++total[e.label];
    if (pred == e.label) ++correct[e.label];
  }
  return 0.5 * (static_cast<double>(correct[0]) / total[0] + static_cast<double>(correct[1]) / total[1]);
}

double auc(const ScoreSet& s) {
  require_both_classes(s, "AUC");
  const std::size_t n = s.entries.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return s.entries[a].prob < s.entries[b].prob; });
  // Average ranks (1-based) over tied runs.
  double rank_sum_fake = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && s.entries[order[j + 1]].prob == s.entries[order[i]].prob) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (s.entries[order[k]].label == 1) rank_sum_fake += avg_rank;
    }
    i = j + 1;
  }
  const double n1 = static_cast<double>(s.count(1));
  const double n0 = static_cast<double>(n) - n1;
  return (rank_sum_fake - n1 * (n1 + 1.0) / 2.0) / (n0 * n1);
}

int ece_bin(double p, int bins) {
  int m = static_cast<int>(std::ceil(p * bins));
  m = std::clamp(m, 1, bins);
  // Settle rounding in p * bins against the edges m / bins.
  while (m > 1 && p <= static_cast<double>(m - 1) / bins) --m;
  while (m < bins && p > static_cast<double>(m) / bins) ++m;
  return m - 1;
}

std::vector<Bin> ece_bins(const ScoreSet& s, int bins) {
  if (bins < 1) throw Error("ECE needs at least one bin");
  const double n = static_cast<double>(s.entries.size());
  const double n_class[2] = {static_cast<double>(s.count(0)), static_cast<double>(s.count(1))};
  std::vector<Bin> out(static_cast<std::size_t>(bins));
  std::vector<double> mass(out.size(), 0.0), pred(out.size(), 0.0), actual(out.size(), 0.0);
  for (int m = 0; m < bins; ++m) {
    out[m].lo = static_cast<double>(m) / bins;
    out[m].hi = static_cast<double>(m + 1) / bins;
  }
  for (const auto& e : s.entries) {
    const auto m = static_cast<std::size_t>(ece_bin(e.prob, bins));
    const double w = n / (2.0 * n_class[e.label]);
    mass[m] += w;
    pred[m] += w * e.prob;
    actual[m] += w * e.label;
    (e.label == 1 ? out[m].count_1 : out[m].count_0) += 1;
  }
  for (std::size_t m = 0; m < out.size(); ++m) {
    if (mass[m] > 0.0) {
      out[m].mean_pred = pred[m] / mass[m];
      out[m].weighted_actual = actual[m] / mass[m];
    }
  }
  return out;
}

double binary_ece(const ScoreSet& s, int bins) {
  if (s.entries.empty()) return 0.0;
  const double n = static_cast<double>(s.entries.size());
  const double n_class[2] = {static_cast<double>(s.count(0)), static_cast<double>(s.count(1))};
  std::vector<double> mass(static_cast<std::size_t>(bins), 0.0);
  const std::vector<Bin> diag = ece_bins(s, bins);
  double total = 0.0;
  for (const auto& e : s.entries) {
    const double w = n / (2.0 * n_class[e.label]);
    mass[static_cast<std::size_t>(ece_bin(e.prob, bins))] += w;
    total += w;
  }
  double ece = 0.0;
  for (std::size_t m = 0; m < diag.size(); ++m) {
    if (mass[m] > 0.0) ece += mass[m] / total * std::abs(diag[m].weighted_actual - diag[m].mean_pred);
  }
  return ece;
}

double balanced_nll(const ScoreSet& s, double epsilon) {
  require_both_classes(s, "balanced NLL");
  double sum[2] = {0.0, 0.0};
  long cnt[2] = {0, 0};
  for (const auto& e : s.entries) {
    const double p = std::clamp(e.prob, epsilon, 1.0 - epsilon);
    sum[e.label] += e.label == 1 ? std::log(p) : std::log(1.0 - p);
    ++cnt[e.label];
  }
  return -0.5 * sum[0] / cnt[0] - 0.5 * sum[1] / cnt[1];
}

const GroupMetrics* MetricsReport::find(const std::string& group) const {
  if (group == "AVG") return &average;
  for (const auto& g : groups) {
    if (g.group == group) return &g;
  }
  return nullptr;
}

json MetricsReport::to_json() const {
  auto group_json = [](const GroupMetrics& g) {
    json bins = json::array();
    for (const auto& b : g.bins) {
      bins.push_back({{"lo", b.lo},
                      {"hi", b.hi},
                      {"count_0", b.count_0},
                      {"count_1", b.count_1},
                      {"mean_pred", b.mean_pred},
                      {"weighted_actual", b.weighted_actual}});
    }
    return json{{"group", g.group}, {"n_real", g.n_real}, {"n_fake", g.n_fake},
                {"bacc", opt_json(g.bacc)}, {"auc", opt_json(g.auc)}, {"ece", opt_json(g.ece)},
                {"nll", opt_json(g.nll)}, {"notes", g.notes}, {"bins", bins}};
  };
  json j;
  j["config"] = {{"bins", options.bins},
                 {"threshold", options.threshold},
                 {"epsilon", options.epsilon},
                 {"hard_labels", options.hard_labels}};
  j["groups"] = json::array();
  for (const auto& g : groups) j["groups"].push_back(group_json(g));
  j["average"] = group_json(average);
  return j;
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  out << "group,n_real,n_fake,bacc,auc,ece,nll,notes\n";
  auto row = [&](const GroupMetrics& g) {
    std::string notes;
    for (const auto& n : g.notes) notes += (notes.empty() ? "" : "; ") + n;
    out << g.group << ',' << g.n_real << ',' << g.n_fake << ',' << fmt(g.bacc) << ',' << fmt(g.auc)
        << ',' << fmt(g.ece) << ',' << fmt(g.nll) << ',' << notes << '\n';
  };
  for (const auto& g : groups) row(g);
  row(average);
  return out.str();
}

std::string MetricsReport::bins_csv() const {
  std::ostringstream out;
  out << "group,bin,lo,hi,count_0,count_1,mean_pred,weighted_actual\n";
  for (const auto& g : groups) {
    for (std::size_t m = 0; m < g.bins.size(); ++m) {
      const auto& b = g.bins[m];
      out << g.group << ',' << m + 1 << ',' << fmt(b.lo) << ',' << fmt(b.hi) << ',' << b.count_0
          << ',' << b.count_1 << ',' << fmt(b.mean_pred) << ',' << fmt(b.weighted_actual) << '\n';
    }
  }
  return out.str();
}

MetricsReport build_report(const ScoreSet& s, const ReportOptions& options) {
  if (s.entries.empty()) throw Error("cannot build a report from an empty score set");
  s.validate();
  MetricsReport report;
  report.options = options;

  std::map<std::string, ScoreSet> by_group;
  std::vector<const ScoreEntry*> shared;
  for (const auto& e : s.entries) {
    if (e.group == kSharedGroup) {
      shared.push_back(&e);
    } else {
      by_group[e.group].entries.push_back(e);
    }
  }
  if (by_group.empty()) by_group[kSharedGroup];
  for (auto& [name, set] : by_group) {
    for (const auto* e : shared) set.entries.push_back(*e);
    set.threshold = options.threshold;
  }

  for (const auto& [name, set] : by_group) {
    GroupMetrics g;
    g.group = name;
    g.n_real = static_cast<long>(set.count(0));
    g.n_fake = static_cast<long>(set.count(1));
    const bool both = g.n_real > 0 && g.n_fake > 0;
    if (both) {
      g.bacc = balanced_accuracy(set);
      g.auc = auc(set);
    } else {
      g.notes.push_back(g.n_real == 0 ? "no real samples: bacc, auc, nll absent"
                                      : "no fake samples: bacc, auc, nll absent");
    }
    if (options.hard_labels) {
      g.notes.push_back("hard labels: calibration metrics absent");
    } else {
      g.ece = binary_ece(set, options.bins);
      if (both) g.nll = balanced_nll(set, options.epsilon);
      g.bins = ece_bins(set, options.bins);
    }
    report.groups.push_back(std::move(g));
  }

  GroupMetrics& avg = report.average;
  avg.group = "AVG";
  auto macro = [&](std::optional<double> GroupMetrics::*field) -> std::optional<double> {
    double sum = 0.0;
    int n = 0;
    for (const auto& g : report.groups) {
      if (g.*field) {
        sum += *(g.*field);
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / n;
  };
  avg.bacc = macro(&GroupMetrics::bacc);
  avg.auc = macro(&GroupMetrics::auc);
  avg.ece = macro(&GroupMetrics::ece);
  avg.nll = macro(&GroupMetrics::nll);
  for (const auto& g : report.groups) {
    avg.n_real += g.n_real;
    avg.n_fake += g.n_fake;
  }
  return report;
}

void write_report(const MetricsReport& report, const std::filesystem::path& dir) {
  write_file(dir / "report.csv", report.to_csv());
  write_file(dir / "report.json", report.to_json().dump(2) + "\n");
  write_file(dir / "bins.csv", report.bins_csv());
}

std::string scores_to_csv(const ScoreSet& s) {
  std::ostringstream out;
  out << "id,group,prob,label\n";
  for (const auto& e : s.entries) {
    out << e.id << ',' << e.group << ',' << fmt(e.prob) << ',' << e.label << '\n';
  }
  return out.str();
}

ScoreSet scores_from_csv(std::string_view text) {
  ScoreSet s;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"id", "group", "prob", "label"}) {
    throw Error("scores file must start with header id,group,prob,label");
  }
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw Error("scores line " + std::to_string(lineno) + ": expected 4 fields");
    try {
      s.entries.push_back({f[0], f[1], std::stod(f[2]), std::stoi(f[3])});
    } catch (const std::exception&) {
      throw Error("scores line " + std::to_string(lineno) + ": unparsable number");
    }
  }
  s.validate();
  return s;
}

}  // namespace fakescope::metrics
