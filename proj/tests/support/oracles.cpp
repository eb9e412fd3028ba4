#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace fakescope::oracle {

double bacc(const metrics::ScoreSet& s) {
  double right[2] = {0, 0}, total[2] = {0, 0};
  for (const auto& e : s.entries) {
    const int pred = e.prob >= s.threshold ? 1 : 0;
    total[e.label] += 1;
    if (pred == e.label) right[e.label] += 1;
  }
  return 0.5 * (right[0] / total[0] + right[1] / total[1]);
}

double auc(const metrics::ScoreSet& s) {
  double wins = 0, pairs = 0;
  for (const auto& f : s.entries) {
    if (f.label != 1) continue;
    for (const auto& r : s.entries) {
      if (r.label != 0) continue;
      pairs += 1;
      if (f.prob > r.prob) wins += 1;
      else if (f.prob == r.prob) wins += 0.5;
    }
  }
  return wins / pairs;
}

double ece(const metrics::ScoreSet& s, int bins) {
  double n = 0, n0 = 0, n1 = 0;
  for (const auto& e : s.entries) {
    n += 1;
    (e.label ? n1 : n0) += 1;
  }
  double total_w = 0;
  for (const auto& e : s.entries) total_w += n / (2.0 * (e.label ? n1 : n0));
  double out = 0;
  for (int m = 1; m <= bins; ++m) {
    const double lo = static_cast<double>(m - 1) / bins;
    const double hi = static_cast<double>(m) / bins;
    double w_sum = 0, p_sum = 0, y_sum = 0;
    for (const auto& e : s.entries) {
      const bool in = (e.prob > lo && e.prob <= hi) || (m == 1 && e.prob <= 0.0) || (m == bins && e.prob > 1.0);
      if (!in) continue;
      const double w = n / (2.0 * (e.label ? n1 : n0));
      w_sum += w;
      p_sum += w * e.prob;
      y_sum += w * e.label;
    }
    if (w_sum > 0) out += w_sum / total_w * std::fabs(y_sum / w_sum - p_sum / w_sum);
  }
  return out;
}

double nll(const metrics::ScoreSet& s, double epsilon) {
  double sum0 = 0, sum1 = 0, n0 = 0, n1 = 0;
  for (const auto& e : s.entries) {
    const double p = std::min(std::max(e.prob, epsilon), 1.0 - epsilon);
    if (e.label == 1) {
      sum1 += -std::log(p);
      n1 += 1;
    } else {
      sum0 += -std::log(1.0 - p);
      n0 += 1;
    }
  }
  return 0.5 * (sum0 / n0 + sum1 / n1);
}

StopResult simulate_early_stop(const std::vector<double>& trace, double min_delta, int patience) {
  bool have_best = false;
  double best = 0;
  int bad = 0;
  for (int i = 0; i < static_cast<int>(trace.size()); ++i) {
    if (!have_best || trace[i] >= best + min_delta) {
      best = trace[i];
      have_best = true;
      bad = 0;
    } else {
      ++bad;
      if (bad == patience) return {true, i};
    }
  }
  return {false, -1};
}

}  // namespace fakescope::oracle
