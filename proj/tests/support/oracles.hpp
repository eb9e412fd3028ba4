#pragma once

// Straightforward reimplementations used as references. They share no code
// with the library beyond the data types.

#include <vector>

#include "fakescope/metrics/metrics.hpp"

namespace fakescope::oracle {

double bacc(const metrics::ScoreSet& s);
// O(n^2) pairwise comparison.
double auc(const metrics::ScoreSet& s);
// Linear scan over bin edges ((m-1)/M, m/M], with 0 in the first bin.
double ece(const metrics::ScoreSet& s, int bins);
double nll(const metrics::ScoreSet& s, double epsilon);

struct StopResult {
  bool stopped = false;
  int stop_index = -1;  // index into the trace of the evaluation that stopped training
};
// Step-by-step replay of the patience rule on a validation bAcc trace.
StopResult simulate_early_stop(const std::vector<double>& trace, double min_delta, int patience);

}  // namespace fakescope::oracle
