#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "fakescope/common/rng.hpp"
#include "fakescope/manifest/types.hpp"

namespace fakescope::manifest {

// Record indices into the manifest; the first half are reals.
struct Batch {
  std::vector<std::size_t> reals;
  std::vector<std::size_t> fakes;
};

// Class-balanced batch stream. Each epoch visits every real at most once in
// a seeded order; each fake slot draws a variant uniformly and then a record
// of that variant uniformly. The stream ends when fewer than batch_size / 2
// unused reals remain.
class BalancedBatches {
 public:
  BalancedBatches(const DatasetManifest& manifest, int batch_size, std::uint64_t seed,
                  std::optional<std::set<Variant>> variants = std::nullopt);

  std::optional<Batch> next();
  // Starts the next epoch with a fresh permutation.
  void next_epoch();
  int epoch() const { return epoch_; }
  std::size_t batches_per_epoch() const;

 private:
  void shuffle_reals();

  std::vector<std::size_t> reals_;
  std::vector<std::vector<std::size_t>> fakes_by_variant_;
  int half_;
  std::uint64_t seed_;
  int epoch_ = 0;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> order_;
  Rng rng_;
};

}  // namespace fakescope::manifest
