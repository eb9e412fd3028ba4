#include "fakescope/manifest/batches.hpp"

#include <algorithm>
#include <map>

#include "fakescope/common/error.hpp"
#include "fakescope/common/hash.hpp"

namespace fakescope::manifest {

BalancedBatches::BalancedBatches(const DatasetManifest& manifest, int batch_size,
                                 std::uint64_t seed, std::optional<std::set<Variant>> variants)
    : half_(batch_size / 2), seed_(seed), rng_(seed, "balanced_batches", "epoch0") {
  if (batch_size <= 0 || batch_size % 2 != 0) {
    throw Error("batch_size must be a positive even number, got " + std::to_string(batch_size));
  }
  std::map<Variant, std::vector<std::size_t>> by_variant;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    if (r.label == Label::kReal) {
      reals_.push_back(i);
    } else if (!variants || variants->contains(r.variant)) {
      by_variant[r.variant].push_back(i);
    }
  }
  for (auto& [v, idx] : by_variant) fakes_by_variant_.push_back(std::move(idx));
  if (reals_.empty() || fakes_by_variant_.empty()) {
    throw Error("balanced batches need both real and fake records");
  }
  shuffle_reals();
}

void BalancedBatches::shuffle_reals() {
  order_ = reals_;
  // Fisher-Yates with the seeded stream.
  for (std::size_t i = order_.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(order_[i - 1], order_[j]);
  }
  cursor_ = 0;
}

void BalancedBatches::next_epoch() {
  ++epoch_;
  rng_ = Rng(seed_, "balanced_batches", "epoch" + std::to_string(epoch_));
  shuffle_reals();
}

std::size_t BalancedBatches::batches_per_epoch() const {
  return reals_.size() / static_cast<std::size_t>(half_);
}

std::optional<Batch> BalancedBatches::next() {
  if (order_.size() - cursor_ < static_cast<std::size_t>(half_)) return std::nullopt;
  Batch b;
  b.reals.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                 order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + half_));
  cursor_ += static_cast<std::size_t>(half_);
  b.fakes.reserve(static_cast<std::size_t>(half_));
  for (int k = 0; k < half_; ++k) {
    const auto& pool = fakes_by_variant_[static_cast<std::size_t>(
        rng_.uniform_int(0, static_cast<std::int64_t>(fakes_by_variant_.size()) - 1))];
    b.fakes.push_back(pool[static_cast<std::size_t>(
        rng_.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))]);
  }
  return b;
}

}  // namespace fakescope::manifest
