#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fakescope/manifest/types.hpp"

namespace fakescope::manifest {

enum class MaskKind {
  kEmpty,         // all-zero mask (self-conditioning)
  kSegmentation,  // the selected object's segmentation mask
  kBox,           // the selected object's filled bounding box
};

std::string_view to_string(MaskKind k);
MaskKind mask_kind_from_string(std::string_view s);

enum class JobStatus { kPending, kDone, kFailed };

std::string_view to_string(JobStatus s);
JobStatus job_status_from_string(std::string_view s);

struct GenerationParams {
  int steps = 50;
  double guidance = 7.5;
};

// One unit of generation work. For sidecar jobs the mask/prompt describe the
// inpainting request; for background-restored jobs `mask` is the region taken
// from the sibling's output, everything else comes from the original.
struct GenerationJob {
  std::string id;
  std::string record_id;
  Variant variant = Variant::kSelfCond;
  std::uint64_t seed = 0;
  MaskKind mask = MaskKind::kEmpty;
  std::optional<std::size_t> annotation_index;
  std::string category;  // category named in the prompt; empty for self-cond
  std::string prompt;
  int steps = 50;
  double guidance = 7.5;
  std::optional<std::string> depends_on;
  JobStatus status = JobStatus::kPending;
  std::string output_path;

  bool needs_sidecar() const { return !is_background_variant(variant); }
  bool operator==(const GenerationJob&) const = default;
};

// FNV-1a over le64(seed) || record_id || 0x00 || variant name.
std::uint64_t job_seed(std::uint64_t seed, std::string_view record_id, Variant variant);

std::string job_id(std::string_view record_id, Variant variant);

// Six jobs per real record in kFakeVariants order.
std::vector<GenerationJob> plan_fake_variants(const DatasetManifest& manifest,
                                              std::uint64_t seed,
                                              const GenerationParams& params = {});

std::string serialize_jobs(const std::vector<GenerationJob>& jobs);
std::vector<GenerationJob> parse_jobs(std::string_view jsonl);

}  // namespace fakescope::manifest
