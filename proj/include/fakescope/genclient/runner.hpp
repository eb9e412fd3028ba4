#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fakescope/genclient/transport.hpp"
#include "fakescope/manifest/plan.hpp"
#include "fakescope/manifest/types.hpp"

namespace fakescope::genclient {

struct RunOptions {
  std::filesystem::path output_dir;  // generated PNGs go to output_dir/images
  int max_in_flight = 4;
  int retries = 2;
};

struct RunSummary {
  int sidecar_calls = 0;  // POST /inpaint attempts
  int composites = 0;
  int skipped = 0;  // already present on disk
  int failed = 0;
  std::string model_id;
};

// Executes jobs in dependency order. Sidecar jobs run with up to
// max_in_flight concurrent requests; background-restored jobs are composited
// locally from their sibling's output. Outputs are content-addressed, so jobs
// whose file already exists are marked done without contacting the sidecar.
// Throws Error when the sidecar health check fails before the first call.
RunSummary run_jobs(std::vector<manifest::GenerationJob>& jobs,
                    const manifest::DatasetManifest& reals, SidecarTransport& transport,
                    const RunOptions& options);

// A manifest rooted at `output_dir` holding the reals plus one fake record
// per done job. Real paths are rewritten relative to the new root.
manifest::DatasetManifest with_generated(const manifest::DatasetManifest& reals,
                                         const std::vector<manifest::GenerationJob>& jobs,
                                         const std::filesystem::path& output_dir,
                                         const std::string& generator_tag);

}  // namespace fakescope::genclient
