#include "fakescope/manifest/plan.hpp"

#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_map>

#include "fakescope/common/error.hpp"
#include "fakescope/common/hash.hpp"
#include "fakescope/genclient/request.hpp"
#include "fakescope/manifest/ingest.hpp"

namespace fakescope::manifest {

using nlohmann::json;

std::string_view to_string(MaskKind k) {
  switch (k) {
    case MaskKind::kEmpty: return "empty";
    case MaskKind::kSegmentation: return "segmentation";
    case MaskKind::kBox: return "box";
  }
  return "empty";
}

MaskKind mask_kind_from_string(std::string_view s) {
  if (s == "empty") return MaskKind::kEmpty;
  if (s == "segmentation") return MaskKind::kSegmentation;
  if (s == "box") return MaskKind::kBox;
  throw Error("unknown mask kind '" + std::string(s) + "'");
}

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::kPending: return "pending";
    case JobStatus::kDone: return "done";
    case JobStatus::kFailed: return "failed";
  }
  return "pending";
}

JobStatus job_status_from_string(std::string_view s) {
  if (s == "pending") return JobStatus::kPending;
  if (s == "done") return JobStatus::kDone;
  if (s == "failed") return JobStatus::kFailed;
  throw Error("unknown job status '" + std::string(s) + "'");
}

std::uint64_t job_seed(std::uint64_t seed, std::string_view record_id, Variant variant) {
  return derive_seed(seed, record_id, to_string(variant));
}

std::string job_id(std::string_view record_id, Variant variant) {
  std::string id(record_id);
  id += ':';
  id += to_string(variant);
  return id;
}

std::vector<GenerationJob> plan_fake_variants(const DatasetManifest& manifest, std::uint64_t seed,
                                              const GenerationParams& params) {
  std::unordered_map<std::string_view, std::vector<std::size_t>> by_record;
  for (std::size_t i = 0; i < manifest.annotations.size(); ++i) {
    by_record[manifest.annotations[i].record_id].push_back(i);
  }
  const genclient::ReplacementPools pools(manifest.taxonomy);

  std::vector<GenerationJob> jobs;
  jobs.reserve(6 * manifest.count(Label::kReal));
  std::vector<std::string> missing;
  for (const ImageRecord& rec : manifest.records) {
    if (rec.label != Label::kReal) continue;
    const auto it = by_record.find(rec.id);
    if (it == by_record.end()) {
      missing.push_back(rec.id);
      continue;
    }
    const std::size_t object = select_editable_object_index(rec, manifest.annotations, it->second);
    const std::string& category = manifest.annotations[object].category;

    for (Variant v : kFakeVariants) {
      GenerationJob job;
      job.id = job_id(rec.id, v);
      job.record_id = rec.id;
      job.variant = v;
      job.seed = job_seed(seed, rec.id, v);
      job.steps = params.steps;
      job.guidance = params.guidance;
      job.annotation_index = object;
      switch (v) {
        case Variant::kSelfCond:
          job.mask = MaskKind::kEmpty;
          job.annotation_index.reset();
          break;
        case Variant::kInpaintSame:
          job.mask = MaskKind::kSegmentation;
          job.category = category;
          break;
        case Variant::kInpaintDiff:
          job.mask = MaskKind::kBox;
          job.category = pools.draw(category, genclient::ReplacementMode::kDifferent, job.seed);
          break;
        case Variant::kSelfCondBg:
        case Variant::kInpaintSameBg:
          job.mask = MaskKind::kSegmentation;
          break;
        case Variant::kInpaintDiffBg:
          job.mask = MaskKind::kBox;
          break;
        case Variant::kReal:
          break;
      }
      if (is_background_variant(v)) {
        const GenerationJob& sibling = jobs[jobs.size() - 1];
        job.depends_on = sibling.id;
        job.category = sibling.category;
        job.prompt = sibling.prompt;
      } else if (!job.category.empty()) {
        job.prompt = genclient::prompt_for(job.category);
      }
      jobs.push_back(std::move(job));
    }
  }
  if (!missing.empty()) {
    std::string msg = "real records without annotation:";
    for (const auto& id : missing) msg += " " + id;
    throw Error(msg);
  }
  return jobs;
}

namespace {

json job_to_json(const GenerationJob& j) {
  json o;
  o["id"] = j.id;
  o["record_id"] = j.record_id;
  o["variant"] = to_string(j.variant);
  o["seed"] = j.seed;
  o["mask"] = to_string(j.mask);
  if (j.annotation_index) o["annotation_index"] = *j.annotation_index;
  o["category"] = j.category;
  o["prompt"] = j.prompt;
  o["steps"] = j.steps;
  o["guidance"] = j.guidance;
  if (j.depends_on) o["depends_on"] = *j.depends_on;
  o["status"] = to_string(j.status);
  o["output_path"] = j.output_path;
  return o;
}

GenerationJob job_from_json(const json& o) {
  GenerationJob j;
  j.id = o.at("id").get<std::string>();
  j.record_id = o.at("record_id").get<std::string>();
  j.variant = variant_from_string(o.at("variant").get<std::string>());
  j.seed = o.at("seed").get<std::uint64_t>();
  j.mask = mask_kind_from_string(o.at("mask").get<std::string>());
  if (o.contains("annotation_index")) j.annotation_index = o["annotation_index"].get<std::size_t>();
  j.category = o.value("category", "");
  j.prompt = o.value("prompt", "");
  j.steps = o.value("steps", 50);
  j.guidance = o.value("guidance", 7.5);
  if (o.contains("depends_on")) j.depends_on = o["depends_on"].get<std::string>();
  j.status = job_status_from_string(o.value("status", "pending"));
  j.output_path = o.value("output_path", "");
  return j;
}

}  // namespace

std::string serialize_jobs(const std::vector<GenerationJob>& jobs) {
  std::string out;
  for (const auto& j : jobs) out += job_to_json(j).dump() + "\n";
  return out;
}

std::vector<GenerationJob> parse_jobs(std::string_view jsonl) {
  std::vector<GenerationJob> jobs;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (!line.empty()) jobs.push_back(job_from_json(json::parse(line)));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed job ledger: ") + e.what());
  }
  return jobs;
}

}  // namespace fakescope::manifest
