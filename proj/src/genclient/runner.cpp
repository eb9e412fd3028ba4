#include "fakescope/genclient/runner.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>
#include <unordered_map>

#include "fakescope/common/base64.hpp"
#include "fakescope/common/error.hpp"
#include "fakescope/common/hash.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/common/parallel.hpp"
#include "fakescope/genclient/request.hpp"

namespace fakescope::genclient {

namespace fs = std::filesystem;
using manifest::GenerationJob;
using manifest::JobStatus;
using manifest::MaskKind;
using nlohmann::json;

namespace {

struct Context {
  const manifest::DatasetManifest& reals;
  std::unordered_map<std::string_view, const manifest::ImageRecord*> by_id;

  const manifest::ImageRecord& record(const std::string& id) const {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw Error("job references unknown record " + id);
    return *it->second;
  }
};

BinaryMask job_mask(const GenerationJob& job, const manifest::DatasetManifest& reals, int width,
                    int height) {
  if (job.mask == MaskKind::kEmpty) return BinaryMask(width, height);
  if (!job.annotation_index || *job.annotation_index >= reals.annotations.size()) {
    throw Error("job " + job.id + " lacks a valid annotation index");
  }
  const auto& ann = reals.annotations[*job.annotation_index];
  if (job.mask == MaskKind::kSegmentation) return BinaryMask::from_rle(ann.mask);
  if (ann.bbox.w <= 0 || ann.bbox.h <= 0) throw Error("degenerate bounding box for " + job.id);
  return BinaryMask::from_rect(width, height, ann.bbox);
}

InpaintRequest build_request(const GenerationJob& job, const cv::Mat& image,
                             const manifest::DatasetManifest& reals) {
  const manifest::GenerationParams params{job.steps, job.guidance};
  if (job.variant == manifest::Variant::kSelfCond) {
    return build_self_conditioned(image, job.seed, params);
  }
  const auto& ann = reals.annotations.at(job.annotation_index.value());
  const auto mode = job.variant == manifest::Variant::kInpaintSame ? ReplacementMode::kSame
                                                                   : ReplacementMode::kDifferent;
  InpaintRequest req = build_inpaint(image, ann, mode, reals.taxonomy, job.seed, params);
  if (!job.prompt.empty() && req.prompt != job.prompt) {
    throw Error("job " + job.id + ": planned prompt differs from rebuilt request");
  }
  return req;
}

std::string output_name(const GenerationJob& job, const std::string& key_hash) {
  std::string name = job.record_id + "_" + std::string(to_string(job.variant)) + "_" +
                     key_hash.substr(0, 16) + ".png";
  for (char& c : name) {
    if (c == '/' || c == '\\' || c == ':') c = '_';
  }
  return "images/" + name;
}

std::optional<cv::Mat> call_sidecar(SidecarTransport& transport, const InpaintRequest& req,
                                    const std::string& body, const std::string& job_id) {
  const HttpResult res = transport.post("/inpaint", body);
  if (res.status != 200) {
    spdlog::warn("job {}: sidecar returned HTTP {}", job_id, res.status);
    return std::nullopt;
  }
  try {
    const json j = json::parse(res.body);
    cv::Mat img = decode_image(base64_decode(j.at("image_png_b64").get<std::string>()));
    if (img.cols != req.mask.width() || img.rows != req.mask.height()) {
      spdlog::warn("job {}: sidecar output has wrong dimensions", job_id);
      return std::nullopt;
    }
    return img;
  } catch (const std::exception& e) {
    spdlog::warn("job {}: cannot decode sidecar response: {}", job_id, e.what());
    return std::nullopt;
  }
}

std::string health_check(SidecarTransport& transport) {
  const HttpResult res = transport.get("/health");
  if (res.status != 200) {
    throw Error("generation sidecar unreachable (health check: " +
                (res.status == 0 ? res.body : "HTTP " + std::to_string(res.status)) + ")");
  }
  try {
    const json j = json::parse(res.body);
    if (j.value("status", "") != "ok") throw Error("sidecar not ready: " + j.value("status", ""));
    return j.value("model_id", "unknown");
  } catch (const json::exception& e) {
    throw Error(std::string("malformed health response: ") + e.what());
  }
}

}  // namespace

RunSummary run_jobs(std::vector<GenerationJob>& jobs, const manifest::DatasetManifest& reals,
                    SidecarTransport& transport, const RunOptions& options) {
  RunSummary summary;
  if (jobs.empty()) return summary;

  Context ctx{reals, {}};
  for (const auto& r : reals.records) ctx.by_id.emplace(r.id, &r);
  std::unordered_map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < jobs.size(); ++i) index_of.emplace(jobs[i].id, i);

  // Keys are computed up front so finished work is recognised without I/O to
  // the sidecar.
  std::vector<std::string> keys(jobs.size());
  std::vector<std::size_t> sidecar_jobs, background_jobs;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    (jobs[i].needs_sidecar() ? sidecar_jobs : background_jobs).push_back(i);
  }
  std::vector<std::optional<InpaintRequest>> requests(jobs.size());
  parallel_for(sidecar_jobs.size(), [&](std::size_t k) {
    const std::size_t i = sidecar_jobs[k];
    const auto& rec = ctx.record(jobs[i].record_id);
    const cv::Mat image = load_image(reals.resolve(rec));
    requests[i] = build_request(jobs[i], image, reals);
    keys[i] = requests[i]->hash();
  });
  for (std::size_t i : background_jobs) {
    const auto& job = jobs[i];
    if (!job.depends_on || !index_of.contains(*job.depends_on)) {
      throw Error("background job " + job.id + " has no known dependency");
    }
    const std::size_t dep = index_of.at(*job.depends_on);
    keys[i] = sha256_hex(keys[dep] + "|" + std::string(to_string(job.variant)) + "|" +
                         std::string(to_string(job.mask)));
  }

  std::mutex status_mu;
  auto set_status = [&](std::size_t i, JobStatus s, std::string path) {
    std::lock_guard lock(status_mu);
    jobs[i].status = s;
    jobs[i].output_path = std::move(path);
  };

  std::vector<std::size_t> pending;
  for (std::size_t i : sidecar_jobs) {
    const std::string rel = output_name(jobs[i], keys[i]);
    if (fs::exists(options.output_dir / rel)) {
      set_status(i, JobStatus::kDone, rel);
      ++summary.skipped;
    } else {
      pending.push_back(i);
    }
  }

  if (!pending.empty()) {
    summary.model_id = health_check(transport);
    std::atomic<std::size_t> next{0};
    std::atomic<int> calls{0}, failed{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= pending.size()) return;
        const std::size_t i = pending[k];
        const std::string body = requests[i]->to_json();
        const std::string rel = output_name(jobs[i], keys[i]);
        bool ok = false;
        for (int attempt = 0; attempt <= options.retries && !ok; ++attempt) {
          ++calls;
          if (auto img = call_sidecar(transport, *requests[i], body, jobs[i].id)) {
            write_file(options.output_dir / rel, encode_png(*img));
            ok = true;
          }
        }
        if (ok) {
          set_status(i, JobStatus::kDone, rel);
        } else {
          ++failed;
          set_status(i, JobStatus::kFailed, "");
        }
      }
    };
    const int n_workers = std::max(1, std::min<int>(options.max_in_flight, static_cast<int>(pending.size())));
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    summary.sidecar_calls = calls.load();
    summary.failed += failed.load();
  }

  for (std::size_t i : background_jobs) {
    GenerationJob& job = jobs[i];
    const GenerationJob& dep = jobs[index_of.at(*job.depends_on)];
    const std::string rel = output_name(job, keys[i]);
    if (fs::exists(options.output_dir / rel)) {
      set_status(i, JobStatus::kDone, rel);
      ++summary.skipped;
      continue;
    }
    if (dep.status != JobStatus::kDone) {
      set_status(i, JobStatus::kFailed, "");
      ++summary.failed;
      continue;
    }
    const auto& rec = ctx.record(job.record_id);
    const cv::Mat original = load_image(reals.resolve(rec));
    const cv::Mat generated = load_image(options.output_dir / dep.output_path);
    const BinaryMask mask = job_mask(job, reals, original.cols, original.rows);
    write_file(options.output_dir / rel, encode_png(composite_background(original, generated, mask)));
    set_status(i, JobStatus::kDone, rel);
    ++summary.composites;
  }
  return summary;
}

manifest::DatasetManifest with_generated(const manifest::DatasetManifest& reals,
                                         const std::vector<GenerationJob>& jobs,
                                         const fs::path& output_dir,
                                         const std::string& generator_tag) {
  manifest::DatasetManifest out;
  out.taxonomy = reals.taxonomy;
  out.provenance = reals.provenance;
  out.annotations = reals.annotations;
  out.root = output_dir;
  const fs::path abs_root = fs::absolute(output_dir);
  std::unordered_map<std::string_view, const manifest::ImageRecord*> by_id;
  for (const auto& r : reals.records) {
    manifest::ImageRecord copy = r;
    copy.path = fs::relative(fs::absolute(reals.resolve(r)), abs_root).generic_string();
    out.records.push_back(std::move(copy));
    by_id.emplace(r.id, &r);
  }
  for (const auto& job : jobs) {
    if (job.status != JobStatus::kDone) continue;
    const auto it = by_id.find(job.record_id);
    if (it == by_id.end()) throw Error("job references unknown record " + job.record_id);
    const auto& real = *it->second;
    manifest::ImageRecord rec;
    rec.id = job.id;
    rec.path = job.output_path;
    rec.label = manifest::Label::kFake;
    rec.pair_id = real.id;
    rec.variant = job.variant;
    rec.generator_tag = generator_tag;
    rec.source_tag = real.source_tag;
    rec.width = real.width;
    rec.height = real.height;
    rec.container = Container::kPng;
    rec.seed = job.seed;
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace fakescope::genclient
