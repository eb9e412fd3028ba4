#include "fakescope/pipeline/pipeline.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spdlog/spdlog.h>
#include <unistd.h>

#include <cmath>
#include <fstream>
#include <map>

#include "fakescope/audit/audit.hpp"
#include "fakescope/common/error.hpp"
#include "fakescope/common/hash.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/common/parallel.hpp"
#include "fakescope/detector/probe.hpp"
#include "fakescope/genclient/runner.hpp"
#include "fakescope/manifest/ingest.hpp"
#include "fakescope/manifest/io.hpp"
#include "fakescope/spectral/spectrum.hpp"

namespace fakescope::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kDataset: return "dataset";
    case Stage::kGenerate: return "generate";
    case Stage::kAugment: return "augment";
    case Stage::kScore: return "score";
    case Stage::kEvaluate: return "evaluate";
    case Stage::kRobustness: return "robustness";
    case Stage::kSpectra: return "spectra";
    case Stage::kAudit: return "audit";
  }
  return "?";
}

Stage stage_from_string(std::string_view s) {
  if (s == "build-dataset") return Stage::kDataset;
  for (Stage st : kAllStages) {
    if (to_string(st) == s) return st;
  }
  throw ConfigError("unknown stage: " + std::string(s));
}

std::vector<Stage> stage_dependencies(Stage s) {
  switch (s) {
    case Stage::kDataset: return {};
    case Stage::kGenerate: return {Stage::kDataset};
    case Stage::kAugment: return {Stage::kGenerate};
    case Stage::kScore: return {Stage::kAugment};
    case Stage::kEvaluate: return {Stage::kScore};
    case Stage::kRobustness: return {Stage::kAugment, Stage::kScore};
    case Stage::kSpectra: return {Stage::kGenerate};
    case Stage::kAudit: return {Stage::kGenerate};
  }
  return {};
}

int split_of(const std::string& pair_id, std::uint64_t seed, double train_fraction, double val_fraction) {
  const double u = static_cast<double>(derive_seed(seed, pair_id, "split") >> 11) * 0x1.0p-53;
  if (u < train_fraction) return 0;
  if (u < train_fraction + val_fraction) return 1;
  return 2;
}

namespace {

constexpr char kStageFile[] = "stage.json";

// One pipeline per output directory. A lock left by a dead process is taken over.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    for (int attempt = 0; attempt < 2; ++attempt) {
      const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
      if (fd >= 0) {
        const std::string pid = std::to_string(::getpid()) + "\n";
        [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
        ::close(fd);
        return;
      }
      std::ifstream in(path_);
      long pid = 0;
      in >> pid;
      if (pid > 0 && ::kill(static_cast<pid_t>(pid), 0) == 0) {
        throw Error("another pipeline (pid " + std::to_string(pid) + ") holds " + path_.string());
      }
      spdlog::warn("removing stale lock {}", path_.string());
      fs::remove(path_);
    }
    throw Error("cannot acquire " + path_.string());
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

std::optional<json> read_stage_record(const fs::path& dir) {
  const fs::path p = dir / kStageFile;
  if (!fs::exists(p)) return std::nullopt;
  json j = json::parse(read_file(p), nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

class Runner {
 public:
  Runner(const ExperimentConfig& config, const PipelineOptions& options)
      : c_(config), options_(options), out_(config.output_dir) {}

  fs::path dir(Stage s) const { return out_ / std::string(to_string(s)); }

  std::string stage_hash(Stage s) const {
    static const std::map<Stage, std::vector<std::string>> sections = {
        {Stage::kDataset, {"dataset"}},
        {Stage::kGenerate, {"generation"}},
        {Stage::kAugment, {"augment"}},
        {Stage::kScore, {"detector", "augment"}},
        {Stage::kEvaluate, {"metrics"}},
        {Stage::kRobustness, {"robustness", "metrics"}},
        {Stage::kSpectra, {"spectra"}},
        {Stage::kAudit, {"audit"}}};
    json j{{"stage", to_string(s)}, {"config", c_.section_hash(sections.at(s))}};
    for (Stage up : stage_dependencies(s)) j["upstream"][std::string(to_string(up))] = recorded_hash(up);
    return sha256_hex(j.dump());
  }

  std::string recorded_hash(Stage s) const {
    const auto rec = read_stage_record(dir(s));
    return rec ? rec->value("stage_hash", "") : "";
  }

  void require_upstream(Stage s) const {
    for (Stage up : stage_dependencies(s)) {
      if (!read_stage_record(dir(up))) {
        throw Error("stage '" + std::string(to_string(s)) + "' needs the outputs of '" + std::string(to_string(up)) +
                    "'; run that stage first");
      }
    }
  }

  StageOutcome run(Stage s) {
    require_upstream(s);
    const std::string hash = stage_hash(s);
    if (recorded_hash(s) == hash) {
      spdlog::info("stage {} is up to date", to_string(s));
      return {s, true, hash};
    }
    fs::create_directories(dir(s));
    fs::remove(dir(s) / kStageFile);
    spdlog::info("running stage {}", to_string(s));
    json extra = json::object();
    switch (s) {
      case Stage::kDataset: extra = dataset(); break;
      case Stage::kGenerate: extra = generate(); break;
      case Stage::kAugment: extra = augment_stage(); break;
      case Stage::kScore: extra = score(); break;
      case Stage::kEvaluate: extra = evaluate(); break;
      case Stage::kRobustness: extra = robustness(); break;
      case Stage::kSpectra: extra = spectra(); break;
      case Stage::kAudit: extra = audit_stage(); break;
    }
    json record{{"stage", to_string(s)},
                {"stage_hash", hash},
                {"config_hash", c_.hash()},
                {"tool_version", manifest::tool_version()},
                {"summary", extra}};
    write_file(dir(s) / kStageFile, record.dump(2) + "\n");
    return {s, false, hash};
  }

 private:
  void stamp(manifest::DatasetManifest& m) const {
    m.provenance.config_hash = c_.hash();
    m.provenance.tool_version = manifest::tool_version();
  }

  json dataset() {
    const auto& d = c_.dataset;
    if (d.listing.empty()) throw ConfigError("dataset.listing is not set");
    if (!fs::exists(d.listing)) throw ConfigError("dataset.listing does not exist: " + d.listing.string());
    if (d.annotations && !fs::exists(*d.annotations)) {
      throw ConfigError("dataset.annotations does not exist: " + d.annotations->string());
    }
    manifest::IngestOptions opt;
    opt.listing = d.listing;
    opt.annotations = d.annotations;
    if (d.require_creative_commons) opt.license_filter = manifest::is_creative_commons;
    opt.min_objects = d.min_objects;
    opt.source_tag = d.source_tag;
    opt.output_dir = dir(Stage::kDataset);
    auto result = manifest::ingest_reals(opt);
    if (result.manifest.records.empty()) throw Error("no real image survived ingestion");
    stamp(result.manifest);
    manifest::write_manifest(result.manifest, dir(Stage::kDataset));
    manifest::write_rejections(result.rejections, dir(Stage::kDataset) / manifest::kRejectionsFile);
    return {{"reals", result.manifest.records.size()}, {"rejected", result.rejections.size()}};
  }

  json generate() {
    const auto reals = manifest::read_manifest(dir(Stage::kDataset));
    auto jobs = manifest::plan_fake_variants(reals, c_.seed, c_.generation.params);
    if (!c_.generation.variants.empty()) {
      std::set<manifest::Variant> keep(c_.generation.variants.begin(), c_.generation.variants.end());
      for (auto v : c_.generation.variants) {
        if (manifest::is_background_variant(v)) keep.insert(manifest::generated_sibling(v));
      }
      std::erase_if(jobs, [&](const manifest::GenerationJob& j) { return !keep.contains(j.variant); });
    }
    std::shared_ptr<genclient::SidecarTransport> transport = options_.transport;
    if (!transport) transport = genclient::make_transport(c_.generation.endpoint);
    genclient::RunOptions ro;
    ro.output_dir = dir(Stage::kGenerate);
    ro.max_in_flight = c_.generation.max_in_flight;
    ro.retries = c_.generation.retries;
    const auto summary = genclient::run_jobs(jobs, reals, *transport, ro);
    write_file(dir(Stage::kGenerate) / "jobs.jsonl", manifest::serialize_jobs(jobs));

    std::string tag = c_.generation.generator_tag;
    if (tag.empty()) tag = summary.model_id.empty() ? previous_generator_tag() : summary.model_id;
    if (tag.empty()) tag = "unknown-generator";
    auto m = genclient::with_generated(reals, jobs, dir(Stage::kGenerate), tag);
    stamp(m);
    manifest::write_manifest(m, dir(Stage::kGenerate));
    if (summary.failed > 0) {
      throw Error(std::to_string(summary.failed) + " generation job(s) failed; rerun to retry them");
    }
    if (c_.generation.variants.empty()) m.validate_training();
    return {{"jobs", jobs.size()},
            {"sidecar_calls", summary.sidecar_calls},
            {"composites", summary.composites},
            {"skipped", summary.skipped},
            {"generator_tag", tag}};
  }

  // Tag recorded by an earlier run, for reruns where every output already
  // existed and the sidecar was never contacted.
  std::string previous_generator_tag() const {
    const auto rec = read_stage_record(dir(Stage::kGenerate));
    if (rec && rec->contains("summary")) return rec->at("summary").value("generator_tag", "");
    const fs::path header = dir(Stage::kGenerate) / manifest::kHeaderFile;
    if (fs::exists(header)) {
      try {
        const auto m = manifest::read_manifest(dir(Stage::kGenerate));
        for (const auto& r : m.records) {
          if (r.label == manifest::Label::kFake) return r.generator_tag;
        }
      } catch (const std::exception&) {
      }
    }
    return "";
  }

  json augment_stage() {
    const auto m = manifest::read_manifest(dir(Stage::kGenerate));
    const auto& a = c_.augment;
    const char* names[3] = {"train", "val", "eval"};
    json counts = json::object();
    std::vector<manifest::DatasetManifest> parts(3);
    for (auto& p : parts) {
      p.taxonomy = m.taxonomy;
      p.provenance = m.provenance;
      p.root = m.root;
    }
    std::map<std::string, int> split_by_record;
    for (const auto& r : m.records) {
      const int k = split_of(r.pair_id, c_.seed, a.train_fraction, a.val_fraction);
      parts[k].records.push_back(r);
      split_by_record[r.id] = k;
    }
    for (const auto& ann : m.annotations) {
      const auto it = split_by_record.find(ann.record_id);
      if (it != split_by_record.end()) parts[it->second].annotations.push_back(ann);
    }
    for (int k = 0; k < 3; ++k) {
      const fs::path d = dir(Stage::kAugment) / names[k];
      auto part = manifest::rebase(parts[k], d);
      stamp(part);
      manifest::write_manifest(part, d);
      counts[names[k]] = {{"real", part.count(manifest::Label::kReal)}, {"fake", part.count(manifest::Label::kFake)}};
    }
    write_file(dir(Stage::kAugment) / "policy.json", a.policy.to_json().dump(2) + "\n");

    if (a.materialize) {
      const fs::path view_dir = dir(Stage::kAugment) / "train_view";
      auto view = manifest::rebase(parts[0], view_dir);
      const auto& train = parts[0];
      parallel_for(train.records.size(), [&](std::size_t i) {
        const auto& r = train.records[i];
        cv::Mat img = load_image(train.resolve(r));
        if (augment::uses_post_processing(a.policy.name)) img = augment::inpaintedpp_post(img, a.policy, c_.seed, r.id);
        img = augment::standard_aug(img, a.policy, c_.seed, r.id);
        std::string name = r.id;
        for (char& ch : name) {
          if (ch == '/' || ch == '\\' || ch == ':') ch = '_';
        }
        const std::string rel = "images/" + name + ".png";
        write_file(view_dir / rel, encode_png(img));
        auto& out = view.records[i];
        out.path = rel;
        out.width = img.cols;
        out.height = img.rows;
        out.container = Container::kPng;
        out.jpeg_qf.reset();
      });
      view.annotations.clear();
      stamp(view);
      manifest::write_manifest(view, view_dir);
    }
    return {{"splits", counts}, {"policy", augment::to_string(a.policy.name)}};
  }

  manifest::DatasetManifest split(const char* name) const {
    return manifest::read_manifest(dir(Stage::kAugment) / name);
  }

  json score() {
    const auto train = split("train");
    const auto val = split("val");
    const auto eval = split("eval");
    detector::DetectorHandle handle = c_.detector.handle;
    json extra = json::object();
    if (handle.kind == detector::DetectorKind::kToyProbe && handle.location.empty()) {
      auto schedule = c_.detector.schedule;
      schedule.seed = c_.seed;
      const auto probe = detector::train_probe(train, val, c_.augment.policy, schedule, c_.detector.features);
      const fs::path probe_path = dir(Stage::kScore) / "probe.json";
      probe.save(probe_path);
      handle.location = fs::absolute(probe_path).string();
      handle.crop_size = probe.feature_spec.crop_size;
      extra["probe"] = {{"iterations", probe.training_log.iterations},
                        {"best_val_bacc", probe.training_log.best_val_bacc},
                        {"stopped_early", probe.training_log.stopped_early}};
    }
    write_file(dir(Stage::kScore) / "detector.json", handle.to_json().dump(2) + "\n");
    auto scorer = detector::make_scorer(handle);
    const auto scores = score_manifest(eval, *scorer);
    write_file(dir(Stage::kScore) / "scores.csv", metrics::scores_to_csv(scores));
    extra["scored"] = scores.entries.size();
    return extra;
  }

  json evaluate() {
    auto scores = metrics::scores_from_csv(read_file(dir(Stage::kScore) / "scores.csv"));
    const auto report = metrics::build_report(scores, c_.metrics);
    write_report(report, dir(Stage::kEvaluate));
    json extra{{"groups", report.groups.size()}};
    if (report.average.bacc) extra["avg_bacc"] = *report.average.bacc;
    if (report.average.auc) extra["avg_auc"] = *report.average.auc;
    return extra;
  }

  json robustness() {
    const auto eval = split("eval");
    const auto handle =
        detector::DetectorHandle::from_json(json::parse(read_file(dir(Stage::kScore) / "detector.json")));
    auto scorer = detector::make_scorer(handle);
    const auto points = robustness_sweep(eval, *scorer, c_.robustness, c_.seed, c_.metrics);
    write_file(dir(Stage::kRobustness) / "robustness.csv", robustness_csv(points));
    long skipped = 0;
    for (const auto& p : points) skipped += p.report ? 0 : 1;
    return {{"points", points.size()}, {"skipped", skipped}};
  }

  json spectra() {
    const auto m = manifest::read_manifest(dir(Stage::kGenerate));
    const auto& sp = c_.spectra;
    std::vector<std::pair<const manifest::ImageRecord*, const manifest::ImageRecord*>> pairs;
    for (const auto& r : m.records) {
      if (r.label != manifest::Label::kFake || r.variant != sp.variant) continue;
      const auto* real = m.find(r.pair_id);
      if (!real) continue;
      pairs.emplace_back(real, &r);
      if (static_cast<long>(pairs.size()) >= sp.max_pairs) break;
    }
    if (pairs.empty()) throw Error(std::string("no ") + std::string(manifest::to_string(sp.variant)) + " pairs to analyse");
    int size = sp.size;
    if (size == 0) {
      int min_side = std::numeric_limits<int>::max();
      for (const auto& [a, b] : pairs) min_side = std::min({min_side, a->width, a->height, b->width, b->height});
      size = 1;
      while (size * 2 <= min_side) size *= 2;
    }
    const auto map = spectral::diff_power_spectrum(
        pairs.size(),
        [&](std::size_t i) {
          return spectral::ImagePair{load_image(m.resolve(*pairs[i].first)), load_image(m.resolve(*pairs[i].second))};
        },
        size, sp.pair_kind);
    spectral::emit_spectrum(map, dir(Stage::kSpectra), sp.bands);
    return {{"count", map.count}, {"size", map.size}, {"pair_kind", map.pair_kind}};
  }

  json audit_stage() {
    const fs::path target = c_.audit.manifest ? *c_.audit.manifest : dir(Stage::kGenerate);
    if (!fs::exists(target / manifest::kHeaderFile)) throw ConfigError("audit.manifest has no manifest: " + target.string());
    const auto m = manifest::read_manifest(target);
    const auto report = audit::format_bias_report(m, c_.audit.options);
    write_file(dir(Stage::kAudit) / "audit.json", report.to_json().dump(2) + "\n");
    write_file(dir(Stage::kAudit) / "audit.txt", report.to_text());
    json extra{{"flagged", report.flagged()}, {"ks_qf", report.ks_qf}};
    if (c_.audit.rebalance) {
      fs::path base = fs::absolute(target).lexically_normal();
      if (!base.has_filename()) base = base.parent_path();
      const fs::path unbiased = base.parent_path() / (base.filename().string() + "_unbiased");
      auto balanced = audit::rebalance_compression(m, unbiased, c_.seed);
      stamp(balanced);
      manifest::write_manifest(balanced, unbiased);
      const auto after = audit::format_bias_report(balanced, c_.audit.options);
      write_file(dir(Stage::kAudit) / "audit_unbiased.json", after.to_json().dump(2) + "\n");
      write_file(dir(Stage::kAudit) / "audit_unbiased.txt", after.to_text());
      extra["unbiased_manifest"] = unbiased.string();
      extra["unbiased_flagged"] = after.flagged();
    }
    return extra;
  }

  const ExperimentConfig& c_;
  const PipelineOptions& options_;
  fs::path out_;
};

}  // namespace

std::vector<StageOutcome> run_pipeline(const ExperimentConfig& config, const std::set<Stage>& stages,
                                       const PipelineOptions& options) {
  if (stages.empty()) throw ConfigError("no stages requested");
  DirLock lock(config.output_dir);
  write_file(config.output_dir / "config.json", config.raw.dump(2) + "\n");
  Runner runner(config, options);
  std::vector<StageOutcome> out;
  for (Stage s : kAllStages) {
    if (stages.contains(s)) out.push_back(runner.run(s));
  }
  return out;
}

}  // namespace fakescope::pipeline
