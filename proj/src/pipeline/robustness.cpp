#include <spdlog/spdlog.h>

#include <cstdio>
#include <sstream>

#include "fakescope/common/error.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/common/parallel.hpp"
#include "fakescope/pipeline/pipeline.hpp"

namespace fakescope::pipeline {

namespace {

std::string group_of(const manifest::ImageRecord& r) {
  if (r.label == manifest::Label::kReal) return metrics::kSharedGroup;
  return r.generator_tag + ":" + std::string(manifest::to_string(r.variant));
}

std::vector<cv::Mat> load_all(const manifest::DatasetManifest& m) {
  std::vector<cv::Mat> images(m.records.size());
  parallel_for(m.records.size(), [&](std::size_t i) { images[i] = load_image(m.resolve(m.records[i])); });
  return images;
}

metrics::ScoreSet score_images(const manifest::DatasetManifest& m, const std::vector<cv::Mat>& images,
                               detector::CropScorer& scorer,
                               const std::optional<augment::PerturbationSpec>& perturbation, std::uint64_t seed) {
  metrics::ScoreSet set;
  set.entries.resize(m.records.size());
  parallel_for(m.records.size(), [&](std::size_t i) {
    const auto& r = m.records[i];
    const cv::Mat view = perturbation ? augment::apply_perturbation(images[i], *perturbation, seed, r.id) : images[i];
    const auto score = detector::score_image(scorer, view);
    set.entries[i] = {r.id, group_of(r), score.prob, r.label == manifest::Label::kFake ? 1 : 0};
  });
  return set;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

}  // namespace

metrics::ScoreSet score_manifest(const manifest::DatasetManifest& m, detector::CropScorer& scorer,
                                 const std::optional<augment::PerturbationSpec>& perturbation, std::uint64_t seed) {
  return score_images(m, load_all(m), scorer, perturbation, seed);
}

std::vector<SweepPoint> robustness_sweep(const manifest::DatasetManifest& eval, detector::CropScorer& scorer,
                                         const std::vector<augment::PerturbationSpec>& grid, std::uint64_t seed,
                                         const metrics::ReportOptions& options) {
  if (eval.records.empty()) throw Error("robustness sweep needs a non-empty evaluation manifest");
  const auto images = load_all(eval);
  std::vector<SweepPoint> out;
  for (const auto& spec : grid) {
    SweepPoint p{spec, std::nullopt, ""};
    try {
      p.report = metrics::build_report(score_images(eval, images, scorer, spec, seed), options);
    } catch (const DegenerateSizeError& e) {
      spdlog::warn("robustness point {}={} skipped: {}", augment::to_string(spec.kind), spec.param(), e.what());
      p.note = e.what();
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string robustness_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out << "kind,param,bacc,auc,ece,nll\n";
  for (const auto& pt : points) {
    if (!pt.report) continue;
    const auto& avg = pt.report->average;
    char p[32];
    std::snprintf(p, sizeof p, "%.17g", pt.spec.param());
    out << augment::to_string(pt.spec.kind) << ',' << p << ',' << fmt(avg.bacc) << ',' << fmt(avg.auc) << ','
        << fmt(avg.ece) << ',' << fmt(avg.nll) << '\n';
  }
  return out.str();
}

}  // namespace fakescope::pipeline
