#include "fakescope/pipeline/config.hpp"

#include "fakescope/common/error.hpp"
#include "fakescope/common/hash.hpp"
#include "fakescope/common/image_io.hpp"

namespace fakescope::pipeline {

using nlohmann::json;
using augment::PerturbationKind;
using augment::PerturbationSpec;

namespace {

const json& section(const json& j, const char* name) {
  static const json empty = json::object();
  if (!j.contains(name)) return empty;
  const json& s = j.at(name);
  if (!s.is_object()) throw ConfigError(std::string("config section '") + name + "' must be an object");
  return s;
}

}  // namespace

std::vector<PerturbationSpec> default_robustness_grid() {
  std::vector<PerturbationSpec> grid;
  for (int qf : {100, 90, 80, 70, 60}) grid.push_back(PerturbationSpec::jpeg(qf));
  for (double s : {1.0, 0.75, 0.5}) grid.push_back(PerturbationSpec::resize(s));
  for (double sigma : {0.0, 1.0, 2.0, 3.0}) grid.push_back(PerturbationSpec::blur(sigma));
  return grid;
}

json perturbation_to_json(const PerturbationSpec& s) {
  json j{{"kind", augment::to_string(s.kind)}};
  switch (s.kind) {
    case PerturbationKind::kJpeg: j["jpeg_qf"] = s.jpeg_qf; break;
    case PerturbationKind::kResize: j["resize_scale"] = s.resize_scale; break;
    case PerturbationKind::kScaleCrop:
      j["resize_scale"] = s.resize_scale;
      j["crop_max"] = s.crop_max;
      break;
    case PerturbationKind::kBlur: j["blur_sigma"] = s.blur_sigma; break;
    case PerturbationKind::kNoise: j["noise_sigma"] = s.noise_sigma; break;
    case PerturbationKind::kCutout: j["cutout_frac"] = s.cutout_frac; break;
    case PerturbationKind::kJitter:
      j["brightness"] = s.jitter.brightness;
      j["contrast"] = s.jitter.contrast;
      break;
    case PerturbationKind::kSocial: break;
  }
  return j;
}

PerturbationSpec perturbation_from_json(const json& j) {
  PerturbationSpec s;
  s.kind = augment::perturbation_kind_from_string(j.at("kind").get<std::string>());
  s.jpeg_qf = j.value("jpeg_qf", s.jpeg_qf);
  s.resize_scale = j.value("resize_scale", s.resize_scale);
  s.crop_max = j.value("crop_max", s.crop_max);
  s.blur_sigma = j.value("blur_sigma", s.blur_sigma);
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  s.cutout_frac = j.value("cutout_frac", s.cutout_frac);
  if (j.contains("brightness")) s.jitter.brightness = j.at("brightness").get<std::array<double, 3>>();
  if (j.contains("contrast")) s.jitter.contrast = j.at("contrast").get<std::array<double, 3>>();
  s.validate();
  return s;
}

std::string ExperimentConfig::hash() const { return sha256_hex(raw.dump()); }

std::string ExperimentConfig::section_hash(const std::vector<std::string>& sections) const {
  json picked = json::object();
  for (const auto& s : sections) picked[s] = raw.contains(s) ? raw.at(s) : json(nullptr);
  picked["seed"] = seed;
  picked["tool_version"] = manifest::tool_version();
  return sha256_hex(picked.dump());
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.raw = j;
  try {
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir.string());

    const json& d = section(j, "dataset");
    c.dataset.listing = d.value("listing", "");
    if (d.contains("annotations") && !d.at("annotations").is_null()) {
      c.dataset.annotations = d.at("annotations").get<std::string>();
    }
    c.dataset.min_objects = d.value("min_objects", c.dataset.min_objects);
    c.dataset.source_tag = d.value("source_tag", c.dataset.source_tag);
    c.dataset.require_creative_commons = d.value("require_creative_commons", c.dataset.require_creative_commons);

    const json& g = section(j, "generation");
    c.generation.endpoint = g.value("endpoint", c.generation.endpoint);
    c.generation.params.steps = g.value("steps", c.generation.params.steps);
    c.generation.params.guidance = g.value("guidance", c.generation.params.guidance);
    c.generation.max_in_flight = g.value("max_in_flight", c.generation.max_in_flight);
    c.generation.retries = g.value("retries", c.generation.retries);
    c.generation.generator_tag = g.value("generator_tag", c.generation.generator_tag);
    for (const auto& v : g.value("variants", json::array())) {
      c.generation.variants.push_back(manifest::variant_from_string(v.get<std::string>()));
    }
    if (c.generation.max_in_flight < 1) throw ConfigError("generation.max_in_flight must be at least 1");
    if (c.generation.retries < 0) throw ConfigError("generation.retries must be non-negative");
    if (c.generation.params.steps < 1) throw ConfigError("generation.steps must be positive");

    const json& a = section(j, "augment");
    c.augment.policy = augment::AugPolicy::from_json(section(a, "policy"));
    c.augment.train_fraction = a.value("train_fraction", c.augment.train_fraction);
    c.augment.val_fraction = a.value("val_fraction", c.augment.val_fraction);
    c.augment.materialize = a.value("materialize", c.augment.materialize);
    if (c.augment.train_fraction <= 0.0 || c.augment.val_fraction <= 0.0 ||
        c.augment.train_fraction + c.augment.val_fraction >= 1.0) {
      throw ConfigError("augment split fractions must be positive and leave room for evaluation");
    }

    const json& det = section(j, "detector");
    c.detector.handle = detector::DetectorHandle::from_json(det);
    const json& sch = section(det, "schedule");
    auto& s = c.detector.schedule;
    s.batch_size = sch.value("batch_size", s.batch_size);
    s.learning_rate = sch.value("learning_rate", s.learning_rate);
    s.max_iterations = sch.value("max_iterations", s.max_iterations);
    s.early_stop.eval_interval = sch.value("eval_interval", s.early_stop.eval_interval);
    s.early_stop.patience = sch.value("patience", s.early_stop.patience);
    s.early_stop.min_delta = sch.value("min_delta", s.early_stop.min_delta);
    if (s.batch_size < 2 || s.batch_size % 2 != 0) throw ConfigError("detector.schedule.batch_size must be even");
    if (s.max_iterations < 1 || s.early_stop.eval_interval < 1 || s.early_stop.patience < 1) {
      throw ConfigError("detector.schedule iteration counts must be positive");
    }
    c.detector.features = detector::FeatureSpec::from_json(section(det, "features"));

    const json& m = section(j, "metrics");
    c.metrics.bins = m.value("bins", c.metrics.bins);
    c.metrics.threshold = m.value("threshold", c.metrics.threshold);
    c.metrics.epsilon = m.value("epsilon", c.metrics.epsilon);
    c.metrics.hard_labels = m.value("hard_labels", c.metrics.hard_labels);
    if (c.metrics.bins < 1) throw ConfigError("metrics.bins must be at least 1");
    if (!(c.metrics.epsilon > 0.0 && c.metrics.epsilon < 0.5)) throw ConfigError("metrics.epsilon must lie in (0, 0.5)");

    const json& r = section(j, "robustness");
    if (r.contains("grid")) {
      c.robustness.clear();
      for (const auto& p : r.at("grid")) c.robustness.push_back(perturbation_from_json(p));
    }

    const json& sp = section(j, "spectra");
    c.spectra.size = sp.value("size", c.spectra.size);
    c.spectra.bands = sp.value("bands", c.spectra.bands);
    if (sp.contains("variant")) c.spectra.variant = manifest::variant_from_string(sp.at("variant").get<std::string>());
    c.spectra.pair_kind = sp.value("pair_kind", c.spectra.pair_kind);
    c.spectra.max_pairs = sp.value("max_pairs", c.spectra.max_pairs);
    if (c.spectra.size != 0 && c.spectra.size < 2) throw ConfigError("spectra.size must be 0 or at least 2");
    if (c.spectra.bands < 1 || c.spectra.max_pairs < 1) throw ConfigError("spectra.bands and max_pairs must be positive");

    const json& au = section(j, "audit");
    c.audit.options.ks_threshold = au.value("ks_threshold", c.audit.options.ks_threshold);
    c.audit.options.container_threshold = au.value("container_threshold", c.audit.options.container_threshold);
    c.audit.options.spike_threshold = au.value("spike_threshold", c.audit.options.spike_threshold);
    c.audit.rebalance = au.value("rebalance", c.audit.rebalance);
    if (au.contains("manifest") && !au.at("manifest").is_null()) c.audit.manifest = au.at("manifest").get<std::string>();
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("empty path component in override: " + key);
    if (!node->is_object()) throw ConfigError("override path crosses a non-object: " + key);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

ExperimentConfig load_config(const ConfigSources& sources) {
  json j = json::object();
  if (sources.file) {
    if (!std::filesystem::exists(*sources.file)) throw ConfigError("config file not found: " + sources.file->string());
    j = json::parse(read_file(*sources.file), nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + sources.file->string());
  }
  for (const auto& o : sources.overrides) apply_override(j, o);
  if (sources.seed) j["seed"] = *sources.seed;
  if (sources.output_dir) j["output_dir"] = sources.output_dir->string();
  return ExperimentConfig::from_json(j);
}

}  // namespace fakescope::pipeline
