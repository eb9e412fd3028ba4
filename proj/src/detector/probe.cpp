#include "fakescope/detector/probe.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <deque>
#include <numeric>

#include "fakescope/common/error.hpp"
#include "fakescope/common/image_io.hpp"
#include "fakescope/common/parallel.hpp"
#include "fakescope/common/rng.hpp"
#include "fakescope/detector/crops.hpp"
#include "fakescope/manifest/batches.hpp"
#include "fakescope/metrics/metrics.hpp"

namespace fakescope::detector {

using nlohmann::json;

EarlyStopStep early_stop_step(EarlyStopState state, double new_val_bacc) {
  EarlyStopStep step;
  if (new_val_bacc >= state.best_bacc + state.min_delta) {
    state.best_bacc = new_val_bacc;
    state.evals_since_improve = 0;
    step.improved = true;
  } else {
    ++state.evals_since_improve;
  }
  step.keep_going = state.evals_since_improve < state.patience;
  step.state = state;
  return step;
}

double ToyProbe::logit(const std::vector<double>& features) const {
  if (features.size() != weights.size()) {
    throw Error("feature dimension " + std::to_string(features.size()) + " does not match probe (" +
                std::to_string(weights.size()) + ")");
  }
  double z = bias;
  for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * features[i];
  return z;
}

void ToyProbe::validate() const {
  feature_spec.validate();
  if (weights.size() != static_cast<std::size_t>(feature_spec.dimension())) {
    throw ConfigError("probe weight length does not match its feature dimension");
  }
}

json ToyProbe::to_json() const {
  json evals = json::array();
  for (const auto& e : training_log.evaluations) {
    evals.push_back({{"iteration", e.iteration}, {"val_bacc", e.val_bacc}, {"train_loss", e.train_loss}});
  }
  return json{{"feature_spec", feature_spec.to_json()},
              {"weights", weights},
              {"bias", bias},
              {"training_log",
               {{"iterations", training_log.iterations},
                {"stopped_early", training_log.stopped_early},
                {"best_iteration", training_log.best_iteration},
                {"best_val_bacc", training_log.best_val_bacc},
                {"evaluations", evals}}}};
}

ToyProbe ToyProbe::from_json(const json& j) {
  try {
    ToyProbe p;
    p.feature_spec = FeatureSpec::from_json(j.at("feature_spec"));
    p.weights = j.at("weights").get<std::vector<double>>();
    p.bias = j.at("bias").get<double>();
    if (j.contains("training_log")) {
      const auto& log = j.at("training_log");
      p.training_log.iterations = log.value("iterations", 0L);
      p.training_log.stopped_early = log.value("stopped_early", false);
      p.training_log.best_iteration = log.value("best_iteration", 0L);
      p.training_log.best_val_bacc = log.value("best_val_bacc", 0.0);
      for (const auto& e : log.value("evaluations", json::array())) {
        p.training_log.evaluations.push_back(
            {e.at("iteration").get<long>(), e.at("val_bacc").get<double>(), e.value("train_loss", 0.0)});
      }
    }
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed probe file: ") + e.what());
  }
}

void ToyProbe::save(const std::filesystem::path& path) const {
  write_file(path, to_json().dump(2) + "\n");
}

ToyProbe ToyProbe::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse probe " + path.string() + ": " + e.what());
  }
}

namespace {

double sigmoid_stable(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double val_bacc(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                const std::vector<double>& w, double b) {
  metrics::ScoreSet s;
  s.entries.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = b;
    for (std::size_t k = 0; k < w.size(); ++k) z += w[k] * x[i][k];
    s.entries.push_back({"", "", sigmoid_stable(z), y[i]});
  }
  return metrics::balanced_accuracy(s);
}

constexpr int kWarmupBatches = 8;

}  // namespace

ToyProbe fit_probe(const FeatureSpec& spec, const std::function<std::vector<Sample>(long)>& next_batch,
                   const std::vector<std::vector<double>>& val_features, const std::vector<int>& val_labels,
                   const ProbeSchedule& schedule) {
  spec.validate();
  const std::size_t d = static_cast<std::size_t>(spec.dimension());
  if (val_features.size() != val_labels.size() || val_features.empty()) {
    throw Error("validation set is empty or inconsistent");
  }
  if (schedule.early_stop.eval_interval < 1) throw ConfigError("eval_interval must be positive");
  if (!(schedule.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");

  // Standardisation statistics from the first few batches, which are then
  // used for training as usual.
  std::deque<std::vector<Sample>> prefetched;
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  std::size_t n_stat = 0;
  for (long i = 0; i < std::min<long>(kWarmupBatches, schedule.max_iterations); ++i) {
    prefetched.push_back(next_batch(i));
    for (const auto& s : prefetched.back()) {
      if (s.features.size() != d) throw Error("training sample has the wrong feature dimension");
      for (std::size_t k = 0; k < d; ++k) mean[k] += s.features[k];
      ++n_stat;
    }
  }
  if (n_stat == 0) throw Error("no training samples");
  for (auto& m : mean) m /= static_cast<double>(n_stat);
  for (const auto& batch : prefetched) {
    for (const auto& s : batch) {
      for (std::size_t k = 0; k < d; ++k) sd[k] += (s.features[k] - mean[k]) * (s.features[k] - mean[k]);
    }
  }
  for (auto& v : sd) {
    v = std::sqrt(v / static_cast<double>(n_stat));
    if (v < 1e-12) v = 1.0;
  }
  auto standardize = [&](const std::vector<double>& x) {
    std::vector<double> z(d);
    for (std::size_t k = 0; k < d; ++k) z[k] = (x[k] - mean[k]) / sd[k];
    return z;
  };
  std::vector<std::vector<double>> val_z;
  val_z.reserve(val_features.size());
  for (const auto& x : val_features) val_z.push_back(standardize(x));

  // Adam over (w, b); index d holds the bias.
  std::vector<double> theta(d + 1, 0.0), m1(d + 1, 0.0), m2(d + 1, 0.0), grad(d + 1);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> best = theta;

  ToyProbe probe;
  probe.feature_spec = spec;
  EarlyStopState state = schedule.early_stop;
  double loss_acc = 0.0;
  long loss_n = 0;
  long it = 0;
  auto evaluate = [&](long iteration) {
    const std::vector<double> w(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(d));
    const double bacc = val_bacc(val_z, val_labels, w, theta[d]);
    probe.training_log.evaluations.push_back({iteration, bacc, loss_n ? loss_acc / loss_n : 0.0});
    loss_acc = 0.0;
    loss_n = 0;
    const EarlyStopStep step = early_stop_step(state, bacc);
    state = step.state;
    if (step.improved) {
      best = theta;
      probe.training_log.best_iteration = iteration;
      probe.training_log.best_val_bacc = bacc;
    }
    return step.keep_going;
  };

  bool evaluated_last = false;
  for (; it < schedule.max_iterations; ++it) {
    std::vector<Sample> batch;
    if (!prefetched.empty()) {
      batch = std::move(prefetched.front());
      prefetched.pop_front();
    } else {
      batch = next_batch(it);
    }
    if (batch.empty()) throw Error("empty training batch at iteration " + std::to_string(it));
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& s : batch) {
      if (s.features.size() != d) throw Error("training sample has the wrong feature dimension");
      const std::vector<double> x = standardize(s.features);
      double z = theta[d];
      for (std::size_t k = 0; k < d; ++k) z += theta[k] * x[k];
      const double p = sigmoid_stable(z);
      const double pc = std::clamp(p, 1e-12, 1.0 - 1e-12);
      loss_acc += -(s.label * std::log(pc) + (1.0 - s.label) * std::log(1.0 - pc));
      ++loss_n;
      const double g = p - s.label;
      for (std::size_t k = 0; k < d; ++k) grad[k] += g * x[k];
      grad[d] += g;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    const double t = static_cast<double>(it + 1);
    const double c1 = 1.0 - std::pow(beta1, t), c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t k = 0; k <= d; ++k) {
      const double g = grad[k] * inv;
      m1[k] = beta1 * m1[k] + (1.0 - beta1) * g;
      m2[k] = beta2 * m2[k] + (1.0 - beta2) * g * g;
      theta[k] -= schedule.learning_rate * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + eps);
    }
    evaluated_last = false;
    if ((it + 1) % state.eval_interval == 0) {
      evaluated_last = true;
      if (!evaluate(it + 1)) {
        probe.training_log.stopped_early = true;
        ++it;
        break;
      }
    }
  }
  if (!evaluated_last && !probe.training_log.stopped_early) evaluate(it);
  probe.training_log.iterations = it;

  // Fold the standardisation into the weights.
  probe.weights.assign(d, 0.0);
  probe.bias = best[d];
  for (std::size_t k = 0; k < d; ++k) {
    probe.weights[k] = best[k] / sd[k];
    probe.bias -= best[k] * mean[k] / sd[k];
  }
  return probe;
}

std::vector<double> image_features(const cv::Mat& bgr, const FeatureSpec& spec) {
  const auto crops = tile_crops(bgr.cols, bgr.rows, spec.crop_size);
  std::vector<double> mean(static_cast<std::size_t>(spec.dimension()), 0.0);
  for (const auto& r : crops) {
    const auto f = spectral_features(luma(extract_crop(bgr, r)), spec);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += f[k];
  }
  for (auto& v : mean) v /= static_cast<double>(crops.size());
  return mean;
}

std::vector<double> training_view_features(const cv::Mat& bgr, const FeatureSpec& spec,
                                           const augment::AugPolicy& policy, std::uint64_t seed,
                                           std::string_view key) {
  cv::Mat view = bgr;
  if (augment::uses_post_processing(policy.name)) view = augment::inpaintedpp_post(view, policy, seed, key);
  view = augment::standard_aug(view, policy, seed, key);
  const int S = spec.crop_size;
  Rng rng(seed, key, "train_crop");
  const int x = view.cols > S ? static_cast<int>(rng.uniform_int(0, view.cols - S)) : 0;
  const int y = view.rows > S ? static_cast<int>(rng.uniform_int(0, view.rows - S)) : 0;
  return spectral_features(luma(extract_crop(view, cv::Rect(x, y, S, S))), spec);
}

ToyProbe train_probe(const manifest::DatasetManifest& train, const manifest::DatasetManifest& val,
                     const augment::AugPolicy& policy, const ProbeSchedule& schedule,
                     const FeatureSpec& spec) {
  if (train.records.empty()) throw Error("training manifest is empty");
  if (val.records.empty()) throw Error("validation manifest is empty");
  policy.validate();
  spec.validate();

  const auto allowed = augment::variants_for_policy(policy.name);
  std::vector<cv::Mat> images(train.records.size());
  std::vector<std::size_t> needed;
  for (std::size_t i = 0; i < train.records.size(); ++i) {
    const auto& r = train.records[i];
    if (r.label == manifest::Label::kReal ||
        std::find(allowed.begin(), allowed.end(), r.variant) != allowed.end()) {
      needed.push_back(i);
    }
  }
  parallel_for(needed.size(), [&](std::size_t k) {
    images[needed[k]] = load_image(train.resolve(train.records[needed[k]]));
  });

  std::vector<std::vector<double>> val_x(val.records.size());
  std::vector<int> val_y(val.records.size());
  parallel_for(val.records.size(), [&](std::size_t i) {
    val_x[i] = image_features(load_image(val.resolve(val.records[i])), spec);
    val_y[i] = val.records[i].label == manifest::Label::kFake ? 1 : 0;
  });

  const long n_real = static_cast<long>(train.count(manifest::Label::kReal));
  const int batch_size = static_cast<int>(std::min<long>(schedule.batch_size, 2 * n_real));
  manifest::BalancedBatches batches(train, batch_size, schedule.seed,
                                    std::set<manifest::Variant>(allowed.begin(), allowed.end()));

  auto next_batch = [&](long it) {
    auto batch = batches.next();
    if (!batch) {
      batches.next_epoch();
      batch = batches.next();
    }
    struct View {
      cv::Mat image;
      double label;
      std::string key;
    };
    std::vector<View> views;
    for (std::size_t j = 0; j < batch->reals.size(); ++j) {
      const cv::Mat& real = images[batch->reals[j]];
      const cv::Mat& fake = images[batch->fakes[j]];
      const std::string key = "it" + std::to_string(it) + ".slot" + std::to_string(j);
      View a{real, 0.0, key + ".real"}, b{fake, 1.0, key + ".fake"};
      if (augment::uses_mixing(policy.name) && real.size() == fake.size()) {
        for (View* v : {&a, &b}) {
          const cv::Mat& other = v == &a ? fake : real;
          const double other_label = 1.0 - v->label;
          Rng mix(schedule.seed, v->key, "mix");
          const double u = mix.uniform();
          const double lambda = mix.uniform(policy.lambda.lo, policy.lambda.hi);
          if (u < policy.p_cutmix) {
            auto r = augment::cutmix(v->image, other, lambda, schedule.seed, v->key);
            v->image = r.image;
            v->label = r.weight_a * v->label + (1.0 - r.weight_a) * other_label;
          } else if (u < policy.p_cutmix + policy.p_mixup) {
            v->image = augment::mixup(v->image, other, lambda);
            v->label = lambda * v->label + (1.0 - lambda) * other_label;
          }
        }
      }
      views.push_back(std::move(a));
      views.push_back(std::move(b));
    }
    std::vector<Sample> samples(views.size());
    parallel_for(views.size(), [&](std::size_t k) {
      samples[k].features = training_view_features(views[k].image, spec, policy, schedule.seed, views[k].key);
      samples[k].label = views[k].label;
    });
    return samples;
  };

  ToyProbe probe = fit_probe(spec, next_batch, val_x, val_y, schedule);
  spdlog::info("probe trained: {} iterations, best val bAcc {:.4f} at {}", probe.training_log.iterations,
               probe.training_log.best_val_bacc, probe.training_log.best_iteration);
  return probe;
}

}  // namespace fakescope::detector
