#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <iostream>
#include <set>
#include <sstream>

#include "fakescope/common/error.hpp"
#include "fakescope/pipeline/config.hpp"
#include "fakescope/pipeline/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

std::set<fakescope::pipeline::Stage> parse_stages(const std::string& list) {
  std::set<fakescope::pipeline::Stage> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(fakescope::pipeline::stage_from_string(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  namespace pl = fakescope::pipeline;

  CLI::App app{"Image-forensics experiment harness"};
  app.set_version_flag("--version", std::string(FAKESCOPE_VERSION));
  app.require_subcommand(1);

  std::string config_file;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string stages;
  std::vector<std::string> overrides;
  bool verbose = false;
  app.add_option("--config", config_file, "experiment configuration (JSON)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "global seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--stages", stages, "comma-separated stages for 'all'");
  app.add_option("--set", overrides, "override a config key, e.g. --set metrics.bins=10");
  app.add_flag("-v,--verbose", verbose, "debug logging");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"build-dataset", "ingest and filter the real images"},
      {"generate", "produce the fake variants through the sidecar"},
      {"augment", "split the manifest and materialize the training view"},
      {"score", "train or load the detector and score the eval split"},
      {"evaluate", "compute per-group metrics from the scores"},
      {"robustness", "score the eval split under each perturbation"},
      {"spectra", "average difference power spectra of real/fake pairs"},
      {"audit", "report format bias between the classes"},
      {"all", "run every stage (or --stages) in order"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  pl::ExperimentConfig config;
  std::set<pl::Stage> requested;
  try {
    pl::ConfigSources sources;
    if (!config_file.empty()) sources.file = config_file;
    sources.overrides = overrides;
    if (*seed_opt) sources.seed = seed;
    if (!out_dir.empty()) sources.output_dir = out_dir;
    config = pl::load_config(sources);

    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "all") {
      if (stages.empty()) {
        requested.insert(std::begin(pl::kAllStages), std::end(pl::kAllStages));
      } else {
        requested = parse_stages(stages);
      }
    } else {
      if (!stages.empty()) throw fakescope::ConfigError("--stages only applies to 'all'");
      requested.insert(pl::stage_from_string(sub));
    }
  } catch (const fakescope::ConfigError& e) {
    spdlog::error("configuration: {}", e.what());
    return kExitConfig;
  }

  try {
    for (const auto& o : pl::run_pipeline(config, requested)) {
      std::cout << pl::to_string(o.stage) << (o.skipped ? " up-to-date " : " done ") << o.hash.substr(0, 12) << "\n";
    }
  } catch (const fakescope::ConfigError& e) {
    spdlog::error("configuration: {}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitStage;
  }
  return 0;
}
