// Writes a synthetic COCO-style dataset for smoke runs.
#include <CLI11.hpp>
#include <iostream>

#include "fakescope/fixtures/synthetic.hpp"

int main(int argc, char** argv) {
  namespace fx = fakescope::fixtures;
  CLI::App app{"Synthetic COCO-style fixture writer"};
  fx::FixtureOptions o;
  std::string style = "mixed";
  int qf = 0;
  app.add_option("dir", o.dir, "output directory")->required();
  app.add_option("--count", o.count, "number of images")->check(CLI::PositiveNumber);
  app.add_option("--min-side", o.min_side)->check(CLI::Range(16, 8192));
  app.add_option("--max-side", o.max_side)->check(CLI::Range(16, 8192));
  app.add_flag("--square", o.square);
  app.add_option("--seed", o.seed);
  app.add_option("--style", style)->check(CLI::IsMember({"smooth", "busy", "mixed"}));
  app.add_option("--jpeg-qf", qf, "store as JPEG at this quality")->check(CLI::Range(1, 100));
  app.add_option("--restricted-every", o.restricted_every, "every k-th image gets a non-CC license");
  app.add_option("--prefix", o.prefix);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (o.min_side > o.max_side) {
    std::cerr << "--min-side exceeds --max-side\n";
    return 2;
  }
  o.style = style == "smooth" ? fx::SceneStyle::kSmooth : style == "busy" ? fx::SceneStyle::kBusy : fx::SceneStyle::kMixed;
  if (qf > 0) o.jpeg_qf = qf;
  try {
    const auto paths = fx::write_coco_fixture(o);
    std::cout << "images: " << paths.images.string() << "\nannotations: " << paths.annotations.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  return 0;
}
