#include "fakescope/manifest/io.hpp"

#include <nlohmann/json.hpp>
#include <sstream>

#include "fakescope/common/error.hpp"

namespace fakescope::manifest {

using nlohmann::json;

namespace {

constexpr char kFormat[] = "fakescope-manifest";
constexpr int kFormatVersion = 1;

json record_to_json(const ImageRecord& r) {
  json j;
  j["type"] = "record";
  j["id"] = r.id;
  j["path"] = r.path;
  j["label"] = to_string(r.label);
  j["pair_id"] = r.pair_id;
  j["variant"] = to_string(r.variant);
  j["generator_tag"] = r.generator_tag;
  j["source_tag"] = r.source_tag;
  j["width"] = r.width;
  j["height"] = r.height;
  j["container"] = to_string(r.container);
  if (r.jpeg_qf) j["jpeg_qf"] = *r.jpeg_qf;
  if (r.seed) j["seed"] = *r.seed;
  return j;
}

ImageRecord record_from_json(const json& j) {
  ImageRecord r;
  r.id = j.at("id").get<std::string>();
  r.path = j.at("path").get<std::string>();
  r.label = label_from_string(j.at("label").get<std::string>());
  r.pair_id = j.at("pair_id").get<std::string>();
  r.variant = variant_from_string(j.at("variant").get<std::string>());
  r.generator_tag = j.value("generator_tag", "");
  r.source_tag = j.value("source_tag", "");
  r.width = j.at("width").get<int>();
  r.height = j.at("height").get<int>();
  r.container = container_from_string(j.at("container").get<std::string>());
  if (j.contains("jpeg_qf")) r.jpeg_qf = j["jpeg_qf"].get<int>();
  if (j.contains("seed")) r.seed = j["seed"].get<std::uint64_t>();
  return r;
}

json annotation_to_json(const ObjectAnnotation& a) {
  json j;
  j["type"] = "annotation";
  j["record_id"] = a.record_id;
  j["category"] = a.category;
  j["supercategory"] = a.supercategory;
  j["mask"] = {{"size", {a.mask.height, a.mask.width}}, {"counts", rle_to_string(a.mask)}};
  j["bbox"] = {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h};
  return j;
}

ObjectAnnotation annotation_from_json(const json& j) {
  ObjectAnnotation a;
  a.record_id = j.at("record_id").get<std::string>();
  a.category = j.at("category").get<std::string>();
  a.supercategory = j.value("supercategory", "");
  const auto& m = j.at("mask");
  const int h = m.at("size").at(0).get<int>();
  const int w = m.at("size").at(1).get<int>();
  a.mask = rle_from_string(m.at("counts").get<std::string>(), h, w);
  const auto& b = j.at("bbox");
  a.bbox = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
  return a;
}

}  // namespace

std::string serialize_header(const DatasetManifest& m) {
  json j;
  j["format"] = kFormat;
  j["version"] = kFormatVersion;
  j["tool_version"] = m.provenance.tool_version;
  j["config_hash"] = m.provenance.config_hash;
  j["taxonomy"] = m.taxonomy;
  j["records"] = m.records.size();
  j["annotations"] = m.annotations.size();
  return j.dump(2) + "\n";
}

std::string serialize_body(const DatasetManifest& m) {
  std::string out;
  for (const auto& r : m.records) out += record_to_json(r).dump() + "\n";
  for (const auto& a : m.annotations) out += annotation_to_json(a).dump() + "\n";
  return out;
}

DatasetManifest parse_manifest(std::string_view header, std::string_view body) {
  DatasetManifest m;
  try {
    const json h = json::parse(header);
    if (h.value("format", "") != kFormat) throw Error("not a fakescope manifest header");
    if (h.value("version", 0) != kFormatVersion) throw Error("unsupported manifest version");
    m.provenance.tool_version = h.value("tool_version", "");
    m.provenance.config_hash = h.value("config_hash", "");
    m.taxonomy = h.value("taxonomy", Taxonomy{});

    std::istringstream lines{std::string(body)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      if (line.empty()) continue;
      const json j = json::parse(line);
      const std::string type = j.value("type", "");
      if (type == "record") {
        m.records.push_back(record_from_json(j));
      } else if (type == "annotation") {
        m.annotations.push_back(annotation_from_json(j));
      } else {
        throw Error("manifest line " + std::to_string(lineno) + ": unknown type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / kManifestFile, serialize_body(m));
  write_file(dir / kHeaderFile, serialize_header(m));
}

DatasetManifest read_manifest(const std::filesystem::path& dir) {
  DatasetManifest m =
      parse_manifest(read_file(dir / kHeaderFile), read_file(dir / kManifestFile));
  m.root = dir;
  return m;
}

DatasetManifest rebase(DatasetManifest m, const std::filesystem::path& new_root) {
  namespace fs = std::filesystem;
  const fs::path abs_root = fs::absolute(new_root);
  for (auto& r : m.records) {
    r.path = fs::relative(fs::absolute(m.resolve(r)), abs_root).generic_string();
  }
  m.root = new_root;
  return m;
}

}  // namespace fakescope::manifest
