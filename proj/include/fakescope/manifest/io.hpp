#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>

#include "fakescope/manifest/types.hpp"

namespace fakescope::manifest {

inline constexpr char kManifestFile[] = "manifest.jsonl";
inline constexpr char kHeaderFile[] = "manifest.header.json";
inline constexpr char kRejectionsFile[] = "rejections.csv";

// Serialized forms: one header object, and one JSON line per record followed
// by one per annotation. Both are deterministic.
std::string serialize_header(const DatasetManifest& m);
std::string serialize_body(const DatasetManifest& m);
DatasetManifest parse_manifest(std::string_view header, std::string_view body);

void write_manifest(const DatasetManifest& m, const std::filesystem::path& dir);
// Sets `root` to `dir`.
DatasetManifest read_manifest(const std::filesystem::path& dir);

// Same records with paths rewritten relative to `new_root`.
DatasetManifest rebase(DatasetManifest m, const std::filesystem::path& new_root);

}  // namespace fakescope::manifest
