#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fvkit/descriptor_set.hpp"
#include "fvkit/pyramid.hpp"

namespace fvkit {

struct ScaleFile {
  double exponent = 0.0;
  std::string key;  // exponent as written in the manifest
  std::filesystem::path path;
};

struct ManifestRecord {
  std::string image_id;
  std::optional<std::string> label;
  std::vector<ScaleFile> descriptors;  // ascending exponent
};

// JSON Lines, one record per image:
//   {"image_id": "...", "label": "..." | null, "descriptors": {"<exponent>": "<path>"}}
// Relative paths resolve against the manifest's directory.
struct DatasetManifest {
  std::vector<ManifestRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }

  // Throws kLabel for a label outside `classes`.
  void check_labels(std::span<const std::string> classes) const;
  // Throws kLabel listing every record without a label.
  void require_labels() const;
};

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Writes paths relative to `base_dir` when they lie beneath it.
std::string manifest_to_jsonl(const DatasetManifest& manifest,
                              const std::filesystem::path& base_dir);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

// Loads the record's descriptor files for the scales in `schedule` and pools
// them in schedule order. Scales missing from the record are skipped; an image
// with no descriptors at all is an error.
DescriptorSet load_image_descriptors(const ManifestRecord& record, const ScaleSchedule& schedule);

}  // namespace fvkit
