#include "fvkit/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fvkit/errors.hpp"
#include "fvkit/serialization.hpp"

namespace fvkit {

namespace {

double parse_exponent(const std::string& key, std::size_t line) {
  double value = 0.0;
  const auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), value);
  if (key.empty() || ec != std::errc() || end != key.data() + key.size()) {
    throw Error(ErrorKind::kFormat, "manifest line " + std::to_string(line) +
                                        ": bad scale exponent '" + key + "'");
  }
  return value;
}

}  // namespace

void DatasetManifest::check_labels(std::span<const std::string> classes) const {
  for (const auto& r : records) {
    if (r.label && std::find(classes.begin(), classes.end(), *r.label) == classes.end()) {
      throw Error(ErrorKind::kLabel,
                  "image '" + r.image_id + "' has unknown label '" + *r.label + "'");
    }
  }
}

void DatasetManifest::require_labels() const {
  std::string missing;
  for (const auto& r : records) {
    if (r.label) continue;
    if (!missing.empty()) missing += ", ";
    missing += r.image_id;
  }
  if (!missing.empty()) throw Error(ErrorKind::kLabel, "unlabeled records: " + missing);
}

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  DatasetManifest manifest;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "manifest line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kFormat, where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("image_id") || !j["image_id"].is_string()) {
      throw Error(ErrorKind::kFormat, where + ": missing string field 'image_id'");
    }
    ManifestRecord record;
    record.image_id = j["image_id"].get<std::string>();
    if (record.image_id.empty()) throw Error(ErrorKind::kFormat, where + ": empty image_id");
    if (!seen.insert(record.image_id).second) {
      throw Error(ErrorKind::kFormat, where + ": duplicate image_id '" + record.image_id + "'");
    }
    if (j.contains("label") && !j["label"].is_null()) {
      if (!j["label"].is_string()) throw Error(ErrorKind::kFormat, where + ": label must be a string");
      record.label = j["label"].get<std::string>();
    }
    if (!j.contains("descriptors") || !j["descriptors"].is_object()) {
      throw Error(ErrorKind::kFormat, where + ": missing object field 'descriptors'");
    }
    for (const auto& item : j["descriptors"].items()) {
      if (!item.value().is_string() || item.value().get<std::string>().empty()) {
        throw Error(ErrorKind::kFormat, where + ": descriptor path for scale '" + item.key() +
                                            "' must be a non-empty string");
      }
      std::filesystem::path path = item.value().get<std::string>();
      if (path.is_relative()) path = base_dir / path;
      record.descriptors.push_back({parse_exponent(item.key(), line_no), item.key(), path});
    }
    std::sort(record.descriptors.begin(), record.descriptors.end(),
              [](const ScaleFile& a, const ScaleFile& b) { return a.exponent < b.exponent; });
    for (std::size_t i = 1; i < record.descriptors.size(); ++i) {
      if (record.descriptors[i].exponent == record.descriptors[i - 1].exponent) {
        throw Error(ErrorKind::kFormat, where + ": scale listed twice");
      }
    }
    manifest.records.push_back(std::move(record));
  }
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open manifest '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str(), path.parent_path());
}

std::string manifest_to_jsonl(const DatasetManifest& manifest,
                              const std::filesystem::path& base_dir) {
  std::string out;
  for (const auto& r : manifest.records) {
    nlohmann::ordered_json j;
    j["image_id"] = r.image_id;
    j["label"] = r.label ? nlohmann::ordered_json(*r.label) : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json files = nlohmann::ordered_json::object();
    for (const auto& f : r.descriptors) {
      auto rel = f.path.lexically_relative(base_dir);
      const bool inside = !rel.empty() && *rel.begin() != "..";
      files[f.key] = (inside ? rel : f.path).generic_string();
    }
    j["descriptors"] = std::move(files);
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  const std::string text = manifest_to_jsonl(manifest, path.parent_path());
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

DescriptorSet load_image_descriptors(const ManifestRecord& record, const ScaleSchedule& schedule) {
  std::vector<DescriptorSet> per_scale;
  for (const auto& file : record.descriptors) {
    if (schedule.find(file.exponent) == schedule.size()) continue;
    DescriptorSet set = load_descriptors(file.path);
    if (!set.all_finite()) {
      throw Error(ErrorKind::kInvalidDescriptor,
                  "image '" + record.image_id + "': non-finite values in " + file.path.string());
    }
    per_scale.push_back(std::move(set));
  }
  return pool_scales(per_scale, record.image_id);
}

}  // namespace fvkit
