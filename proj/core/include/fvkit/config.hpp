#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fvkit/classifier.hpp"
#include "fvkit/gmm.hpp"
#include "fvkit/pyramid.hpp"

namespace fvkit {

// Settings of the synthetic foreground/background decomposition run.
struct DecompositionConfig {
  std::size_t dim = 8;
  std::size_t foreground_components = 2;
  std::size_t background_components = 3;
  std::size_t codebook_components = 8;
  double w = 0.7;
  std::size_t samples = 10000;
  double separation = 4.0;  // spread of the generator means
};

struct PipelineConfig {
  std::size_t num_components = 64;
  std::size_t codebook_image_cap = 1000;
  std::size_t codebook_row_cap = 1'000'000;
  ScaleSchedule schedule = default_schedule();
  std::vector<std::string> classes = default_classes();
  std::uint64_t seed = 0;
  std::uint64_t codebook_seed = 0;
  std::size_t threads = 1;
  EmConfig em;
  SvmConfig svm;
  DecompositionConfig decomposition;

  PipelineConfig() { reseed(0); }

  // Sets the global seed and re-derives the codebook, EM and SVM seeds.
  void reseed(std::uint64_t base);
  // Propagates `threads` into the EM and SVM sub-configs.
  void set_threads(std::size_t n);

  void validate() const;

  // The seven ISIC 2018 diagnosis codes.
  static std::vector<std::string> default_classes();
};

// Parses a JSON config. Unknown keys are rejected.
PipelineConfig parse_config_json(std::string_view text);
// Parses a TOML config with the same keys as the JSON form.
PipelineConfig parse_config_toml(std::string_view text);
// Dispatches on the extension: .toml is TOML, anything else JSON.
PipelineConfig load_config(const std::filesystem::path& path);

std::string config_to_json(const PipelineConfig& config);

}  // namespace fvkit
