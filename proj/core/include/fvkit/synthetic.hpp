#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fvkit/descriptor_set.hpp"
#include "fvkit/gmm.hpp"
#include "fvkit/manifest.hpp"

namespace fvkit {

// Labelled descriptor data in which each image mixes a class-specific
// foreground mixture with a background mixture shared by all classes.
//
// Foregrounds of all classes are built around the same set of centers, each
// class displacing every center by its own random offset. Classes therefore
// differ by deviations within shared codebook regions rather than by which
// regions are occupied.
struct SyntheticDatasetConfig {
  std::vector<std::string> classes;
  std::size_t dim = 16;
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 30;
  std::size_t descriptors_per_image = 200;
  std::size_t descriptor_jitter = 20;  // T is uniform in [T - jitter, T + jitter]
  std::size_t foreground_components = 8;  // shared centers
  std::size_t background_components = 4;
  double min_w = 0.4;  // foreground proportion range per image
  double max_w = 0.8;
  double separation = 3.0;     // standard deviation of the centers
  double class_offset = 1.0;   // standard deviation of per-class center offsets
  std::vector<double> exponents = {-1.0, 0.0, 1.0};
  std::uint64_t seed = 0;
};

struct SyntheticImage {
  std::string image_id;
  std::string label;
  std::vector<DescriptorSet> per_scale;  // aligned with config exponents
};

struct SyntheticDataset {
  std::vector<GaussianMixture> foregrounds;  // one per class
  GaussianMixture background;
  std::vector<SyntheticImage> train;
  std::vector<SyntheticImage> test;
};

// Random diagonal mixture with equal weights, means ~ N(0, separation^2) and
// variances uniform in [0.5, 1.5].
GaussianMixture random_mixture(std::size_t components, std::size_t dim, double separation,
                               std::uint64_t seed);

SyntheticDataset generate_synthetic_dataset(const SyntheticDatasetConfig& config);

struct SyntheticManifests {
  std::filesystem::path train;
  std::filesystem::path test;
};

// Writes one FVD file per image and scale under out_dir/descriptors plus
// train.jsonl and test.jsonl manifests.
SyntheticManifests write_synthetic_dataset(const SyntheticDataset& dataset,
                                           const SyntheticDatasetConfig& config,
                                           const std::filesystem::path& out_dir);

}  // namespace fvkit
