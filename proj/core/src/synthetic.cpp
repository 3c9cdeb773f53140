#include "fvkit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "fvkit/errors.hpp"
#include "fvkit/random.hpp"
#include "fvkit/serialization.hpp"

namespace fvkit {

namespace {

SyntheticImage make_image(const SyntheticDatasetConfig& config, const GaussianMixture& foreground,
                          const GaussianMixture& background, std::string image_id,
                          std::string label, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t lo = config.descriptors_per_image - config.descriptor_jitter;
  const std::size_t hi = config.descriptors_per_image + config.descriptor_jitter;
  const std::size_t total = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  const double w = std::uniform_real_distribution<double>(config.min_w, config.max_w)(rng);
  const auto n_fg = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(w * static_cast<double>(total))), 1, total - 1);

  const std::uint64_t fg_seed = rng();
  const std::uint64_t bg_seed = rng();
  const DescriptorSet all = concatenate(sample_gmm(foreground, n_fg, fg_seed),
                                        sample_gmm(background, total - n_fg, bg_seed));
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  // Larger scales see more cells: the share of scale s is proportional to 4^s.
  const auto& exps = config.exponents;
  double share_sum = 0.0;
  for (double s : exps) share_sum += std::pow(4.0, s);
  SyntheticImage image{std::move(image_id), std::move(label), {}};
  std::size_t start = 0;
  for (std::size_t i = 0; i < exps.size(); ++i) {
    std::size_t count = static_cast<std::size_t>(
        std::floor(static_cast<double>(total) * std::pow(4.0, exps[i]) / share_sum));
    if (i + 1 == exps.size()) count = total - start;
    DescriptorSet part = select_rows(all, std::span(order).subspan(start, count));
    part.set_image_id(image.image_id);
    image.per_scale.push_back(std::move(part));
    start += count;
  }
  return image;
}

std::string format_exponent(double s) {
  std::ostringstream out;
  out << s;
  return out.str();
}

}  // namespace

GaussianMixture random_mixture(std::size_t components, std::size_t dim, double separation,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> mean(0.0, separation);
  std::uniform_real_distribution<double> var(0.5, 1.5);
  Matrix means(components, dim);
  Matrix vars(components, dim);
  for (double& m : means.data()) m = mean(rng);
  for (double& v : vars.data()) v = var(rng);
  std::vector<double> weights(components, 1.0 / static_cast<double>(components));
  return GaussianMixture(std::move(weights), std::move(means), std::move(vars));
}

SyntheticDataset generate_synthetic_dataset(const SyntheticDatasetConfig& config) {
  if (config.classes.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "synthetic data needs at least two classes");
  }
  if (config.descriptor_jitter >= config.descriptors_per_image ||
      config.descriptors_per_image < 2) {
    throw Error(ErrorKind::kInvalidArgument, "descriptor jitter must be below the per-image count");
  }
  if (!(config.min_w > 0.0 && config.min_w <= config.max_w && config.max_w < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "foreground proportions must satisfy 0 < min <= max < 1");
  }
  if (config.exponents.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "synthetic data needs at least one scale");
  }

  SyntheticDataset data{{},
                        random_mixture(config.background_components, config.dim,
                                       config.separation, derive_seed(config.seed, 0)),
                        {},
                        {}};
  const GaussianMixture centers = random_mixture(config.foreground_components, config.dim,
                                                 config.separation, derive_seed(config.seed, 1));
  for (std::size_t c = 0; c < config.classes.size(); ++c) {
    std::mt19937_64 rng(derive_seed(config.seed, 2 + c));
    std::normal_distribution<double> offset(0.0, config.class_offset);
    std::uniform_real_distribution<double> var(0.5, 1.5);
    Matrix means = centers.means();
    Matrix vars(means.rows(), means.cols());
    for (double& m : means.data()) m += offset(rng);
    for (double& v : vars.data()) v = var(rng);
    data.foregrounds.emplace_back(
        std::vector<double>(centers.weights().begin(), centers.weights().end()),
        std::move(means), std::move(vars));
  }

  std::uint64_t stream = 1000;
  auto fill = [&](std::vector<SyntheticImage>& out, std::size_t per_class, const char* split) {
    for (std::size_t i = 0; i < per_class; ++i) {
      for (std::size_t c = 0; c < config.classes.size(); ++c) {
        std::string id = std::string(split) + "_" + config.classes[c] + "_" + std::to_string(i);
        out.push_back(make_image(config, data.foregrounds[c], data.background, std::move(id),
                                 config.classes[c], derive_seed(config.seed, stream++)));
      }
    }
  };
  fill(data.train, config.train_per_class, "train");
  fill(data.test, config.test_per_class, "test");
  return data;
}

SyntheticManifests write_synthetic_dataset(const SyntheticDataset& dataset,
                                           const SyntheticDatasetConfig& config,
                                           const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "descriptors", ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create '" + out_dir.string() + "': " + ec.message());

  auto write_split = [&](const std::vector<SyntheticImage>& images, const char* name) {
    DatasetManifest manifest;
    for (const auto& image : images) {
      ManifestRecord record{image.image_id, image.label, {}};
      for (std::size_t i = 0; i < image.per_scale.size(); ++i) {
        if (image.per_scale[i].empty()) continue;
        const std::string key = format_exponent(config.exponents[i]);
        const auto path = out_dir / "descriptors" / (image.image_id + "_s" + key + ".fvd");
        save_descriptors(path, image.per_scale[i]);
        record.descriptors.push_back({config.exponents[i], key, path});
      }
      manifest.records.push_back(std::move(record));
    }
    const auto path = out_dir / (std::string(name) + ".jsonl");
    save_manifest(path, manifest);
    return path;
  };
  return {write_split(dataset.train, "train"), write_split(dataset.test, "test")};
}

}  // namespace fvkit
