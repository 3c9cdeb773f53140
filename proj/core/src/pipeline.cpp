#include "fvkit/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "fvkit/errors.hpp"
#include "fvkit/parallel.hpp"
#include "fvkit/random.hpp"
#include "fvkit/serialization.hpp"
#include "fvkit/synthetic.hpp"

namespace fvkit {

namespace {

// Runs fn and prefixes any library error with the image id, keeping the kind.
template <typename Fn>
auto for_image(const std::string& image_id, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), "image '" + image_id + "': " + e.what());
  }
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                    std::uint64_t seed) {
  std::vector<std::size_t> index(n);
  std::iota(index.begin(), index.end(), 0);
  if (k >= n) return index;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(index[i], index[pick(rng)]);
  }
  index.resize(k);
  std::sort(index.begin(), index.end());
  return index;
}

void require_nonempty(const DatasetManifest& manifest) {
  if (manifest.empty()) throw Error(ErrorKind::kEmptyInput, "manifest has no records");
}

std::vector<std::string> labels_of(const DatasetManifest& manifest) {
  std::vector<std::string> labels;
  labels.reserve(manifest.size());
  for (const auto& r : manifest.records) labels.push_back(*r.label);
  return labels;
}

}  // namespace

CodebookSample sample_codebook_descriptors(const DatasetManifest& manifest,
                                           const PipelineConfig& config) {
  require_nonempty(manifest);
  const auto chosen = sample_without_replacement(manifest.size(), config.codebook_image_cap,
                                                 config.codebook_seed);
  std::vector<DescriptorSet> sets(chosen.size());
  parallel_for(chosen.size(), config.threads, [&](std::size_t i) {
    const auto& record = manifest.records[chosen[i]];
    sets[i] = for_image(record.image_id,
                        [&] { return load_image_descriptors(record, config.schedule); });
  });

  CodebookSample sample;
  std::size_t rows = 0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (i > 0 && sets[i].dim() != sets[0].dim()) {
      throw Error(ErrorKind::kShape, "image '" + manifest.records[chosen[i]].image_id +
                                         "' has descriptor dimension " +
                                         std::to_string(sets[i].dim()) + ", expected " +
                                         std::to_string(sets[0].dim()));
    }
    rows += sets[i].size();
    sample.image_ids.push_back(manifest.records[chosen[i]].image_id);
  }
  std::vector<double> values;
  values.reserve(rows * sets[0].dim());
  for (const auto& s : sets) values.insert(values.end(), s.data().data().begin(), s.data().data().end());
  sample.descriptors = DescriptorSet("codebook", Matrix(rows, sets[0].dim(), std::move(values)));

  if (rows > config.codebook_row_cap) {
    const auto keep = sample_without_replacement(rows, config.codebook_row_cap,
                                                 derive_seed(config.codebook_seed, 1));
    sample.descriptors = select_rows(sample.descriptors, keep);
  }
  return sample;
}

GaussianMixture train_codebook(const DatasetManifest& manifest, const PipelineConfig& config) {
  config.validate();
  const auto sample = sample_codebook_descriptors(manifest, config);
  return fit_gmm(sample.descriptors, config.num_components, config.em);
}

std::vector<FisherVector> encode_manifest(const DatasetManifest& manifest,
                                          const GaussianMixture& gmm,
                                          const PipelineConfig& config) {
  std::vector<FisherVector> out(manifest.size());
  parallel_for(manifest.size(), config.threads, [&](std::size_t i) {
    const auto& record = manifest.records[i];
    out[i] = for_image(record.image_id, [&] {
      return normalize_fv(encode_fv(gmm, load_image_descriptors(record, config.schedule)));
    });
  });
  return out;
}

LinearModel train_classifier(const DatasetManifest& manifest, const GaussianMixture& gmm,
                             const PipelineConfig& config) {
  config.validate();
  require_nonempty(manifest);
  manifest.require_labels();
  manifest.check_labels(config.classes);
  const auto labels = labels_of(manifest);
  const auto features = encode_manifest(manifest, gmm, config);
  return train_svm(features, labels, config.classes, config.svm).model;
}

TrainArtifacts run_train(const DatasetManifest& manifest, const PipelineConfig& config,
                         const std::filesystem::path& gmm_path,
                         const std::filesystem::path& model_path) {
  config.validate();
  require_nonempty(manifest);
  manifest.require_labels();
  manifest.check_labels(config.classes);
  {
    std::vector<std::string> labels = labels_of(manifest);
    std::sort(labels.begin(), labels.end());
    if (std::unique(labels.begin(), labels.end()) - labels.begin() < 2) {
      throw Error(ErrorKind::kDegenerateLabels, "training manifest contains a single class");
    }
  }
  GaussianMixture gmm = train_codebook(manifest, config);
  LinearModel model = train_classifier(manifest, gmm, config);
  save_gmm(gmm_path, gmm);
  save_linear_model(model_path, model);
  // Hand back what a later evaluate run will read from disk.
  return {load_gmm(gmm_path), load_linear_model(model_path)};
}

EvalReport run_evaluate(const DatasetManifest& manifest, const GaussianMixture& gmm,
                        const LinearModel& model, const PipelineConfig& config) {
  require_nonempty(manifest);
  manifest.require_labels();
  manifest.check_labels(model.classes);
  std::vector<std::string> predicted;
  for (const auto& p : run_predict(manifest, gmm, model, config)) {
    predicted.push_back(p.prediction.label);
  }
  return balanced_accuracy(predicted, labels_of(manifest), model.classes);
}

std::vector<ImagePrediction> run_predict(const DatasetManifest& manifest,
                                         const GaussianMixture& gmm, const LinearModel& model,
                                         const PipelineConfig& config) {
  require_nonempty(manifest);
  if (fisher_dim(gmm) != model.dim()) {
    throw Error(ErrorKind::kShape, "codebook produces " + std::to_string(fisher_dim(gmm)) +
                                       "-dimensional vectors but the model expects " +
                                       std::to_string(model.dim()));
  }
  const auto features = encode_manifest(manifest, gmm, config);
  std::vector<ImagePrediction> out;
  out.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    out.push_back({manifest.records[i].image_id, predict(model, features[i])});
  }
  return out;
}

DecompositionReport run_synth_decomposition(const PipelineConfig& config) {
  config.validate();
  const auto& d = config.decomposition;
  MixtureSpec spec{random_mixture(d.foreground_components, d.dim, d.separation,
                                  derive_seed(config.seed, 100)),
                   random_mixture(d.background_components, d.dim, d.separation,
                                  derive_seed(config.seed, 101)),
                   d.w};
  // The codebook sees the same kind of mixture the experiment draws from.
  const std::size_t n_fg =
      static_cast<std::size_t>(std::llround(d.w * static_cast<double>(d.samples)));
  DescriptorSet training;
  if (n_fg > 0) training = sample_gmm(spec.foreground, n_fg, derive_seed(config.seed, 102));
  if (n_fg < d.samples) {
    training = concatenate(training, sample_gmm(spec.background, d.samples - n_fg,
                                                derive_seed(config.seed, 103)));
  }
  const GaussianMixture codebook = fit_gmm(training, d.codebook_components, config.em);
  return decomposition_experiment(spec, codebook, d.samples, derive_seed(config.seed, 104));
}

std::string decomposition_report_to_json(const DecompositionReport& r) {
  nlohmann::ordered_json j;
  j["w"] = r.w;
  j["realized_w"] = r.realized_w;
  j["foreground_count"] = r.foreground_count;
  j["background_count"] = r.background_count;
  j["fv_dim"] = r.fv_mix.dim();
  j["mixture_norm"] = r.mixture_norm;
  j["foreground_term_norm"] = r.foreground_term_norm;
  j["background_term_norm"] = r.background_term_norm;
  j["residual_norm"] = r.residual_norm;
  return j.dump(2);
}

}  // namespace fvkit
