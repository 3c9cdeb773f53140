#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fvkit/classifier.hpp"
#include "fvkit/config.hpp"
#include "fvkit/fisher.hpp"
#include "fvkit/gmm.hpp"
#include "fvkit/manifest.hpp"

namespace fvkit {

struct CodebookSample {
  DescriptorSet descriptors;
  std::vector<std::string> image_ids;  // contributing images, manifest order
};

// Draws min(cap, N) images without replacement, pools their descriptors and
// subsamples rows down to config.codebook_row_cap if needed.
CodebookSample sample_codebook_descriptors(const DatasetManifest& manifest,
                                           const PipelineConfig& config);

GaussianMixture train_codebook(const DatasetManifest& manifest, const PipelineConfig& config);

// Normalized Fisher vector per record, in manifest order. Failures name the image.
std::vector<FisherVector> encode_manifest(const DatasetManifest& manifest,
                                          const GaussianMixture& gmm,
                                          const PipelineConfig& config);

struct TrainArtifacts {
  GaussianMixture gmm;
  LinearModel model;
};

// Codebook fit, encoding and SVM training. Writes both artifacts.
TrainArtifacts run_train(const DatasetManifest& manifest, const PipelineConfig& config,
                         const std::filesystem::path& gmm_path,
                         const std::filesystem::path& model_path);

// Trains only the classifier against an existing codebook.
LinearModel train_classifier(const DatasetManifest& manifest, const GaussianMixture& gmm,
                             const PipelineConfig& config);

EvalReport run_evaluate(const DatasetManifest& manifest, const GaussianMixture& gmm,
                        const LinearModel& model, const PipelineConfig& config);

struct ImagePrediction {
  std::string image_id;
  Prediction prediction;
};

std::vector<ImagePrediction> run_predict(const DatasetManifest& manifest,
                                         const GaussianMixture& gmm, const LinearModel& model,
                                         const PipelineConfig& config);

// Builds foreground/background generators from config.decomposition, fits a
// codebook on a mixture sample, and runs the decomposition experiment.
DecompositionReport run_synth_decomposition(const PipelineConfig& config);

std::string decomposition_report_to_json(const DecompositionReport& report);

}  // namespace fvkit
