// fvkit command-line tool: codebook training, Fisher vector encoding, linear
// SVM training/evaluation and the synthetic decomposition experiment.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fvkit/config.hpp"
#include "fvkit/errors.hpp"
#include "fvkit/pipeline.hpp"
#include "fvkit/serialization.hpp"
#include "fvkit/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string scales;
};

fvkit::PipelineConfig make_config(const GlobalOptions& g) {
  fvkit::PipelineConfig config = g.config_path.empty() ? fvkit::PipelineConfig()
                                                       : fvkit::load_config(g.config_path);
  if (g.seed) config.reseed(*g.seed);
  if (g.threads) config.set_threads(*g.threads);
  if (!g.scales.empty()) config.schedule = fvkit::parse_schedule(g.scales);
  config.validate();
  return config;
}

void check_file_stem(const std::string& image_id) {
  if (image_id == "." || image_id == ".." ||
      image_id.find_first_of("/\\") != std::string::npos) {
    throw fvkit::Error(fvkit::ErrorKind::kInvalidArgument,
                       "image id '" + image_id + "' cannot be used as a file name");
  }
}

void write_text(const std::string& path, const std::string& text) {
  fvkit::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                    text.size()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher vector aggregation of local descriptors with a linear SVM"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--config", global.config_path, "Pipeline config (.json or .toml)");
  app.add_option("--seed", global.seed, "Global seed; sub-seeds are derived from it");
  app.add_option("--threads", global.threads, "Worker threads");
  app.add_option("--scales", global.scales, "Comma-separated scale exponents, e.g. -1,0,1");

  std::string manifest_path, gmm_path, model_path, out_path, out_dir;

  auto* train_codebook = app.add_subcommand("train-codebook", "Fit the GMM codebook");
  train_codebook->add_option("--manifest", manifest_path, "JSON-Lines manifest")->required();
  train_codebook->add_option("--out", gmm_path, "Output GMM file")->required();

  auto* encode = app.add_subcommand("encode", "Write one normalized Fisher vector per image");
  encode->add_option("--manifest", manifest_path, "JSON-Lines manifest")->required();
  encode->add_option("--gmm", gmm_path, "Codebook file")->required();
  encode->add_option("--out-dir", out_dir, "Directory for <image_id>.fvv files")->required();

  std::string existing_gmm;
  auto* train = app.add_subcommand("train", "Fit codebook and one-vs-rest SVM");
  train->add_option("--manifest", manifest_path, "Labelled JSON-Lines manifest")->required();
  train->add_option("--gmm-out", gmm_path, "Output GMM file")->required();
  train->add_option("--model-out", model_path, "Output linear model file")->required();
  train->add_option("--gmm", existing_gmm, "Reuse this codebook instead of fitting one");

  auto* evaluate = app.add_subcommand("evaluate", "Balanced accuracy on a labelled manifest");
  evaluate->add_option("--manifest", manifest_path, "Labelled JSON-Lines manifest")->required();
  evaluate->add_option("--gmm", gmm_path, "Codebook file")->required();
  evaluate->add_option("--model", model_path, "Linear model file")->required();
  evaluate->add_option("--out", out_path, "Also write the JSON report here");

  auto* predict = app.add_subcommand("predict", "Print one JSON line of scores per image");
  predict->add_option("--manifest", manifest_path, "JSON-Lines manifest")->required();
  predict->add_option("--gmm", gmm_path, "Codebook file")->required();
  predict->add_option("--model", model_path, "Linear model file")->required();

  std::optional<double> synth_w;
  std::optional<std::size_t> synth_n;
  auto* synth = app.add_subcommand("synth-decomposition",
                                   "Foreground/background linearity experiment on synthetic data");
  synth->add_option("--w", synth_w, "Foreground proportion in [0, 1]");
  synth->add_option("--samples", synth_n, "Descriptor count (>= 1000)");

  fvkit::SyntheticDatasetConfig synth_data;
  std::size_t synth_classes = 7;
  auto* make_synth = app.add_subcommand("make-synthetic",
                                        "Write a synthetic multi-scale descriptor dataset");
  make_synth->add_option("--out-dir", out_dir, "Output directory")->required();
  make_synth->add_option("--classes", synth_classes, "Number of classes (names from config)");
  make_synth->add_option("--dim", synth_data.dim, "Descriptor dimension");
  make_synth->add_option("--train-per-class", synth_data.train_per_class, "Training images per class");
  make_synth->add_option("--test-per-class", synth_data.test_per_class, "Test images per class");
  make_synth->add_option("--descriptors", synth_data.descriptors_per_image,
                         "Mean descriptors per image");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const fvkit::PipelineConfig config = make_config(global);

    if (*train_codebook) {
      const auto manifest = fvkit::load_manifest(manifest_path);
      fvkit::save_gmm(gmm_path, fvkit::train_codebook(manifest, config));
      std::cerr << "wrote " << gmm_path << '\n';
    } else if (*encode) {
      const auto manifest = fvkit::load_manifest(manifest_path);
      const auto gmm = fvkit::load_gmm(gmm_path);
      for (const auto& r : manifest.records) check_file_stem(r.image_id);
      const auto fvs = fvkit::encode_manifest(manifest, gmm, config);
      std::error_code ec;
      fs::create_directories(out_dir, ec);
      if (ec) throw fvkit::Error(fvkit::ErrorKind::kIo, "cannot create '" + out_dir + "'");
      for (std::size_t i = 0; i < fvs.size(); ++i) {
        fvkit::save_fisher_vector(fs::path(out_dir) / (manifest.records[i].image_id + ".fvv"),
                                  fvs[i]);
      }
      std::cerr << "wrote " << fvs.size() << " Fisher vectors to " << out_dir << '\n';
    } else if (*train) {
      const auto manifest = fvkit::load_manifest(manifest_path);
      if (existing_gmm.empty()) {
        fvkit::run_train(manifest, config, gmm_path, model_path);
      } else {
        const auto gmm = fvkit::load_gmm(existing_gmm);
        const auto model = fvkit::train_classifier(manifest, gmm, config);
        fvkit::save_gmm(gmm_path, gmm);
        fvkit::save_linear_model(model_path, model);
      }
      std::cerr << "wrote " << gmm_path << " and " << model_path << '\n';
    } else if (*evaluate) {
      const auto manifest = fvkit::load_manifest(manifest_path);
      const auto report = fvkit::run_evaluate(manifest, fvkit::load_gmm(gmm_path),
                                              fvkit::load_linear_model(model_path), config);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
      const std::string json = fvkit::eval_report_to_json(report);
      std::cout << json << '\n';
      if (!out_path.empty()) write_text(out_path, json + "\n");
    } else if (*predict) {
      const auto manifest = fvkit::load_manifest(manifest_path);
      const auto model = fvkit::load_linear_model(model_path);
      const auto predictions =
          fvkit::run_predict(manifest, fvkit::load_gmm(gmm_path), model, config);
      for (const auto& p : predictions) {
        nlohmann::ordered_json j;
        j["image_id"] = p.image_id;
        j["label"] = p.prediction.label;
        nlohmann::ordered_json scores = nlohmann::ordered_json::object();
        for (std::size_t c = 0; c < model.num_classes(); ++c) {
          scores[model.classes[c]] = p.prediction.scores[c];
        }
        j["scores"] = std::move(scores);
        std::cout << j.dump() << '\n';
      }
    } else if (*synth) {
      fvkit::PipelineConfig c = config;
      if (synth_w) c.decomposition.w = *synth_w;
      if (synth_n) c.decomposition.samples = *synth_n;
      c.validate();
      std::cout << fvkit::decomposition_report_to_json(fvkit::run_synth_decomposition(c)) << '\n';
    } else if (*make_synth) {
      if (synth_classes < 2 || synth_classes > config.classes.size()) {
        throw fvkit::Error(fvkit::ErrorKind::kInvalidArgument,
                           "--classes must be between 2 and the configured class count");
      }
      synth_data.classes.assign(config.classes.begin(),
                                config.classes.begin() + static_cast<std::ptrdiff_t>(synth_classes));
      synth_data.seed = config.seed;
      const auto data = fvkit::generate_synthetic_dataset(synth_data);
      const auto paths = fvkit::write_synthetic_dataset(data, synth_data, out_dir);
      std::cerr << "wrote " << paths.train << " and " << paths.test << '\n';
    }
  } catch (const fvkit::Error& e) {
    std::cerr << "error: " << fvkit::to_string(e.kind()) << ": " << e.what() << '\n';
    return fvkit::exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
