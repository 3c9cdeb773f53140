// Runs every primary acceptance criterion and prints one PASS/FAIL line each.
// Exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/test_util.hpp"
#include "fvkit/classifier.hpp"
#include "fvkit/config.hpp"
#include "fvkit/errors.hpp"
#include "fvkit/fisher.hpp"
#include "fvkit/gmm.hpp"
#include "fvkit/pipeline.hpp"
#include "fvkit/serialization.hpp"
#include "fvkit/synthetic.hpp"

namespace {

using namespace fvkit;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Mean log-likelihood by direct density evaluation.
double naive_mean_ll(const GaussianMixture& g, const DescriptorSet& x) {
  double total = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) total += std::log(testing::naive_density(g, x.row(t)));
  return total / static_cast<double>(x.size());
}

GaussianMixture perturbed(const GaussianMixture& g, bool stddev, std::size_t k, std::size_t d,
                          double delta) {
  Matrix means = g.means();
  Matrix vars = g.variances();
  if (stddev) {
    const double s = std::sqrt(vars(k, d)) + delta;
    vars(k, d) = s * s;
  } else {
    means(k, d) += delta;
  }
  return GaussianMixture(std::vector<double>(g.weights().begin(), g.weights().end()),
                         std::move(means), std::move(vars));
}

Outcome em_monotonicity() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t d = 1 + rng() % 8;
    const std::size_t k = 1 + rng() % 8;
    const std::size_t t = 500 + rng() % 4501;
    const auto truth = testing::random_gmm(1 + rng() % 8, d, rng, 2.0);
    EmConfig config;
    config.seed = rng();
    const auto fit = fit_gmm_traced(sample_gmm(truth, t, rng()), k, config);
    const auto& trace = fit.log_likelihood_trace;
    for (std::size_t s = 1; s < trace.size(); ++s) worst = std::min(worst, trace[s] - trace[s - 1]);
  }
  const double elapsed = seconds_since(start);
  return {worst >= -1e-8 && elapsed < 30.0,
          fmt("largest decrease %.3g, %.2f s", 0.0 - worst + 0.0, elapsed)};
}

// With unit variances the sample means of ~600-point clusters already miss the
// truth by more than 0.1 on about one dataset in ten, so the components use
// variance 0.25. Fitted means are also compared with each cluster's sample mean.
Outcome gmm_recovery() {
  const auto start = Clock::now();
  const Matrix truth_means(3, 2, {0.0, 0.0, 10.0, 0.0, 0.0, 10.0});
  const GaussianMixture truth({0.3, 0.3, 0.4}, truth_means, Matrix(3, 2, 0.25));
  const auto sample = sample_gmm_with_components(truth, 2000, 17);
  const auto fitted = fit_gmm(sample.descriptors, 3, EmConfig{});
  Matrix sample_means(3, 2);
  std::vector<double> counts(3, 0.0);
  for (std::size_t t = 0; t < sample.descriptors.size(); ++t) {
    const auto k = sample.components[t];
    counts[k] += 1.0;
    for (std::size_t j = 0; j < 2; ++j) sample_means(k, j) += sample.descriptors.row(t)[j];
  }
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t j = 0; j < 2; ++j) sample_means(k, j) /= counts[k];
  }
  std::vector<std::size_t> perm = {0, 1, 2};
  double best = INFINITY;
  double best_vs_sample = INFINITY;
  do {
    double worst = 0.0;
    double worst_sample = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t j = 0; j < 2; ++j) {
        worst = std::max(worst, std::abs(fitted.means()(perm[k], j) - truth_means(k, j)));
        worst_sample =
            std::max(worst_sample, std::abs(fitted.means()(perm[k], j) - sample_means(k, j)));
      }
    }
    if (worst < best) {
      best = worst;
      best_vs_sample = worst_sample;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double elapsed = seconds_since(start);
  return {best <= 0.1 && best_vs_sample <= 1e-3 && elapsed < 5.0,
          fmt("max error vs truth %.4f, vs cluster sample means %.2g, %.2f s", best,
              best_vs_sample, elapsed)};
}

Outcome fv_gradient_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2718);
  double worst = 0.0;
  const double h = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    const auto gmm = testing::random_gmm(2, 3, rng, 1.0);
    const auto x = sample_gmm(gmm, 50, rng());
    const auto fv = encode_fv(gmm, x);
    for (std::size_t k = 0; k < 2; ++k) {
      const double w = gmm.weights()[k];
      for (std::size_t d = 0; d < 3; ++d) {
        const double sigma = std::sqrt(gmm.variances()(k, d));
        for (const bool stddev : {false, true}) {
          const double grad = (naive_mean_ll(perturbed(gmm, stddev, k, d, h), x) -
                               naive_mean_ll(perturbed(gmm, stddev, k, d, -h), x)) /
                              (2.0 * h);
          const double expected = sigma / std::sqrt((stddev ? 2.0 : 1.0) * w) * grad;
          const double got = fv.values()[(stddev ? 6 : 0) + k * 3 + d];
          worst = std::max(worst, std::abs(got - expected) / std::abs(expected));
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-4 && elapsed < 5.0, fmt("max relative error %.3g, %.2f s", worst, elapsed)};
}

Outcome fv_closed_forms() {
  std::mt19937_64 rng(31415);
  double mean_block = 0.0, duplication = 0.0, permutation = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto single = testing::random_gmm(1, 4, rng);
    const DescriptorSet x("", testing::random_matrix(60, 4, rng, 2.0));
    const auto fv = encode_fv(single, x);
    for (std::size_t j = 0; j < 4; ++j) {
      double expected = 0.0;
      for (std::size_t t = 0; t < x.size(); ++t) {
        expected += (x.row(t)[j] - single.means()(0, j)) / std::sqrt(single.variances()(0, j));
      }
      expected /= static_cast<double>(x.size());
      mean_block = std::max(mean_block, std::abs(fv.values()[j] - expected));
    }

    const auto gmm = testing::random_gmm(4, 5, rng);
    const DescriptorSet y("", testing::random_matrix(400, 5, rng, 2.0));
    const auto base = encode_fv(gmm, y);
    const auto twice = encode_fv(gmm, concatenate(y, y));
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto shuffled = encode_fv(gmm, select_rows(y, order));
    for (std::size_t i = 0; i < base.dim(); ++i) {
      duplication = std::max(duplication, std::abs(base.values()[i] - twice.values()[i]));
      permutation = std::max(permutation, std::abs(base.values()[i] - shuffled.values()[i]));
    }
  }
  return {mean_block <= 1e-12 && duplication <= 1e-12 && permutation <= 1e-12,
          fmt("K=1 mean block %.3g, duplication %.3g, permutation %.3g", mean_block, duplication,
              permutation)};
}

Outcome normalization() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> exponent(-20, 20);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v(1 + rng() % 512);
    const double scale = std::ldexp(1.0, exponent(rng));
    for (double& x : v) x = scale * normal(rng);
    const auto out = normalize_fv(FisherVector(v, false));
    double sq = 0.0;
    for (double x : out.values()) sq += x * x;
    worst = std::max(worst, std::abs(std::sqrt(sq) - 1.0));
  }
  const auto worked = normalize_fv(FisherVector({4.0, 0.0, -4.0}, false));
  const auto ex = worked.values();
  const double r = 1.0 / std::sqrt(2.0);
  const double example =
      std::max({std::abs(ex[0] - r), std::abs(ex[1]), std::abs(ex[2] + r)});
  return {worst <= 1e-9 && example <= 1e-12,
          fmt("max |norm-1| %.3g, worked example error %.3g", worst, example)};
}

Outcome decomposition() {
  const double ws[10] = {0.0, 0.3, 0.7, 1.0, 0.1, 0.5, 0.9, 0.25, 0.6, 0.85};
  double worst = 0.0;
  std::mt19937_64 rng(555);
  for (int i = 0; i < 10; ++i) {
    const std::size_t d = 2 + i % 5;
    const MixtureSpec spec{testing::random_gmm(1 + i % 3, d, rng, 3.0),
                           testing::random_gmm(2 + i % 2, d, rng, 3.0), ws[i]};
    const auto codebook = fit_gmm(
        concatenate(sample_gmm(spec.foreground, 2000, rng()), sample_gmm(spec.background, 2000, rng())),
        3 + i % 4, EmConfig{});
    const auto report = decomposition_experiment(spec, codebook, 5000, rng());
    worst = std::max(worst, report.residual_norm);
  }
  return {worst <= 1e-10, fmt("max residual_norm %.3g", worst)};
}

Outcome bac_examples() {
  const std::vector<std::string> ab = {"A", "B"};
  const auto hand = balanced_accuracy(std::vector<std::string>{"A", "A", "B", "B"},
                                      std::vector<std::string>{"A", "A", "A", "B"}, ab);
  const auto classes = PipelineConfig::default_classes();
  std::vector<std::string> truth;
  for (std::size_t c = 0; c < classes.size(); ++c) truth.insert(truth.end(), 5 + 3 * c, classes[c]);
  const std::vector<std::string> majority(truth.size(), classes[1]);
  const auto degenerate = balanced_accuracy(majority, truth, classes);
  return {hand.bac == 5.0 / 6.0 && degenerate.bac == 1.0 / 7.0,
          fmt("hand example %.17g, majority vote %.17g", hand.bac, degenerate.bac)};
}

Outcome end_to_end() {
  testing::TempDir dir("acceptance");
  SyntheticDatasetConfig data;
  data.classes = PipelineConfig::default_classes();
  data.dim = 16;
  data.train_per_class = 100;
  data.test_per_class = 30;
  data.descriptors_per_image = 200;
  data.seed = 2018;
  PipelineConfig config;
  config.classes = data.classes;
  config.schedule = parse_schedule("-1,0,1");
  config.num_components = 16;
  config.reseed(7);

  auto run = [&](const std::string& tag, double& seconds) {
    const auto start = Clock::now();
    const auto out = dir.path() / tag;
    const auto manifests = write_synthetic_dataset(generate_synthetic_dataset(data), data, out);
    const auto artifacts =
        run_train(load_manifest(manifests.train), config, out / "codebook.gmm", out / "model.lsv");
    const auto report =
        run_evaluate(load_manifest(manifests.test), artifacts.gmm, artifacts.model, config);
    const auto json = eval_report_to_json(report);
    write_file(out / "report.json",
               std::span(reinterpret_cast<const std::uint8_t*>(json.data()), json.size()));
    seconds = seconds_since(start);
    return report.bac;
  };
  double first_s = 0.0, second_s = 0.0;
  const double bac = run("a", first_s);
  run("b", second_s);
  bool identical = true;
  for (const char* name : {"codebook.gmm", "model.lsv", "report.json"}) {
    identical = identical && read_file(dir / "a" / name) == read_file(dir / "b" / name);
  }
  return {bac >= 0.95 && first_s < 60.0 && identical,
          fmt("held-out BAC %.4f, %.2f s, rerun byte-identical: %s", bac, first_s,
              identical ? "yes" : "no")};
}

Outcome dimension_check() {
  const auto config = parse_config_json(R"({"components": 64})");
  const GaussianMixture gmm(std::vector<double>(config.num_components, 1.0 / 64.0),
                            Matrix(config.num_components, 512),
                            Matrix(config.num_components, 512, 1.0));
  std::mt19937_64 rng(1);
  const auto fv = encode_fv(gmm, DescriptorSet("", testing::random_matrix(10, 512, rng)));
  return {fv.dim() == 65536 && fisher_dim(gmm) == 65536, fmt("FV length %zu", fv.dim())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"em_monotonicity", em_monotonicity},
      {"gmm_recovery", gmm_recovery},
      {"fv_gradient_oracle", fv_gradient_oracle},
      {"fv_closed_forms", fv_closed_forms},
      {"normalization", normalization},
      {"decomposition_identity", decomposition},
      {"balanced_accuracy", bac_examples},
      {"end_to_end_synthetic", end_to_end},
      {"dimension_check", dimension_check},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
