#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "fvkit/classifier.hpp"
#include "fvkit/fisher.hpp"
#include "fvkit/gmm.hpp"

namespace {

using namespace fvkit;

GaussianMixture make_gmm(std::size_t k, std::size_t d) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 2.0);
  Matrix means(k, d);
  for (double& v : means.data()) v = normal(rng);
  return GaussianMixture(std::vector<double>(k, 1.0 / static_cast<double>(k)), std::move(means),
                         Matrix(k, d, 1.0));
}

void BM_EncodeFv(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const auto gmm = make_gmm(k, d);
  const auto x = sample_gmm(gmm, 1000, 2);
  for (auto _ : state) benchmark::DoNotOptimize(encode_fv(gmm, x));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_EncodeFv)->Args({16, 16})->Args({64, 128})->Args({64, 512});

void BM_Posteriors(benchmark::State& state) {
  const auto gmm = make_gmm(64, 128);
  const auto x = sample_gmm(gmm, 1000, 3);
  for (auto _ : state) {
    for (std::size_t t = 0; t < x.size(); ++t) benchmark::DoNotOptimize(posteriors(gmm, x.row(t)));
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Posteriors);

void BM_FitGmm(benchmark::State& state) {
  const auto truth = make_gmm(8, 8);
  const auto x = sample_gmm(truth, 5000, 4);
  EmConfig config;
  config.threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_gmm(x, 8, config));
}
BENCHMARK(BM_FitGmm)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_TrainSvm(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  const std::size_t n = 700, dim = 512;
  Matrix x(n, dim);
  for (double& v : x.data()) v = normal(rng);
  const std::vector<std::string> classes = {"a", "b", "c", "d", "e", "f", "g"};
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(classes[i % classes.size()]);
  for (auto _ : state) benchmark::DoNotOptimize(train_linear_svm(x, labels, classes, SvmConfig{}));
}
BENCHMARK(BM_TrainSvm)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
