#include "fvkit/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "fvkit/errors.hpp"
#include "fvkit/kmeans.hpp"
#include "fvkit/parallel.hpp"

namespace fvkit {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_dim(const GaussianMixture& gmm, std::size_t d) {
  if (d != gmm.dim()) {
    throw Error(ErrorKind::kShape, "descriptor dimension " + std::to_string(d) +
                                       " does not match codebook dimension " +
                                       std::to_string(gmm.dim()));
  }
}

// Sufficient statistics of one E-step, with first and second moments taken
// about a per-component shift (the current means) to avoid cancellation.
struct EStats {
  std::vector<double> mass;  // K
  Matrix first;              // K x D, sum gamma (x - shift)
  Matrix second;             // K x D, sum gamma (x - shift)^2

  EStats(std::size_t k, std::size_t d) : mass(k, 0.0), first(k, d), second(k, d) {}

  void add(const EStats& other) {
    for (std::size_t i = 0; i < mass.size(); ++i) mass[i] += other.mass[i];
    auto f = first.data();
    auto of = other.first.data();
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += of[i];
    auto s = second.data();
    auto os = other.second.data();
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += os[i];
  }
};

struct EStep {
  EStats stats;
  std::vector<double> row_log_density;  // T
  std::vector<double> row_max_resp;     // T
};

void accumulate_chunk(const GaussianMixture& gmm, const Matrix& x, std::size_t begin,
                      std::size_t end, EStats& stats, std::vector<double>& row_log_density,
                      std::vector<double>& row_max_resp) {
  const std::size_t k = gmm.num_components();
  const std::size_t d = gmm.dim();
  std::vector<double> resp(k);
  for (std::size_t t = begin; t < end; ++t) {
    const auto row = x.row(t);
    row_log_density[t] = posteriors_into(gmm, row, resp);
    row_max_resp[t] = *std::max_element(resp.begin(), resp.end());
    for (std::size_t c = 0; c < k; ++c) {
      const double g = resp[c];
      if (g == 0.0) continue;
      stats.mass[c] += g;
      const auto mu = gmm.means().row(c);
      auto first = stats.first.row(c);
      auto second = stats.second.row(c);
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = row[j] - mu[j];
        first[j] += g * diff;
        second[j] += g * diff * diff;
      }
    }
  }
}

EStep run_estep(const GaussianMixture& gmm, const Matrix& x, std::size_t threads) {
  const std::size_t n = x.rows();
  const std::size_t k = gmm.num_components();
  const std::size_t d = gmm.dim();
  EStep out{EStats(k, d), std::vector<double>(n), std::vector<double>(n)};
  const std::size_t chunks = chunk_count(n);
  const std::size_t wave = std::max<std::size_t>(1, threads);
  // Chunks are processed a wave at a time and folded into the total strictly
  // in chunk order.
  for (std::size_t first_chunk = 0; first_chunk < chunks; first_chunk += wave) {
    const std::size_t in_wave = std::min(wave, chunks - first_chunk);
    std::vector<EStats> partial(in_wave, EStats(k, d));
    parallel_for(in_wave, threads, [&](std::size_t i) {
      const std::size_t c = first_chunk + i;
      const std::size_t begin = c * kReductionChunk;
      const std::size_t end = std::min(n, begin + kReductionChunk);
      accumulate_chunk(gmm, x, begin, end, partial[i], out.row_log_density, out.row_max_resp);
    });
    for (const auto& p : partial) out.stats.add(p);
  }
  return out;
}

// Maximizer of sum_k mass_k log w_k over the simplex with w_k >= floor.
std::vector<double> floored_weights(std::span<const double> mass, double floor) {
  const std::size_t k = mass.size();
  std::vector<bool> clamped(k, false);
  std::vector<double> w(k, 0.0);
  for (;;) {
    double free_mass = 0.0;
    std::size_t num_clamped = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (clamped[c]) {
        ++num_clamped;
      } else {
        free_mass += mass[c];
      }
    }
    const double budget = 1.0 - static_cast<double>(num_clamped) * floor;
    bool changed = false;
    for (std::size_t c = 0; c < k; ++c) {
      if (clamped[c]) {
        w[c] = floor;
        continue;
      }
      w[c] = free_mass > 0.0 ? budget * mass[c] / free_mass : floor;
      if (w[c] < floor) {
        clamped[c] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return w;
}

struct MStepResult {
  GaussianMixture model;
  int reseeded = 0;
};

MStepResult run_mstep(const GaussianMixture& current, const EStep& e, const Matrix& x,
                      std::span<const double> floor, std::span<const double> global_var) {
  const std::size_t k = current.num_components();
  const std::size_t d = current.dim();
  Matrix means(k, d);
  Matrix vars(k, d);
  std::vector<std::size_t> starved;
  for (std::size_t c = 0; c < k; ++c) {
    const double mass = e.stats.mass[c];
    if (mass < kStarvedMass) {
      starved.push_back(c);
      continue;
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double shift = e.stats.first(c, j) / mass;
      means(c, j) = current.means()(c, j) + shift;
      const double var = e.stats.second(c, j) / mass - shift * shift;
      vars(c, j) = std::max(var, floor[j]);
    }
  }

  std::vector<double> weights = floored_weights(e.stats.mass, kWeightFloor);

  if (!starved.empty()) {
    // Re-seed each starved component at a distinct descriptor that the
    // current model explains worst.
    std::vector<std::size_t> order(x.rows());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return e.row_max_resp[a] < e.row_max_resp[b];
    });
    for (std::size_t i = 0; i < starved.size(); ++i) {
      const std::size_t c = starved[i];
      const auto src = x.row(order[i % order.size()]);
      for (std::size_t j = 0; j < d; ++j) {
        means(c, j) = src[j];
        vars(c, j) = std::max(global_var[j], floor[j]);
      }
      weights[c] = 1.0 / static_cast<double>(k);
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= total;
  }
  return {GaussianMixture(std::move(weights), std::move(means), std::move(vars)),
          static_cast<int>(starved.size())};
}

GaussianMixture initial_model(const Matrix& x, std::size_t k, const EmConfig& config,
                              std::span<const double> floor, std::span<const double> global_var) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  std::mt19937_64 rng(config.seed);

  const std::size_t subsample_size = std::min(n, 10 * k * d);
  std::vector<std::size_t> index(n);
  std::iota(index.begin(), index.end(), 0);
  if (subsample_size < n) {
    // Partial Fisher-Yates; the chosen prefix is then sorted to keep the
    // subsample in data order.
    for (std::size_t i = 0; i < subsample_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(index[i], index[pick(rng)]);
    }
    index.resize(subsample_size);
    std::sort(index.begin(), index.end());
  }
  Matrix sub(index.size(), d);
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto src = x.row(index[i]);
    std::copy(src.begin(), src.end(), sub.row(i).begin());
  }

  const auto seeds = kmeans_pp_seed(sub, k, rng);
  Matrix centers(k, d);
  for (std::size_t c = 0; c < k; ++c) {
    const auto src = sub.row(seeds[c]);
    std::copy(src.begin(), src.end(), centers.row(c).begin());
  }
  auto km = lloyd(sub, std::move(centers), config.kmeans_iters);

  std::vector<double> counts(k, 0.0);
  Matrix sq(k, d);
  for (std::size_t i = 0; i < sub.rows(); ++i) {
    const std::size_t c = km.assignment[i];
    counts[c] += 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = sub(i, j) - km.centers(c, j);
      sq(c, j) += diff * diff;
    }
  }
  Matrix vars(k, d);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      const double v = counts[c] >= 2.0 ? sq(c, j) / counts[c] : global_var[j];
      vars(c, j) = std::max(v, floor[j]);
    }
  }
  std::vector<double> fractions(k);
  for (std::size_t c = 0; c < k; ++c) fractions[c] = counts[c] / static_cast<double>(sub.rows());
  return GaussianMixture(floored_weights(fractions, kWeightFloor), std::move(km.centers),
                         std::move(vars));
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<double> weights, Matrix means, Matrix variances)
    : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
  const std::size_t k = weights_.size();
  const std::size_t d = means_.cols();
  if (k == 0 || d == 0) {
    throw Error(ErrorKind::kShape, "a mixture needs K >= 1 and D >= 1");
  }
  if (means_.rows() != k || variances_.rows() != k || variances_.cols() != d) {
    throw Error(ErrorKind::kShape, "mixture parameter shapes disagree with K=" +
                                       std::to_string(k) + ", D=" + std::to_string(d));
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::kInvalidArgument, "mixing weights must be finite and positive");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw Error(ErrorKind::kInvalidArgument,
                "mixing weights sum to " + std::to_string(sum) + ", not 1");
  }
  for (double m : means_.data()) {
    if (!std::isfinite(m)) throw Error(ErrorKind::kInvalidArgument, "non-finite mixture mean");
  }
  for (double v : variances_.data()) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::kInvalidArgument, "mixture variances must be finite and positive");
    }
  }

  inv_variances_ = Matrix(k, d);
  log_norm_.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    double log_det = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      inv_variances_(c, j) = 1.0 / variances_(c, j);
      log_det += std::log(variances_(c, j));
    }
    log_norm_[c] = std::log(weights_[c]) - 0.5 * (static_cast<double>(d) * kLog2Pi + log_det);
  }
}

void GaussianMixture::log_joint(std::span<const double> x, std::span<double> out) const {
  const std::size_t d = dim();
  for (std::size_t c = 0; c < num_components(); ++c) {
    const auto mu = means_.row(c);
    const auto inv = inv_variances_.row(c);
    double maha = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = x[j] - mu[j];
      maha += diff * diff * inv[j];
    }
    out[c] = log_norm_[c] - 0.5 * maha;
  }
}

void EmConfig::validate() const {
  if (max_iters < 1) throw Error(ErrorKind::kInvalidArgument, "EM max_iters must be >= 1");
  if (!(tol > 0.0)) throw Error(ErrorKind::kInvalidArgument, "EM tol must be > 0");
  if (!(variance_floor_fraction > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "variance_floor_fraction must be > 0");
  }
  if (kmeans_iters < 0) throw Error(ErrorKind::kInvalidArgument, "kmeans_iters must be >= 0");
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double peak = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

double order_independent_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc;
}

double posteriors_into(const GaussianMixture& gmm, std::span<const double> x,
                       std::span<double> out) {
  check_dim(gmm, x.size());
  gmm.log_joint(x, out);
  const double lse = log_sum_exp(out);
  for (double& v : out) v = std::exp(v - lse);
  return lse;
}

std::vector<double> posteriors(const GaussianMixture& gmm, std::span<const double> x) {
  std::vector<double> out(gmm.num_components());
  posteriors_into(gmm, x, out);
  return out;
}

double log_likelihood(const GaussianMixture& gmm, const DescriptorSet& descriptors) {
  check_dim(gmm, descriptors.dim());
  if (descriptors.empty()) {
    throw Error(ErrorKind::kEmptyInput, "log-likelihood of an empty descriptor set");
  }
  std::vector<double> joint(gmm.num_components());
  std::vector<double> per_row(descriptors.size());
  for (std::size_t t = 0; t < descriptors.size(); ++t) {
    gmm.log_joint(descriptors.row(t), joint);
    per_row[t] = log_sum_exp(joint);
  }
  return order_independent_sum(std::move(per_row)) / static_cast<double>(descriptors.size());
}

GmmSample sample_gmm_with_components(const GaussianMixture& gmm, std::size_t n,
                                     std::uint64_t seed) {
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "sample size must be >= 1");
  const std::size_t d = gmm.dim();
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(gmm.weights().begin(), gmm.weights().end());
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix data(n, d);
  std::vector<std::size_t> components(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t c = pick(rng);
    components[t] = c;
    for (std::size_t j = 0; j < d; ++j) {
      data(t, j) = gmm.means()(c, j) + std::sqrt(gmm.variances()(c, j)) * normal(rng);
    }
  }
  return {DescriptorSet("", std::move(data)), std::move(components)};
}

DescriptorSet sample_gmm(const GaussianMixture& gmm, std::size_t n, std::uint64_t seed) {
  return std::move(sample_gmm_with_components(gmm, n, seed).descriptors);
}

std::vector<double> column_variance(const Matrix& data) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  std::vector<double> mean(d, 0.0);
  std::vector<double> var(d, 0.0);
  if (n == 0) return var;
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += data(t, j);
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = data(t, j) - mean[j];
      var[j] += diff * diff;
    }
  }
  for (double& v : var) v /= static_cast<double>(n);
  return var;
}

FitResult fit_gmm_traced(const DescriptorSet& descriptors, std::size_t num_components,
                         const EmConfig& config) {
  config.validate();
  if (num_components == 0) {
    throw Error(ErrorKind::kInvalidArgument, "component count must be >= 1");
  }
  if (descriptors.dim() == 0) {
    throw Error(ErrorKind::kShape, "descriptors have dimension 0");
  }
  if (descriptors.size() < num_components) {
    throw Error(ErrorKind::kInsufficientData,
                "cannot fit " + std::to_string(num_components) + " components to " +
                    std::to_string(descriptors.size()) + " descriptors");
  }
  if (!descriptors.all_finite()) {
    throw Error(ErrorKind::kInvalidDescriptor, "descriptors contain non-finite values");
  }
  const Matrix& x = descriptors.data();
  if (num_components > 1) {
    const auto first = x.row(0);
    bool all_same = true;
    for (std::size_t t = 1; t < x.rows() && all_same; ++t) {
      all_same = std::equal(first.begin(), first.end(), x.row(t).begin());
    }
    if (all_same) {
      throw Error(ErrorKind::kDegenerateData,
                  "all descriptors are identical; cannot fit " + std::to_string(num_components) +
                      " distinct components");
    }
  }

  const std::vector<double> global_var = column_variance(x);
  std::vector<double> floor(global_var.size());
  for (std::size_t j = 0; j < floor.size(); ++j) {
    floor[j] = std::max(config.variance_floor_fraction * global_var[j], kMinVariance);
  }

  GaussianMixture model = initial_model(x, num_components, config, floor, global_var);
  FitResult result{model, {}, 0, false, 0};
  double previous = 0.0;
  for (int iter = 0;; ++iter) {
    EStep e = run_estep(model, x, config.threads);
    const double ll = order_independent_sum(std::move(e.row_log_density)) /
                      static_cast<double>(x.rows());
    e.row_log_density.clear();
    result.log_likelihood_trace.push_back(ll);
    if (iter > 0) {
      const double improvement =
          (ll - previous) / std::max(std::abs(previous), std::numeric_limits<double>::min());
      if (improvement < config.tol) {
        result.converged = true;
        break;
      }
    }
    if (iter == config.max_iters) break;
    previous = ll;
    auto m = run_mstep(model, e, x, floor, global_var);
    model = std::move(m.model);
    result.reseeded_components += m.reseeded;
    result.iterations = iter + 1;
  }
  result.model = std::move(model);
  return result;
}

GaussianMixture fit_gmm(const DescriptorSet& descriptors, std::size_t num_components,
                        const EmConfig& config) {
  return fit_gmm_traced(descriptors, num_components, config).model;
}

}  // namespace fvkit
