#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fvkit/descriptor_set.hpp"
#include "fvkit/matrix.hpp"

namespace fvkit {

// Lower bound on every mixing weight after an M-step.
inline constexpr double kWeightFloor = 1e-6;
// A component whose total responsibility falls below this is re-seeded.
inline constexpr double kStarvedMass = 1e-10;
// Absolute lower bound on the variance floor, for data with zero spread.
inline constexpr double kMinVariance = 1e-10;
// Tolerance on the weight simplex invariant.
inline constexpr double kWeightSumTolerance = 1e-9;

/// Diagonal-covariance Gaussian mixture: the codebook against which Fisher
/// vectors are computed.
///
/// Immutable once constructed. The constructor checks every invariant (shapes,
/// weights on the simplex and strictly positive, finite positive variances)
/// and caches the per-component normalizers used by the density routines, so
/// one instance can be shared freely between threads.
class GaussianMixture {
 public:
  GaussianMixture(std::vector<double> weights, Matrix means, Matrix variances);

  std::size_t num_components() const noexcept { return weights_.size(); }
  std::size_t dim() const noexcept { return means_.cols(); }

  std::span<const double> weights() const noexcept { return weights_; }
  const Matrix& means() const noexcept { return means_; }
  const Matrix& variances() const noexcept { return variances_; }

  // out[k] = log(w_k) + log N(x; mu_k, diag(var_k)).
  void log_joint(std::span<const double> x, std::span<double> out) const;

  bool operator==(const GaussianMixture& other) const {
    return weights_ == other.weights_ && means_ == other.means_ &&
           variances_ == other.variances_;
  }

 private:
  std::vector<double> weights_;
  Matrix means_;
  Matrix variances_;
  Matrix inv_variances_;
  std::vector<double> log_norm_;  // log w_k - 0.5 (D log 2pi + sum_d log var_kd)
};

struct EmConfig {
  int max_iters = 100;
  double tol = 1e-5;  // relative improvement in mean log-likelihood
  std::uint64_t seed = 0;
  double variance_floor_fraction = 1e-4;
  int kmeans_iters = 10;
  std::size_t threads = 1;

  void validate() const;
};

struct FitResult {
  GaussianMixture model;
  // Mean log-likelihood of the data under the model at the start of every
  // iteration; the last entry belongs to the returned model.
  std::vector<double> log_likelihood_trace;
  int iterations = 0;  // M-steps performed
  bool converged = false;
  int reseeded_components = 0;
};

// Log-sum-exp of a span; -inf for an empty span or all -inf input.
double log_sum_exp(std::span<const double> values);

// Sum of values in ascending order, so the result is independent of the
// order the values were produced in.
double order_independent_sum(std::vector<double> values);

// Responsibilities gamma_k(x) computed in log space.
std::vector<double> posteriors(const GaussianMixture& gmm, std::span<const double> x);

// Allocation-free variant; `out` must have K entries. Returns log p(x).
double posteriors_into(const GaussianMixture& gmm, std::span<const double> x,
                       std::span<double> out);

// (1/T) sum_t log p(x_t). Exactly invariant under row permutations.
double log_likelihood(const GaussianMixture& gmm, const DescriptorSet& descriptors);

struct GmmSample {
  DescriptorSet descriptors;
  std::vector<std::size_t> components;
};

GmmSample sample_gmm_with_components(const GaussianMixture& gmm, std::size_t n,
                                     std::uint64_t seed);
DescriptorSet sample_gmm(const GaussianMixture& gmm, std::size_t n, std::uint64_t seed);

// Per-dimension population variance of the rows.
std::vector<double> column_variance(const Matrix& data);

// k-means++ seeding followed by EM. Deterministic given (descriptors, K, seed)
// and independent of config.threads.
FitResult fit_gmm_traced(const DescriptorSet& descriptors, std::size_t num_components,
                         const EmConfig& config);
GaussianMixture fit_gmm(const DescriptorSet& descriptors, std::size_t num_components,
                        const EmConfig& config);

}  // namespace fvkit
