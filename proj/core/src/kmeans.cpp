#include "fvkit/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fvkit/errors.hpp"

namespace fvkit {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

std::vector<std::size_t> kmeans_pp_seed(const Matrix& data, std::size_t num_centers,
                                        std::mt19937_64& rng) {
  const std::size_t n = data.rows();
  if (num_centers == 0 || n < num_centers) {
    throw Error(ErrorKind::kInsufficientData, "k-means++ needs at least " +
                                                  std::to_string(num_centers) + " rows, got " +
                                                  std::to_string(n));
  }
  std::vector<std::size_t> chosen;
  chosen.reserve(num_centers);
  std::uniform_int_distribution<std::size_t> uniform(0, n - 1);
  chosen.push_back(uniform(rng));

  // Greedy variant: draw several D^2-weighted candidates per step and keep the
  // one that leaves the smallest total squared distance.
  const auto trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(num_centers)));
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(data.row(i), data.row(chosen[0]));
  std::vector<double> candidate(n);
  std::vector<double> best(n);
  while (chosen.size() < num_centers) {
    double total = 0.0;
    for (double v : nearest) total += v;
    if (!(total > 0.0)) {
      chosen.push_back(uniform(rng));
      continue;
    }
    std::discrete_distribution<std::size_t> pick(nearest.begin(), nearest.end());
    double best_potential = std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
      const std::size_t c = pick(rng);
      double potential = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        candidate[i] = std::min(nearest[i], squared_distance(data.row(i), data.row(c)));
        potential += candidate[i];
      }
      if (potential < best_potential) {
        best_potential = potential;
        best_index = c;
        best.swap(candidate);
      }
    }
    chosen.push_back(best_index);
    nearest.swap(best);
  }
  return chosen;
}

KMeansResult lloyd(const Matrix& data, Matrix centers, int iterations) {
  const std::size_t n = data.rows();
  const std::size_t k = centers.rows();
  const std::size_t d = data.cols();
  std::vector<std::size_t> assignment(n, 0);

  auto assign = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_k = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double dist = squared_distance(data.row(i), centers.row(c));
        if (dist < best) {
          best = dist;
          best_k = c;
        }
      }
      assignment[i] = best_k;
    }
  };

  assign();
  for (int it = 0; it < iterations; ++it) {
    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto dst = sums.row(assignment[i]);
      auto src = data.row(i);
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
      ++counts[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) {
        centers(c, j) = sums(c, j) / static_cast<double>(counts[c]);
      }
    }
    assign();
  }
  return {std::move(centers), std::move(assignment)};
}

}  // namespace fvkit
