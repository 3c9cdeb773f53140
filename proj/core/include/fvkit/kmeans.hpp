#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "fvkit/matrix.hpp"

namespace fvkit {

double squared_distance(std::span<const double> a, std::span<const double> b);

// Greedy k-means++ seeding: returns K row indices of `data`. The first center
// is uniform. Each further step draws 2 + floor(ln K) candidates with
// probability proportional to the squared distance to the nearest chosen
// center and keeps the one with the lowest resulting potential. When all
// distances are zero the pick is uniform.
std::vector<std::size_t> kmeans_pp_seed(const Matrix& data, std::size_t num_centers,
                                        std::mt19937_64& rng);

struct KMeansResult {
  Matrix centers;
  std::vector<std::size_t> assignment;
};

// Lloyd iterations from the given centers. A cluster that loses all points
// keeps its previous center. Ties go to the lowest center index.
KMeansResult lloyd(const Matrix& data, Matrix centers, int iterations);

}  // namespace fvkit
