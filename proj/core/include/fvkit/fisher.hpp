#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fvkit/descriptor_set.hpp"
#include "fvkit/gmm.hpp"

namespace fvkit {

// Responsibilities below this are dropped from the gradient sums.
inline constexpr double kResponsibilityTruncation = 1e-6;

/// Gradient representation of one descriptor set with respect to the
/// codebook means and standard deviations, length 2*K*D.
///
/// Layout: K mean blocks of D entries, then K variance blocks of D entries.
/// `normalized` marks vectors that went through power + L2 normalization.
class FisherVector {
 public:
  FisherVector() = default;
  FisherVector(std::vector<double> values, bool normalized)
      : values_(std::move(values)), normalized_(normalized) {}

  std::size_t dim() const noexcept { return values_.size(); }
  bool normalized() const noexcept { return normalized_; }
  std::span<const double> values() const noexcept { return values_; }

  double norm() const;

  bool operator==(const FisherVector&) const = default;

 private:
  std::vector<double> values_;
  bool normalized_ = false;
};

inline std::size_t fisher_dim(const GaussianMixture& gmm) {
  return 2 * gmm.num_components() * gmm.dim();
}

// Raw Fisher vector. Rows are visited in a canonical (lexicographic) order, so
// the result is bit-identical under any permutation of the descriptors.
FisherVector encode_fv(const GaussianMixture& gmm, const DescriptorSet& descriptors);

// Signed square root followed by L2 normalization. Rejects vectors that are
// already normalized. An all-zero input stays all-zero.
FisherVector normalize_fv(const FisherVector& fv);

// Foreground/background mixture p = w q + (1 - w) r.
struct MixtureSpec {
  GaussianMixture foreground;
  GaussianMixture background;
  double w = 1.0;

  void validate() const;
};

struct DecompositionReport {
  std::size_t foreground_count = 0;
  std::size_t background_count = 0;
  double w = 0.0;           // requested foreground proportion
  double realized_w = 0.0;  // foreground_count / n, used in the identity
  FisherVector fv_mix;
  FisherVector fv_fg;  // zero vector when foreground_count == 0
  FisherVector fv_bg;  // zero vector when background_count == 0
  double mixture_norm = 0.0;
  double foreground_term_norm = 0.0;  // |realized_w * fv_fg|
  double background_term_norm = 0.0;  // |(1 - realized_w) * fv_bg|
  // |fv_mix - w fv_fg - (1 - w) fv_bg| / |fv_mix|; 0 when both are zero.
  double residual_norm = 0.0;
};

// Samples round(w n) foreground and n - round(w n) background descriptors,
// encodes the concatenation and both parts against `codebook`, and measures
// how far the mixture vector is from the weighted sum of the parts.
DecompositionReport decomposition_experiment(const MixtureSpec& spec,
                                             const GaussianMixture& codebook, std::size_t n,
                                             std::uint64_t seed);

}  // namespace fvkit
