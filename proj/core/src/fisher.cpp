#include "fvkit/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fvkit/errors.hpp"
#include "fvkit/parallel.hpp"
#include "fvkit/random.hpp"

namespace fvkit {

namespace {

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

std::vector<std::size_t> canonical_order(const Matrix& x) {
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = x.row(a);
    const auto rb = x.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  return order;
}

}  // namespace

double FisherVector::norm() const { return l2_norm(values_); }

FisherVector encode_fv(const GaussianMixture& gmm, const DescriptorSet& descriptors) {
  descriptors.require_encodable();
  if (descriptors.dim() != gmm.dim()) {
    throw Error(ErrorKind::kShape, "descriptor dimension " + std::to_string(descriptors.dim()) +
                                       " does not match codebook dimension " +
                                       std::to_string(gmm.dim()));
  }
  const std::size_t k = gmm.num_components();
  const std::size_t d = gmm.dim();
  const std::size_t n = descriptors.size();
  const std::size_t half = k * d;

  Matrix inv_std(k, d);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < d; ++j) inv_std(c, j) = 1.0 / std::sqrt(gmm.variances()(c, j));
  }

  const auto order = canonical_order(descriptors.data());
  std::vector<double> total(2 * half, 0.0);
  std::vector<double> chunk(2 * half);
  std::vector<double> resp(k);
  for (std::size_t begin = 0; begin < n; begin += kReductionChunk) {
    const std::size_t end = std::min(n, begin + kReductionChunk);
    std::fill(chunk.begin(), chunk.end(), 0.0);
    for (std::size_t i = begin; i < end; ++i) {
      const auto x = descriptors.row(order[i]);
      posteriors_into(gmm, x, resp);
      for (std::size_t c = 0; c < k; ++c) {
        const double g = resp[c];
        if (g < kResponsibilityTruncation) continue;
        const auto mu = gmm.means().row(c);
        const auto is = inv_std.row(c);
        double* mean_block = chunk.data() + c * d;
        double* var_block = chunk.data() + half + c * d;
        for (std::size_t j = 0; j < d; ++j) {
          const double u = (x[j] - mu[j]) * is[j];
          mean_block[j] += g * u;
          var_block[j] += g * (u * u - 1.0);
        }
      }
    }
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += chunk[i];
  }

  const double inv_t = 1.0 / static_cast<double>(n);
  for (std::size_t c = 0; c < k; ++c) {
    const double w = gmm.weights()[c];
    const double mean_scale = inv_t / std::sqrt(w);
    const double var_scale = inv_t / std::sqrt(2.0 * w);
    for (std::size_t j = 0; j < d; ++j) {
      total[c * d + j] *= mean_scale;
      total[half + c * d + j] *= var_scale;
    }
  }
  return FisherVector(std::move(total), false);
}

FisherVector normalize_fv(const FisherVector& fv) {
  if (fv.normalized()) {
    throw Error(ErrorKind::kDoubleNormalization, "Fisher vector is already normalized");
  }
  std::vector<double> out(fv.values().begin(), fv.values().end());
  for (double& v : out) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::kInvalidArgument, "Fisher vector contains non-finite values");
    }
    v = std::copysign(std::sqrt(std::abs(v)), v);
  }
  const double norm = l2_norm(out);
  if (norm > 0.0) {
    for (double& v : out) v /= norm;
  }
  return FisherVector(std::move(out), true);
}

void MixtureSpec::validate() const {
  if (foreground.dim() != background.dim()) {
    throw Error(ErrorKind::kShape, "foreground and background dimensions differ");
  }
  if (!(w >= 0.0 && w <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "foreground proportion must lie in [0, 1]");
  }
}

DecompositionReport decomposition_experiment(const MixtureSpec& spec,
                                             const GaussianMixture& codebook, std::size_t n,
                                             std::uint64_t seed) {
  spec.validate();
  if (codebook.dim() != spec.foreground.dim()) {
    throw Error(ErrorKind::kShape, "codebook dimension does not match the mixture");
  }
  if (n < 1000) {
    throw Error(ErrorKind::kInvalidArgument, "decomposition experiment needs n >= 1000");
  }
  const auto n_fg = static_cast<std::size_t>(std::llround(spec.w * static_cast<double>(n)));
  const std::size_t n_bg = n - n_fg;
  const bool pure = spec.w == 0.0 || spec.w == 1.0;
  if (!pure && (n_fg == 0 || n_bg == 0)) {
    throw Error(ErrorKind::kDegenerateSplit,
                "w * n rounds to an empty foreground or background sample");
  }

  const std::size_t dim = fisher_dim(codebook);
  DecompositionReport report;
  report.foreground_count = n_fg;
  report.background_count = n_bg;
  report.w = spec.w;
  report.realized_w = static_cast<double>(n_fg) / static_cast<double>(n);

  DescriptorSet fg;
  DescriptorSet bg;
  if (n_fg > 0) fg = sample_gmm(spec.foreground, n_fg, derive_seed(seed, 0));
  if (n_bg > 0) bg = sample_gmm(spec.background, n_bg, derive_seed(seed, 1));
  const DescriptorSet mix = concatenate(fg, bg);

  report.fv_mix = encode_fv(codebook, mix);
  report.fv_fg = n_fg > 0 ? encode_fv(codebook, fg) : FisherVector(std::vector<double>(dim), false);
  report.fv_bg = n_bg > 0 ? encode_fv(codebook, bg) : FisherVector(std::vector<double>(dim), false);

  const double a = report.realized_w;
  const double b = 1.0 - a;
  std::vector<double> fg_term(dim);
  std::vector<double> bg_term(dim);
  std::vector<double> residual(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    fg_term[i] = a * report.fv_fg.values()[i];
    bg_term[i] = b * report.fv_bg.values()[i];
    residual[i] = report.fv_mix.values()[i] - fg_term[i] - bg_term[i];
  }
  report.mixture_norm = report.fv_mix.norm();
  report.foreground_term_norm = l2_norm(fg_term);
  report.background_term_norm = l2_norm(bg_term);
  const double residual_abs = l2_norm(residual);
  report.residual_norm = residual_abs == 0.0 ? 0.0 : residual_abs / report.mixture_norm;
  return report;
}

}  // namespace fvkit
