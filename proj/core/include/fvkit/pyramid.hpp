#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fvkit/descriptor_set.hpp"

namespace fvkit {

// Multi-scale schedule: images are rescaled by 2^s for each exponent s.
class ScaleSchedule {
 public:
  // Exponents must be finite and strictly increasing.
  explicit ScaleSchedule(std::vector<double> exponents);

  std::span<const double> exponents() const noexcept { return exponents_; }
  std::span<const double> factors() const noexcept { return factors_; }
  std::size_t size() const noexcept { return exponents_.size(); }

  // Index of the exponent within 1e-9 of `s`, or size() when absent.
  std::size_t find(double s) const;

  // "-3,-2.5,...,1" form.
  std::string to_string() const;

 private:
  std::vector<double> exponents_;
  std::vector<double> factors_;
};

// s = -3, -2.5, ..., 1 (nine scales, factors 0.125 to 2).
ScaleSchedule default_schedule();

// Parses a comma-separated exponent list such as "-1,-0.5,0".
ScaleSchedule parse_schedule(std::string_view text);

// 2^s, exact for integer and half-integer s.
double scale_factor(double exponent);

// Concatenates the per-scale sets in the given order. Empty sets are skipped;
// the non-empty ones must share D. Throws kEmptyInput if nothing remains.
DescriptorSet pool_scales(std::span<const DescriptorSet> per_scale, const std::string& image_id);

}  // namespace fvkit
