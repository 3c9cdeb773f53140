#include "fvkit/pyramid.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fvkit/errors.hpp"

namespace fvkit {

double scale_factor(double exponent) {
  const double twice = 2.0 * exponent;
  if (std::nearbyint(twice) == twice && std::abs(twice) < 2048.0) {
    const auto halves = static_cast<int>(twice);
    const int whole = halves >= 0 ? halves / 2 : -((-halves + 1) / 2);
    const bool has_half = halves - 2 * whole != 0;
    return std::ldexp(has_half ? std::numbers::sqrt2 : 1.0, whole);
  }
  return std::exp2(exponent);
}

ScaleSchedule::ScaleSchedule(std::vector<double> exponents) : exponents_(std::move(exponents)) {
  if (exponents_.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "scale schedule is empty");
  }
  for (std::size_t i = 0; i < exponents_.size(); ++i) {
    if (!std::isfinite(exponents_[i])) {
      throw Error(ErrorKind::kInvalidArgument, "scale exponent is not finite");
    }
    if (i > 0 && !(exponents_[i] > exponents_[i - 1])) {
      throw Error(ErrorKind::kInvalidArgument, "scale exponents must be strictly increasing");
    }
    factors_.push_back(scale_factor(exponents_[i]));
  }
}

std::size_t ScaleSchedule::find(double s) const {
  for (std::size_t i = 0; i < exponents_.size(); ++i) {
    if (std::abs(exponents_[i] - s) <= 1e-9) return i;
  }
  return exponents_.size();
}

std::string ScaleSchedule::to_string() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < exponents_.size(); ++i) {
    if (i > 0) out << ',';
    out << exponents_[i];
  }
  return out.str();
}

ScaleSchedule default_schedule() {
  return ScaleSchedule({-3.0, -2.5, -2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0});
}

ScaleSchedule parse_schedule(std::string_view text) {
  std::vector<double> values;
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view token = text.substr(0, comma);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || end != token.data() + token.size()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "bad scale exponent '" + std::string(token) + "'");
    }
    values.push_back(value);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return ScaleSchedule(std::move(values));
}

DescriptorSet pool_scales(std::span<const DescriptorSet> per_scale, const std::string& image_id) {
  std::size_t dim = 0;
  std::size_t rows = 0;
  for (const auto& set : per_scale) {
    if (!set.image_id().empty() && set.image_id() != image_id) {
      throw Error(ErrorKind::kInvalidArgument, "scale set of image '" + set.image_id() +
                                                   "' pooled into image '" + image_id + "'");
    }
    if (set.empty()) continue;
    if (dim == 0) {
      dim = set.dim();
    } else if (set.dim() != dim) {
      throw Error(ErrorKind::kShape, "image '" + image_id + "' mixes descriptor dimensions " +
                                         std::to_string(dim) + " and " +
                                         std::to_string(set.dim()));
    }
    rows += set.size();
  }
  if (rows == 0) {
    throw Error(ErrorKind::kEmptyInput, "image '" + image_id + "' has no descriptors at any scale");
  }
  std::vector<double> values;
  values.reserve(rows * dim);
  for (const auto& set : per_scale) {
    if (set.empty()) continue;
    values.insert(values.end(), set.data().data().begin(), set.data().data().end());
  }
  return DescriptorSet(image_id, Matrix(rows, dim, std::move(values)));
}

}  // namespace fvkit
