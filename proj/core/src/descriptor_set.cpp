#include "fvkit/descriptor_set.hpp"

#include <cmath>

#include "fvkit/errors.hpp"

namespace fvkit {

bool DescriptorSet::all_finite() const {
  for (double v : data_.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void DescriptorSet::require_encodable() const {
  if (empty()) {
    throw Error(ErrorKind::kEmptyInput, "descriptor set '" + image_id_ + "' is empty");
  }
  if (!all_finite()) {
    throw Error(ErrorKind::kInvalidDescriptor,
                "descriptor set '" + image_id_ + "' contains non-finite values");
  }
}

DescriptorSet concatenate(const DescriptorSet& a, const DescriptorSet& b) {
  if (a.empty()) return DescriptorSet(a.image_id(), b.data());
  if (b.empty()) return a;
  if (a.dim() != b.dim()) {
    throw Error(ErrorKind::kShape, "cannot concatenate descriptor sets of dimension " +
                                       std::to_string(a.dim()) + " and " +
                                       std::to_string(b.dim()));
  }
  std::vector<double> values(a.data().data().begin(), a.data().data().end());
  values.insert(values.end(), b.data().data().begin(), b.data().data().end());
  return DescriptorSet(a.image_id(), Matrix(a.size() + b.size(), a.dim(), std::move(values)));
}

DescriptorSet select_rows(const DescriptorSet& set, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), set.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= set.size()) {
      throw Error(ErrorKind::kInvalidArgument, "row index out of range");
    }
    auto src = set.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return DescriptorSet(set.image_id(), std::move(out));
}

}  // namespace fvkit
