#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fvkit/matrix.hpp"

namespace fvkit {

// The local descriptors of one image: T rows of dimension D.
class DescriptorSet {
 public:
  DescriptorSet() = default;
  DescriptorSet(std::string image_id, Matrix data)
      : image_id_(std::move(image_id)), data_(std::move(data)) {}

  const std::string& image_id() const noexcept { return image_id_; }
  void set_image_id(std::string id) { image_id_ = std::move(id); }

  std::size_t dim() const noexcept { return data_.cols(); }
  std::size_t size() const noexcept { return data_.rows(); }
  bool empty() const noexcept { return data_.rows() == 0; }

  std::span<const double> row(std::size_t t) const { return data_.row(t); }
  const Matrix& data() const noexcept { return data_; }
  Matrix& data() noexcept { return data_; }

  bool all_finite() const;

  // Throws kEmptyInput when empty and kInvalidDescriptor on NaN/Inf.
  void require_encodable() const;

  bool operator==(const DescriptorSet&) const = default;

 private:
  std::string image_id_;
  Matrix data_;
};

// Row concatenation; both sets must share D unless one of them is empty.
DescriptorSet concatenate(const DescriptorSet& a, const DescriptorSet& b);

// Rows selected by index, in the given order.
DescriptorSet select_rows(const DescriptorSet& set, std::span<const std::size_t> rows);

}  // namespace fvkit
