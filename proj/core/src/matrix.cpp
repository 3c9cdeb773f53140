#include "fvkit/matrix.hpp"

#include "fvkit/errors.hpp"

namespace fvkit {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorKind::kShape, "matrix data size does not match " +
                                       std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) {
    cols_ = values.size();
  } else if (values.size() != cols_) {
    throw Error(ErrorKind::kShape, "row of length " + std::to_string(values.size()) +
                                       " appended to matrix with " + std::to_string(cols_) +
                                       " columns");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

}  // namespace fvkit
