#include "bfamr/tensor.hpp"

#include <cmath>

#include "bfamr/error.hpp"

namespace bfamr {

Tensor::Tensor(int rows, int cols, std::vector<Real> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != static_cast<std::size_t>(rows) * cols)
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match " +
                     shape_string());
}

Tensor Tensor::row_vector(std::vector<Real> values) {
  const int n = static_cast<int>(values.size());
  return Tensor(1, n, std::move(values));
}

std::string Tensor::shape_string() const {
  return "[" + std::to_string(rows_) + " x " + std::to_string(cols_) + "]";
}

void Tensor::fill(Real v) {
  for (auto& x : data_) x = v;
}

void Tensor::add_in_place(const Tensor& other) {
  if (!same_shape(other))
    throw ShapeError("add_in_place: " + shape_string() + " vs " + other.shape_string());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

Real Tensor::squared_norm() const {
  Real s = 0;
  for (Real x : data_) s += x * x;
  return s;
}

bool Tensor::all_finite() const {
  for (Real x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace bfamr
