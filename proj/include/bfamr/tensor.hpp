#pragma once

#include <span>
#include <string>
#include <vector>

namespace bfamr {

#ifdef BFAMR_FLOAT32
using Real = float;
#else
using Real = double;
#endif

// Dense row-major matrix. Vectors are 1 x n.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols, Real fill = Real(0))
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}
  Tensor(int rows, int cols, std::vector<Real> data);

  static Tensor row_vector(std::vector<Real> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return static_cast<int>(data_.size()); }
  bool empty() const { return data_.empty(); }
  std::vector<int> shape() const { return {rows_, cols_}; }
  std::string shape_string() const;
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  Real& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  Real operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  Real& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }
  Real operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> row(int r) { return {data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }
  std::span<const Real> row(int r) const {
    return {data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }
  const std::vector<Real>& values() const { return data_; }

  void fill(Real v);
  // this += other (same shape).
  void add_in_place(const Tensor& other);
  Real squared_norm() const;
  bool all_finite() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Real> data_;
};

}  // namespace bfamr
