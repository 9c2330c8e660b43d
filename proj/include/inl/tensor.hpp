#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace inl {

// Dense row-major array of doubles. Most of the engine uses the 2-D case
// (batch x features); the shape is kept general for checkpoints and tables.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::size_t rank() const { return shape_.size(); }
  bool empty() const { return data_.empty(); }

  // 2-D accessors; throw ShapeError on non-matrix tensors.
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  const double& operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Column block [first, first + width) of a matrix.
Tensor slice_cols(const Tensor& m, std::size_t first, std::size_t width);

// Horizontal concatenation of per-sample feature blocks; all parts share a
// row count. This is the "vertical" stacking of activation vectors when each
// sample is viewed as a column.
Tensor concat_cols(std::span<const Tensor* const> parts);
Tensor concat_cols(std::initializer_list<const Tensor*> parts);

// Splits columns into consecutive blocks of the given widths.
std::vector<Tensor> split_cols(const Tensor& m, std::span<const std::size_t> widths);

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace inl
