#include "inl/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "inl/errors.hpp"

namespace inl {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (product(shape_) != data_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string());
  }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged rows in Tensor::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::rows() const {
  if (shape_.size() != 2) throw ShapeError("expected a matrix, got shape " + shape_string());
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2) throw ShapeError("expected a matrix, got shape " + shape_string());
  return shape_[1];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
  os << ']';
  return os.str();
}

Tensor slice_cols(const Tensor& m, std::size_t first, std::size_t width) {
  if (first + width > m.cols()) throw ShapeError("column slice out of range");
  Tensor out = Tensor::matrix(m.rows(), width);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < width; ++c) out(r, c) = m(r, first + c);
  }
  return out;
}

Tensor concat_cols(std::span<const Tensor* const> parts) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const std::size_t rows = parts.front()->rows();
  std::size_t total = 0;
  for (const Tensor* p : parts) {
    if (p->rows() != rows) {
      throw ShapeError("concat: row counts differ (" + std::to_string(rows) + " vs " +
                       std::to_string(p->rows()) + ")");
    }
    total += p->cols();
  }
  Tensor out = Tensor::matrix(rows, total);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t offset = 0;
    for (const Tensor* p : parts) {
      auto src = p->row(r);
      std::copy(src.begin(), src.end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
      offset += p->cols();
    }
  }
  return out;
}

Tensor concat_cols(std::initializer_list<const Tensor*> parts) {
  return concat_cols(std::span<const Tensor* const>(parts.begin(), parts.size()));
}

std::vector<Tensor> split_cols(const Tensor& m, std::span<const std::size_t> widths) {
  const std::size_t total = std::accumulate(widths.begin(), widths.end(), std::size_t{0});
  if (total != m.cols()) {
    throw ShapeError("split widths sum to " + std::to_string(total) + " but tensor has " +
                     std::to_string(m.cols()) + " columns");
  }
  std::vector<Tensor> out;
  out.reserve(widths.size());
  std::size_t first = 0;
  for (std::size_t w : widths) {
    out.push_back(slice_cols(m, first, w));
    first += w;
  }
  return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape " + a.shape_string() + " vs " + b.shape_string());
  }
}

}  // namespace inl
