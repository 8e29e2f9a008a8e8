#include "misa/autodiff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "misa/common/error.hpp"

namespace misa::ad {
namespace {

std::size_t extent_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(extent_product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (data_.size() != extent_product(shape_)) {
    throw Error("tensor data length " + std::to_string(data_.size()) +
                " does not match shape " + shape_string());
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill) {
  return Tensor({rows, cols}, fill);
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, std::vector<double>{value}); }

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({1, n}, std::move(values));
}

Tensor Tensor::column(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n, 1}, std::move(values));
}

std::size_t Tensor::leading_extent() const noexcept {
  std::size_t n = 1;
  for (std::size_t i = 0; i + 1 < shape_.size(); ++i) n *= shape_[i];
  return n;
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw Error("item() on tensor of shape " + shape_string());
  }
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

bool Tensor::same_shape(const Tensor& other) const noexcept {
  return rows() == other.rows() && cols() == other.cols();
}

void Tensor::reshape_matrix(std::size_t rows, std::size_t cols) {
  if (shape_.size() != 2) shape_.assign(2, 0);
  shape_[0] = rows;
  shape_[1] = cols;
  data_.resize(rows * cols);
}

void Tensor::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

std::string Tensor::shape_string() const {
  std::string out = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape_[i]);
  }
  return out + "]";
}

std::string shape_string(std::size_t rows, std::size_t cols) {
  return "[" + std::to_string(rows) + "," + std::to_string(cols) + "]";
}

}  // namespace misa::ad
