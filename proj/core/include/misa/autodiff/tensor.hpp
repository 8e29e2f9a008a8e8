#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace misa::ad {

// Cache-line aligned storage. Vectorized reductions then see the same
// alignment for every buffer, so results do not depend on where the heap
// placed a tensor.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

// Dense row-major tensor of doubles. Arithmetic operations treat every tensor
// as a matrix: rank 0 is 1x1, rank 1 of extent n is a 1xn row.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  static Tensor scalar(double value);
  static Tensor row(std::vector<double> values);
  static Tensor column(std::vector<double> values);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rows() const noexcept {
    if (shape_.size() < 2) return 1;
    return shape_.back() == 0 ? leading_extent() : data_.size() / shape_.back();
  }
  std::size_t cols() const noexcept { return shape_.empty() ? 1 : shape_.back(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row_span(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row_span(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }

  // Value of a single-element tensor.
  double item() const;
  bool all_finite() const noexcept;
  bool same_shape(const Tensor& other) const noexcept;

  // Resize to rows x cols, reusing storage. Contents are unspecified.
  void reshape_matrix(std::size_t rows, std::size_t cols);
  void fill(double value) noexcept;

  std::string shape_string() const;

 private:
  std::size_t leading_extent() const noexcept;

  std::vector<std::size_t> shape_;
  std::vector<double, AlignedAllocator<double>> data_;
};

std::string shape_string(std::size_t rows, std::size_t cols);

}  // namespace misa::ad
