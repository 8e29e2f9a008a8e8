#pragma once

#include <span>
#include <vector>

#include "misa/autodiff/tensor.hpp"

namespace misa::dist {

// Diagonal Gaussian density over the action column; stands in for p(a).
struct DiagonalGaussian {
  std::vector<double> mean;
  std::vector<double> var;

  double log_density(std::span<const double> a) const;
  std::vector<double> log_density_batch(const ad::Tensor& actions) const;
};

inline constexpr double kMarginalVarianceFloor = 1e-6;

// Maximum-likelihood fit; needs at least two rows.
DiagonalGaussian fit_marginal(const ad::Tensor& actions);

}  // namespace misa::dist
