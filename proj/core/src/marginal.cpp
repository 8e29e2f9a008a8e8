#include "misa/distributions/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "misa/common/error.hpp"

namespace misa::dist {

double DiagonalGaussian::log_density(std::span<const double> a) const {
  double total = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - mean[j];
    total += -0.5 * d * d / var[j] - 0.5 * std::log(2.0 * std::numbers::pi * var[j]);
  }
  return total;
}

std::vector<double> DiagonalGaussian::log_density_batch(const ad::Tensor& actions) const {
  std::vector<double> out(actions.rows());
  for (std::size_t r = 0; r < actions.rows(); ++r) out[r] = log_density(actions.row_span(r));
  return out;
}

DiagonalGaussian fit_marginal(const ad::Tensor& actions) {
  const std::size_t n = actions.rows();
  const std::size_t d = actions.cols();
  if (n < 2) throw ConfigError("fit_marginal needs at least two actions");
  DiagonalGaussian g{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) g.mean[j] += actions(r, j);
  }
  for (double& m : g.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = actions(r, j) - g.mean[j];
      g.var[j] += diff * diff;
    }
  }
  for (double& v : g.var) v = std::max(v / static_cast<double>(n), kMarginalVarianceFloor);
  return g;
}

}  // namespace misa::dist
