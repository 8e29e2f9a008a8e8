#include "misa/mcmc/hmc.hpp"

#include <cmath>

#include "misa/common/error.hpp"

namespace misa::mcmc {
namespace {

bool finite_row(const Tensor& t, std::size_t r) {
  for (double v : t.row_span(r)) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace

void HmcConfig::validate() const {
  if (leapfrog_steps < 1) throw ConfigError("hmc: leapfrog_steps must be >= 1");
  if (!(step_size > 0.0)) throw ConfigError("hmc: step_size must be > 0");
  if (chains < 1) throw ConfigError("hmc: chains must be >= 1");
}

EnergyTarget EnergyTarget::from_point(
    std::function<double(std::span<const double>)> log_density,
    std::function<void(std::span<const double>, std::span<double>)> gradient) {
  return {[f = std::move(log_density), df = std::move(gradient)](
              const Tensor& x, std::vector<double>& lp, Tensor& grad) {
    lp.resize(x.rows());
    grad.reshape_matrix(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      lp[r] = f(x.row_span(r));
      df(x.row_span(r), grad.row_span(r));
    }
  }};
}

double HmcResult::acceptance_rate() const {
  return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
}

HmcResult hmc_run(const EnergyTarget& target, const Tensor& init, const HmcConfig& config,
                  std::size_t n_samples, Rng& rng) {
  config.validate();
  const std::size_t n = init.rows();
  const std::size_t d = init.cols();
  const double eps = config.step_size;

  Tensor x = init;
  std::vector<double> lp;
  Tensor grad;
  target.evaluate(x, lp, grad);
  for (std::size_t r = 0; r < n; ++r) {
    if (!std::isfinite(lp[r]) || !finite_row(grad, r)) {
      throw NumericalError("hmc: non-finite energy at the initial state of chain " +
                           std::to_string(r));
    }
  }

  HmcResult result;
  result.chains = n;
  result.samples = Tensor::matrix(n_samples * n, d);
  Tensor p = Tensor::matrix(n, d);
  Tensor xp = Tensor::matrix(n, d);
  Tensor pp = Tensor::matrix(n, d);
  std::vector<double> lp_new;
  Tensor grad_new;

  const std::size_t total = config.burn_in + n_samples;
  for (std::size_t t = 0; t < total; ++t) {
    fill_normal(rng, p.data());
    xp = x;
    pp = p;
    grad_new = grad;
    for (std::size_t l = 0; l < config.leapfrog_steps; ++l) {
      for (std::size_t i = 0; i < pp.size(); ++i) pp[i] += 0.5 * eps * grad_new[i];
      for (std::size_t i = 0; i < xp.size(); ++i) xp[i] += eps * pp[i];
      target.evaluate(xp, lp_new, grad_new);
      for (std::size_t i = 0; i < pp.size(); ++i) pp[i] += 0.5 * eps * grad_new[i];
    }
    for (std::size_t r = 0; r < n; ++r) {
      double k0 = 0.0;
      double k1 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        k0 += 0.5 * p(r, j) * p(r, j);
        k1 += 0.5 * pp(r, j) * pp(r, j);
      }
      const double log_ratio = (lp_new[r] - k1) - (lp[r] - k0);
      const double u = uniform01(rng);
      ++result.proposals;
      if (!std::isfinite(log_ratio) || !finite_row(xp, r) || !finite_row(grad_new, r)) {
        ++result.nonfinite;
        continue;
      }
      if (std::log(u) < log_ratio) {
        ++result.accepted;
        lp[r] = lp_new[r];
        for (std::size_t j = 0; j < d; ++j) {
          x(r, j) = xp(r, j);
          grad(r, j) = grad_new(r, j);
        }
      }
    }
    if (t >= config.burn_in) {
      const std::size_t base = (t - config.burn_in) * n;
      for (std::size_t r = 0; r < n; ++r) {
        std::copy(x.row_span(r).begin(), x.row_span(r).end(),
                  result.samples.row_span(base + r).begin());
      }
    }
  }
  return result;
}

Tensor hmc_chain(const EnergyTarget& target, std::span<const double> init, const HmcConfig& config,
                 std::size_t n_samples, Rng& rng) {
  return hmc_run(target, Tensor::row({init.begin(), init.end()}), config, n_samples, rng).samples;
}

}  // namespace misa::mcmc
