#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "misa/common/error.hpp"
#include "misa/mcmc/hmc.hpp"
#include "misa/mcmc/improved_policy.hpp"

using namespace misa;
using namespace misa::mcmc;

namespace {

EnergyTarget diagonal_gaussian(std::vector<double> sigma) {
  return EnergyTarget::from_point(
      [sigma](std::span<const double> x) {
        double lp = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) lp -= 0.5 * x[i] * x[i] / (sigma[i] * sigma[i]);
        return lp;
      },
      [sigma](std::span<const double> x, std::span<double> g) {
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = -x[i] / (sigma[i] * sigma[i]);
      });
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double ks_to_normal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = normal_cdf(xs[i]);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) ++i;
    else ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

dist::GaussianPolicy constant_policy(double mean, double log_std, bool squash) {
  dist::PolicyConfig cfg;
  cfg.squash = squash;
  auto p = dist::GaussianPolicy::init(1, 1, {}, ad::Activation::Elu, cfg, 0);
  p.net() = p.net().zeros_like();
  p.net().layers[0].bias(0, 0) = mean;
  p.net().layers[0].bias(0, 1) = log_std;
  return p;
}

// Q(s, a) = -c (a - peak)^2.
ActionValueFn quadratic_q(double c, double peak) {
  return {[c, peak](const Tensor&, const Tensor& a, std::vector<double>& q, Tensor& dq) {
    q.resize(a.rows());
    dq.reshape_matrix(a.rows(), 1);
    for (std::size_t r = 0; r < a.rows(); ++r) {
      q[r] = -c * (a(r, 0) - peak) * (a(r, 0) - peak);
      dq(r, 0) = -2.0 * c * (a(r, 0) - peak);
    }
  }};
}

// Mean and variance of N(a; mu, sigma^2) e^{-c (a - peak)^2} by quadrature.
std::pair<double, double> tilted_moments(double mu, double sigma, double c, double peak) {
  const std::size_t n = 40001;
  const double lo = mu - 12.0 * sigma, hi = mu + 12.0 * sigma;
  const double h = (hi - lo) / (n - 1);
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = lo + h * i;
    const double w = std::exp(-0.5 * (a - mu) * (a - mu) / (sigma * sigma) - c * (a - peak) * (a - peak));
    z += w;
    m1 += w * a;
    m2 += w * a * a;
  }
  const double mean = m1 / z;
  return {mean, m2 / z - mean * mean};
}

std::pair<double, double> moments(const Tensor& t) {
  double m = 0.0, v = 0.0;
  for (double x : t.data()) m += x;
  m /= static_cast<double>(t.size());
  for (double x : t.data()) v += (x - m) * (x - m);
  return {m, v / static_cast<double>(t.size())};
}

}  // namespace

TEST_SUITE("mcmc") {

TEST_CASE("standard normal moments") {
  Rng rng = make_stream(0, 0, 5);
  Tensor xs = hmc_chain(diagonal_gaussian({1.0}), std::vector<double>{0.5}, HmcConfig{}, 10000, rng);
  auto [m, v] = moments(xs);
  CHECK(std::abs(m) < 0.05);
  CHECK(v >= 0.9);
  CHECK(v <= 1.1);
}

TEST_CASE("empirical cdf converges") {
  Rng rng = make_stream(1, 0, 5);
  HmcConfig cfg;
  cfg.chains = 10;
  auto run = hmc_run(diagonal_gaussian({1.0}), Tensor::matrix(10, 1, 0.0), cfg, 5000, rng);
  std::vector<double> xs(run.samples.data().begin(), run.samples.data().end());
  CHECK(xs.size() == 50000);
  CHECK(ks_to_normal(xs) < 0.03);
  CHECK(run.acceptance_rate() >= 0.5);
  CHECK(run.acceptance_rate() <= 1.0);
}

TEST_CASE("vanishing step keeps the initial state") {
  Rng rng = make_stream(2, 0, 5);
  HmcConfig cfg{0, 2, 1e-12, 1};
  auto run = hmc_run(diagonal_gaussian({1.0, 2.0}), Tensor::row({0.3, -1.2}), cfg, 20, rng);
  CHECK(run.accepted == run.proposals);
  for (std::size_t t = 0; t < 20; ++t) {
    CHECK(run.samples(t, 0) == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(run.samples(t, 1) == doctest::Approx(-1.2).epsilon(1e-9));
  }
}

TEST_CASE("anisotropic gaussian") {
  Rng rng = make_stream(3, 0, 5);
  HmcConfig cfg{100, 2, 1.0, 40};
  auto run = hmc_run(diagonal_gaussian({1.0, 3.0}), Tensor::matrix(40, 2, 0.0), cfg, 500, rng);
  double v0 = 0.0, v1 = 0.0;
  const std::size_t n = run.samples.rows();
  for (std::size_t r = 0; r < n; ++r) {
    v0 += run.samples(r, 0) * run.samples(r, 0);
    v1 += run.samples(r, 1) * run.samples(r, 1);
  }
  CHECK(v0 / n == doctest::Approx(1.0).epsilon(0.15));
  CHECK(v1 / n == doctest::Approx(9.0).epsilon(0.15));
}

TEST_CASE("configuration and start checks") {
  CHECK_THROWS_AS((HmcConfig{5, 0, 1.0, 1}.validate()), ConfigError);
  CHECK_THROWS_AS((HmcConfig{5, 2, 0.0, 1}.validate()), ConfigError);
  Rng rng = make_stream(0, 0, 0);
  auto bad = EnergyTarget::from_point([](std::span<const double>) { return -INFINITY; },
                                      [](std::span<const double>, std::span<double> g) { g[0] = 0.0; });
  CHECK_THROWS_AS(hmc_chain(bad, std::vector<double>{0.0}, HmcConfig{}, 5, rng), NumericalError);
}

TEST_CASE("constant Q leaves the policy distribution") {
  auto pi = constant_policy(0.2, std::log(0.6), false);
  ActionValueFn flat{[](const Tensor&, const Tensor& a, std::vector<double>& q, Tensor& dq) {
    q.assign(a.rows(), 3.0);
    dq.reshape_matrix(a.rows(), a.cols());
    dq.fill(0.0);
  }};
  Rng rng = make_stream(4, 0, 5);
  HmcConfig cfg{5, 2, 1.0, 100};
  auto s = sample_improved_policy(pi, flat, Tensor::matrix(1, 1, 0.0), cfg, 50, rng);
  auto ref = dist::rsample_batch(pi, Tensor::matrix(5000, 1, 0.0), rng);
  std::vector<double> a(s.action.data().begin(), s.action.data().end());
  std::vector<double> b(ref.action.data().begin(), ref.action.data().end());
  CHECK(a.size() == 5000);
  CHECK(ks_two_sample(a, b) < 0.05);
}

TEST_CASE("tilted policy moments follow the quadrature oracle") {
  const double mu = 0.0, sigma = 1.0;
  auto pi = constant_policy(mu, std::log(sigma), false);
  Rng rng = make_stream(5, 0, 5);
  HmcConfig cfg{5, 2, 1.0, 200};

  auto [qm, qv] = tilted_moments(mu, sigma, 0.5, 1.5);
  auto s = sample_improved_policy(pi, quadratic_q(0.5, 1.5), Tensor::matrix(1, 1, 0.0), cfg, 100, rng);
  auto [m, v] = moments(s.action);
  CHECK(m > mu + 0.3);
  CHECK(m == doctest::Approx(qm).epsilon(0.05));

  auto [nm, nv] = tilted_moments(mu, sigma, 1.0, mu);
  auto narrow = sample_improved_policy(pi, quadratic_q(1.0, mu), Tensor::matrix(1, 1, 0.0), cfg, 100, rng);
  auto [m2, v2] = moments(narrow.action);
  CHECK(v2 < sigma * sigma);
  CHECK(v2 == doctest::Approx(nv).epsilon(0.1));
}

TEST_CASE("row layout of improved samples") {
  auto pi = constant_policy(0.0, 0.0, true);
  Rng rng = make_stream(6, 0, 5);
  HmcConfig cfg{2, 2, 0.5, 4};
  Tensor states = Tensor::column({-1.0, 0.0, 1.0});
  auto s = sample_improved_policy(pi, quadratic_q(0.0, 0.0), states, cfg, 2, rng);
  CHECK(s.action.rows() == 24);
  CHECK(s.chains == 4);
  CHECK(s.state_of(0, 3) == 0);
  CHECK(s.state_of(5, 3) == 1);
  CHECK(s.state_of(12 + 11, 3) == 2);
  for (double a : s.action.data()) CHECK(std::abs(a) < 1.0);
  for (std::size_t r = 0; r < 24; ++r) {
    CHECK(s.action(r, 0) == doctest::Approx(std::tanh(s.pre_squash(r, 0))));
  }
}

TEST_CASE("self-normalized expectations") {
  Rng rng = make_stream(7, 0, 0);
  auto pi = constant_policy(0.3, std::log(0.8), false);
  auto identity = [](std::span<const double> a) { return std::vector<double>{a[0]}; };
  const std::vector<double> s = {0.0};

  Rng copy = rng;
  const double snis = snis_expectation(pi, quadratic_q(0.0, 0.0), s, identity, 64, rng)[0];
  auto ref = dist::rsample_batch(pi, Tensor::matrix(64, 1, 0.0), copy);
  double mean = 0.0;
  for (double a : ref.action.data()) mean += a / 64.0;
  CHECK(snis == doctest::Approx(mean).epsilon(1e-12));

  auto point = constant_policy(0.4, -30.0, false);
  CHECK(snis_expectation(point, quadratic_q(1.0, 2.0), s, identity, 10, rng)[0] ==
        doctest::Approx(0.4).epsilon(1e-9));

  const double mu = 1.0, sigma = 0.8;
  auto wide = constant_policy(mu, std::log(sigma), false);
  auto [qm, qv] = tilted_moments(mu, sigma, 0.5, 2.5);
  const double est = snis_expectation(wide, quadratic_q(0.5, 2.5), s, identity, 100000, rng)[0];
  CHECK(est == doctest::Approx(qm).epsilon(0.02));

  Tensor logits = Tensor::row({1000.0, 1000.0});
  Tensor w = softmax_rows(logits);
  CHECK(w[0] == doctest::Approx(0.5));
}

}  // TEST_SUITE
