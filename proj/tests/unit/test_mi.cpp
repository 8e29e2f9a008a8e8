#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "misa/autodiff/graph.hpp"
#include "misa/common/error.hpp"
#include "misa/mi/bounds.hpp"
#include "misa/mi/critic.hpp"
#include "misa/mi/estimator_training.hpp"

using namespace misa;
using namespace misa::mi;
using ad::Tensor;

namespace {

dist::GaussianPolicy conditional_policy(double rho) {
  dist::PolicyConfig cfg;
  cfg.squash = false;
  auto p = dist::GaussianPolicy::init(1, 1, {}, ad::Activation::Elu, cfg, 0);
  p.net() = p.net().zeros_like();
  p.net().layers[0].weight(0, 0) = rho;
  p.net().layers[0].bias(0, 1) = 0.5 * std::log(1.0 - rho * rho);
  return p;
}

Critic constant_critic(double c) {
  Critic t = Critic::init(1, 1, {4}, ad::Activation::Elu, 1, 0);
  for (auto& h : t.heads) h = h.zeros_like();
  t.offset = c;
  return t;
}

Tensor random_grid(std::size_t r, std::size_t c, std::uint64_t seed, double scale) {
  Rng rng = make_stream(seed, 0, 0);
  Tensor t = Tensor::matrix(r, c);
  fill_normal(rng, t.data());
  for (double& v : t.data()) v *= scale;
  return t;
}

}  // namespace

TEST_SUITE("mi") {

TEST_CASE("log mean exp") {
  CHECK(log_mean_exp(std::vector<double>{0, 0, 0}) == 0.0);
  CHECK(log_mean_exp(std::vector<double>{1000, 1000}) == doctest::Approx(1000.0));
  CHECK(log_mean_exp(std::vector<double>{0, std::log(3.0)}) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("bound names") {
  CHECK(parse_bound("misa_dv") == BoundKind::MisaDV);
  CHECK(parse_bound("MISA-f") == BoundKind::MisaF);
  CHECK(std::string(bound_name(BoundKind::Misa)) == "MISA");
  CHECK_THROWS_AS(parse_bound("nwj"), ConfigError);
}

TEST_CASE("BA term with the analytic conditional") {
  Rng rng = make_stream(1, 0, 0);
  GaussianJoint indep{0.0};
  auto batch = indep.sample(4096, rng);
  auto marg = Marginal::analytic(indep.marginal());
  // Policy equals the marginal: the two log terms cancel exactly.
  CHECK(estimate_ba(batch, conditional_policy(0.0), marg).value == doctest::Approx(0.0).epsilon(1e-12));

  GaussianJoint joint{0.5};
  auto big = joint.sample(100000, rng);
  const double ba = estimate_ba(big, conditional_policy(0.5), Marginal::analytic(joint.marginal())).value;
  CHECK(joint.analytic_mi() == doctest::Approx(0.1438410).epsilon(1e-6));
  CHECK(std::abs(ba - joint.analytic_mi()) < 0.01);
}

TEST_CASE("constant critics") {
  Rng rng = make_stream(2, 0, 0);
  GaussianJoint joint{0.5};
  auto batch = joint.sample(64, rng);
  auto pi = conditional_policy(0.3);
  auto marg = Marginal::analytic(joint.marginal());
  const double ba = estimate_ba(batch, pi, marg).value;

  Rng r1 = make_stream(3, 0, 0);
  CHECK(estimate_misa_f(batch, pi, constant_critic(1.0), 8, r1, marg).value ==
        doctest::Approx(ba).epsilon(1e-12));
  CHECK(estimate_misa_f(batch, pi, constant_critic(0.0), 8, r1, marg).value ==
        doctest::Approx(ba - std::exp(-1.0)).epsilon(1e-12));
  for (double c : {0.0, 2.5, -7.0}) {
    CHECK(estimate_misa(batch, pi, constant_critic(c), 8, r1, marg).value ==
          doctest::Approx(ba).epsilon(1e-12));
    CHECK(estimate_misa_dv(batch, pi, constant_critic(c), 8, r1, marg).value ==
          doctest::Approx(ba).epsilon(1e-12));
  }
}

TEST_CASE("shift invariance for fixed samples") {
  const Tensor t = random_grid(16, 10, 4, 1.5);
  std::vector<double> t_data(16);
  for (std::size_t i = 0; i < 16; ++i) t_data[i] = t(i, 0) + 0.3;
  BoundOptions opt;
  for (double c : {-5.0, 1.0, 3.0}) {
    Tensor shifted = t;
    for (double& v : shifted.data()) v += c;
    std::vector<double> d2 = t_data;
    for (double& v : d2) v += c;
    for (BoundKind k : {BoundKind::Misa, BoundKind::MisaDV}) {
      const double a = combine(k, 0.2, t_data, t, opt, MarginalMode::Omitted).value;
      const double b = combine(k, 0.2, d2, shifted, opt, MarginalMode::Omitted).value;
      CHECK(std::abs(a - b) < 1e-10);
    }
    const double fa = combine(BoundKind::MisaF, 0.2, t_data, t, opt, MarginalMode::Omitted).value;
    const double fb = combine(BoundKind::MisaF, 0.2, d2, shifted, opt, MarginalMode::Omitted).value;
    double mean_exp = 0.0;
    for (double v : t.data()) mean_exp += std::exp(v - 1.0);
    mean_exp /= static_cast<double>(t.size());
    CHECK(fb - fa == doctest::Approx(c - std::expm1(c) * mean_exp).epsilon(1e-8));
  }
}

TEST_CASE("theorem chain on fixed samples") {
  // For any T, MISA >= MISA-DV >= MISA-f by Jensen and log x <= x/e.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor t = random_grid(8, 12, seed, 2.0);
    const std::vector<double> d(8, 0.1);
    BoundOptions opt;
    const double m = combine(BoundKind::Misa, 0.0, d, t, opt, MarginalMode::Omitted).value;
    const double dv = combine(BoundKind::MisaDV, 0.0, d, t, opt, MarginalMode::Omitted).value;
    const double f = combine(BoundKind::MisaF, 0.0, d, t, opt, MarginalMode::Omitted).value;
    CHECK(m >= dv - 1e-12);
    CHECK(dv >= f - 1e-12);
  }
}

TEST_CASE("normalizer weights are the normalizer gradient") {
  const Tensor t = random_grid(5, 7, 9, 1.0);
  BoundOptions opt;
  for (BoundKind k : {BoundKind::Misa, BoundKind::MisaDV, BoundKind::MisaF}) {
    const Tensor w = normalizer_weights(k, t, opt);
    for (std::size_t i = 0; i < t.size(); ++i) {
      Tensor up = t, dn = t;
      up[i] += 1e-6;
      dn[i] -= 1e-6;
      const double fd = (normalizer_value(k, up, opt) - normalizer_value(k, dn, opt)) / 2e-6;
      CHECK(w[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("graph penalty matches the numeric normalizer") {
  const Tensor t = random_grid(6, 4, 11, 1.0);
  const Tensor d = random_grid(6, 1, 12, 1.0);
  for (BoundKind k : {BoundKind::Misa, BoundKind::MisaDV, BoundKind::MisaF}) {
    ad::Graph g;
    ad::Node ts = g.leaf("t");
    ad::Node td = g.leaf("d");
    g.mark_output("p", penalty(g, k, ts, td, 50.0));
    const double value = g.forward({{"t", t}, {"d", d}}).at("p").item();
    double mean_d = 0.0;
    for (double v : d.data()) mean_d += v;
    mean_d /= 6.0;
    CHECK(value == doctest::Approx(normalizer_value(k, t, {}) - mean_d).epsilon(1e-12));
  }
}

TEST_CASE("exp clamp only touches the f bound") {
  Tensor t = Tensor::matrix(1, 2, 0.0);
  t[0] = 80.0;
  bool clipped = false;
  const double f = normalizer_value(BoundKind::MisaF, t, BoundOptions{50.0}, &clipped);
  CHECK(clipped);
  CHECK(f == doctest::Approx(0.5 * (std::exp(49.0) + std::exp(-1.0))));
  clipped = false;
  normalizer_value(BoundKind::Misa, t, BoundOptions{50.0}, &clipped);
  CHECK_FALSE(clipped);
}

TEST_CASE("trained BA bound approaches the analytic value from below") {
  GaussianJoint joint{0.8};
  EstimatorConfig cfg;
  cfg.steps = 1500;
  cfg.batch_size = 128;
  cfg.marginal = Marginal::analytic(joint.marginal());
  cfg.seed = 3;
  auto res = train_estimator(joint.sampler(), BoundKind::BA, cfg);
  CHECK(res.final_estimate.value > 0.45);
  CHECK(res.final_estimate.value < joint.analytic_mi() + 0.02);
  CHECK(res.curve.size() == cfg.steps);

  std::ostringstream out;
  write_curve_header(out);
  write_curve_rows(out, res);
  std::size_t lines = 0;
  for (char c : out.str()) lines += c == '\n';
  CHECK(lines == cfg.steps + 1);
}

TEST_CASE("trained energy bounds on an independent joint stay near zero") {
  GaussianJoint joint{0.0};
  EstimatorConfig cfg;
  cfg.steps = 300;
  cfg.batch_size = 64;
  cfg.k = 16;
  cfg.marginal = Marginal::analytic(joint.marginal());
  for (BoundKind k : {BoundKind::MisaF, BoundKind::MisaDV, BoundKind::Misa}) {
    auto res = train_estimator(joint.sampler(), k, cfg);
    CHECK(std::abs(res.final_estimate.value) < 0.05);
  }
}

}  // TEST_SUITE
