#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "misa/autodiff/adam.hpp"
#include "misa/autodiff/graph.hpp"
#include "misa/autodiff/mlp.hpp"
#include "misa/autodiff/ops.hpp"
#include "misa/common/error.hpp"

using namespace misa;
using namespace misa::ad;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -2.0,
                     double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t = Tensor::matrix(r, c);
  for (double& v : t.data()) v = u(rng);
  return t;
}

using Builder = std::function<Node(Graph&, const std::vector<Node>&)>;

// Largest |analytic - central difference| / max(1, |fd|) over every input entry
// of sum(W * f(inputs)) for a random weight tensor W.
double fd_error(const Builder& build, std::vector<Tensor> inputs, std::mt19937_64& rng,
                double h = 1e-5) {
  Graph g;
  std::vector<Node> leaves;
  for (std::size_t i = 0; i < inputs.size(); ++i) leaves.push_back(g.leaf("x" + std::to_string(i)));
  Node y = build(g, leaves);
  TensorMap in;
  for (std::size_t i = 0; i < inputs.size(); ++i) in["x" + std::to_string(i)] = inputs[i];
  g.forward(in);
  const Tensor& yv = g.value(y);
  Node w = g.constant(random_matrix(yv.rows(), yv.cols(), rng, 0.5, 1.5));
  Node out = g.sum(g.mul(y, w));
  g.mark_output("out", out);

  g.forward(in);
  TensorMap grads = g.backward(out);
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string name = "x" + std::to_string(i);
    for (std::size_t j = 0; j < inputs[i].size(); ++j) {
      TensorMap plus = in;
      TensorMap minus = in;
      plus[name][j] += h;
      minus[name][j] -= h;
      const double fd =
          (g.forward(plus).at("out").item() - g.forward(minus).at("out").item()) / (2.0 * h);
      const double an = grads.at(name)[j];
      worst = std::max(worst, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  return worst;
}

double elu_ref(double x) { return x >= 0.0 ? x : std::exp(x) - 1.0; }

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("forward of small graphs") {
  Graph g;
  Node x = g.leaf("x");
  g.mark_output("id", x);
  g.mark_output("sq", g.mul(x, x));
  auto out = g.forward({{"x", Tensor::row({1, 2, 3})}});
  CHECK(out["id"][0] == 1.0);
  CHECK(out["id"][2] == 3.0);
  CHECK(out["sq"][1] == 4.0);
}

TEST_CASE("analytic derivatives") {
  Graph g;
  Node x = g.leaf("x");
  Node y = g.square(x);
  g.forward({{"x", Tensor::scalar(3.0)}});
  CHECK(g.backward(y).at("x").item() == doctest::Approx(6.0));

  Graph h;
  Node v = h.leaf("v");
  Node lme = log_mean_exp(h, v, Axis::All);
  h.forward({{"v", Tensor::row({0.0, 0.0})}});
  auto grad = h.backward(lme).at("v");
  CHECK(grad[0] == doctest::Approx(0.5));
  CHECK(grad[1] == doctest::Approx(0.5));
}

TEST_CASE("log_sum_exp stays finite for large inputs") {
  Graph g;
  Node v = g.leaf("v");
  g.mark_output("l", log_sum_exp(g, v, Axis::All));
  auto out = g.forward({{"v", Tensor::row({1e4, 1e4})}});
  CHECK(out["l"].item() == doctest::Approx(1e4 + std::log(2.0)));
}

TEST_CASE("every primitive matches central differences") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 4);
  const std::vector<std::pair<const char*, std::function<double()>>> cases = {
      {"add",
       [&] {
         const std::size_t r = dim(rng), c = dim(rng);
         return fd_error([](Graph& g, auto& x) { return g.add(x[0], x[1]); },
                         {random_matrix(r, c, rng), random_matrix(r, c, rng)}, rng);
       }},
      {"mul",
       [&] {
         const std::size_t r = dim(rng), c = dim(rng);
         return fd_error([](Graph& g, auto& x) { return g.mul(x[0], x[1]); },
                         {random_matrix(r, c, rng), random_matrix(r, c, rng)}, rng);
       }},
      {"matmul",
       [&] {
         const std::size_t r = dim(rng), k = dim(rng), c = dim(rng);
         return fd_error([](Graph& g, auto& x) { return g.matmul(x[0], x[1]); },
                         {random_matrix(r, k, rng), random_matrix(k, c, rng)}, rng);
       }},
      {"exp",
       [&] {
         return fd_error([](Graph& g, auto& x) { return g.exp(x[0]); },
                         {random_matrix(dim(rng), dim(rng), rng)}, rng);
       }},
      {"log",
       [&] {
         return fd_error([](Graph& g, auto& x) { return g.log(x[0]); },
                         {random_matrix(dim(rng), dim(rng), rng, 0.2, 3.0)}, rng);
       }},
      {"tanh",
       [&] {
         return fd_error([](Graph& g, auto& x) { return g.tanh(x[0]); },
                         {random_matrix(dim(rng), dim(rng), rng)}, rng);
       }},
      {"elu",
       [&] {
         return fd_error([](Graph& g, auto& x) { return g.elu(x[0]); },
                         {random_matrix(dim(rng), dim(rng), rng)}, rng);
       }},
      {"relu",
       [&] {
         return fd_error([](Graph& g, auto& x) { return g.relu(x[0]); },
                         {random_matrix(dim(rng), dim(rng), rng)}, rng);
       }},
      {"softplus",
       [&] {
         return fd_error([](Graph& g, auto& x) { return g.softplus(x[0]); },
                         {random_matrix(dim(rng), dim(rng), rng, -5.0, 5.0)}, rng);
       }},
      {"square",
       [&] {
         return fd_error([](Graph& g, auto& x) { return g.square(x[0]); },
                         {random_matrix(dim(rng), dim(rng), rng)}, rng);
       }},
      {"clamp",
       [&] {
         return fd_error([](Graph& g, auto& x) { return g.clamp(x[0], -1.0, 1.0); },
                         {random_matrix(dim(rng), dim(rng), rng)}, rng);
       }},
      {"sum",
       [&] {
         Tensor x = random_matrix(dim(rng), dim(rng), rng);
         return std::max({fd_error([](Graph& g, auto& v) { return g.sum(v[0], Axis::All); }, {x}, rng),
                          fd_error([](Graph& g, auto& v) { return g.sum(v[0], Axis::Rows); }, {x}, rng),
                          fd_error([](Graph& g, auto& v) { return g.sum(v[0], Axis::Cols); }, {x}, rng)});
       }},
      {"mean",
       [&] {
         Tensor x = random_matrix(dim(rng), dim(rng), rng);
         return std::max({fd_error([](Graph& g, auto& v) { return g.mean(v[0], Axis::All); }, {x}, rng),
                          fd_error([](Graph& g, auto& v) { return g.mean(v[0], Axis::Rows); }, {x}, rng),
                          fd_error([](Graph& g, auto& v) { return g.mean(v[0], Axis::Cols); }, {x}, rng)});
       }},
      {"max",
       [&] {
         Tensor x = random_matrix(dim(rng), dim(rng), rng);
         return std::max({fd_error([](Graph& g, auto& v) { return g.max(v[0], Axis::All); }, {x}, rng),
                          fd_error([](Graph& g, auto& v) { return g.max(v[0], Axis::Rows); }, {x}, rng),
                          fd_error([](Graph& g, auto& v) { return g.max(v[0], Axis::Cols); }, {x}, rng)});
       }},
      {"broadcast",
       [&] {
         const std::size_t r = dim(rng), c = dim(rng);
         Tensor like = random_matrix(r, c, rng);
         auto b = [](Graph& g, auto& v) { return g.broadcast_like(v[0], v[1]); };
         return std::max({fd_error(b, {random_matrix(1, 1, rng), like}, rng),
                          fd_error(b, {random_matrix(1, c, rng), like}, rng),
                          fd_error(b, {random_matrix(r, 1, rng), like}, rng)});
       }},
      {"slice_cols",
       [&] {
         return fd_error([](Graph& g, auto& x) { return g.slice_cols(x[0], 1, 2); },
                         {random_matrix(dim(rng), 4, rng)}, rng);
       }},
      {"concat_cols",
       [&] {
         const std::size_t r = dim(rng);
         return fd_error([](Graph& g, auto& x) { return g.concat_cols(x[0], x[1]); },
                         {random_matrix(r, dim(rng), rng), random_matrix(r, dim(rng), rng)}, rng);
       }},
      {"reshape",
       [&] {
         return fd_error([](Graph& g, auto& x) { return g.reshape(x[0], 3); },
                         {random_matrix(2 * dim(rng), 3 * 2, rng)}, rng);
       }},
      {"log_sum_exp",
       [&] {
         return fd_error([](Graph& g, auto& x) { return log_sum_exp(g, x[0], Axis::Cols); },
                         {random_matrix(dim(rng), dim(rng), rng)}, rng);
       }},
      {"min_columns",
       [&] {
         const std::size_t r = dim(rng);
         return fd_error([](Graph& g, auto& x) { return min_columns(g, x[0], x[1]); },
                         {random_matrix(r, 1, rng), random_matrix(r, 1, rng)}, rng);
       }},
  };
  for (const auto& [name, trial] : cases) {
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) worst = std::max(worst, trial());
    INFO(name);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("mlp forward") {
  MlpParams zero = MlpParams::init(3, {5}, 2, Activation::Elu, 1).zeros_like();
  Tensor y = mlp_apply(zero, Tensor::matrix(4, 3, 0.7));
  for (double v : y.data()) CHECK(v == 0.0);

  zero.layers.back().bias = Tensor::row({1.5, -2.0});
  y = mlp_apply(zero, Tensor::matrix(2, 3, 0.3));
  CHECK(y(1, 0) == 1.5);
  CHECK(y(1, 1) == -2.0);

  MlpParams identity = MlpParams::init(2, {}, 2, Activation::Elu, 0).zeros_like();
  identity.layers[0].weight(0, 0) = 1.0;
  identity.layers[0].weight(1, 1) = 1.0;
  Tensor x = Tensor::matrix(1, 2);
  x(0, 0) = 0.25;
  x(0, 1) = -4.0;
  y = mlp_apply(identity, x);
  CHECK(y(0, 0) == 0.25);
  CHECK(y(0, 1) == -4.0);
}

TEST_CASE("mlp forward matches a plain re-implementation") {
  MlpParams p = MlpParams::init(3, {8, 6}, 2, Activation::Elu, 42);
  std::mt19937_64 rng(3);
  Tensor x = random_matrix(3, 3, rng);
  Tensor y = mlp_apply(p, x);

  Graph g;
  MlpNodes nodes = mlp_leaves(g, "net", p);
  Node xin = g.leaf("x");
  g.mark_output("y", mlp_forward(g, nodes, xin));
  TensorMap in{{"x", x}};
  ad::bind(in, "net", p);
  Tensor yg = g.forward(in).at("y");

  for (std::size_t r = 0; r < 3; ++r) {
    std::vector<double> h(x.row_span(r).begin(), x.row_span(r).end());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      const Layer& layer = p.layers[l];
      std::vector<double> next(layer.weight.cols(), 0.0);
      for (std::size_t o = 0; o < next.size(); ++o) {
        double acc = layer.bias(0, o);
        for (std::size_t i = 0; i < h.size(); ++i) acc += h[i] * layer.weight(i, o);
        next[o] = l + 1 < p.layers.size() ? elu_ref(acc) : acc;
      }
      h = next;
    }
    for (std::size_t o = 0; o < 2; ++o) {
      CHECK(y(r, o) == doctest::Approx(h[o]).epsilon(1e-12));
      CHECK(yg(r, o) == doctest::Approx(h[o]).epsilon(1e-12));
    }
  }
}

TEST_CASE("mlp parameter gradient matches central differences") {
  for (Activation act : {Activation::Elu, Activation::Tanh}) {
    MlpParams p = MlpParams::init(3, {7, 5}, 1, act, 11);
    std::mt19937_64 rng(5);
    Tensor x = random_matrix(6, 3, rng);

    Graph g;
    MlpNodes nodes = mlp_leaves(g, "f", p);
    Node xin = g.leaf("x");
    Node out = g.mean(mlp_forward(g, nodes, xin));
    g.mark_output("out", out);
    TensorMap in{{"x", x}};
    ad::bind(in, "f", p);
    g.forward(in);
    MlpParams grad = gradients_for(g.backward(out), "f", p);

    const double h = 1e-5;
    double worst = 0.0;
    auto gt = grad.tensors();
    auto pt = p.tensors();
    for (std::size_t t = 0; t < pt.size(); ++t) {
      for (std::size_t j = 0; j < pt[t]->size(); ++j) {
        const double keep = (*pt[t])[j];
        (*pt[t])[j] = keep + h;
        double fp = 0.0, fm = 0.0;
        const Tensor yp = mlp_apply(p, x);
        for (double v : yp.data()) fp += v;
        (*pt[t])[j] = keep - h;
        const Tensor ym = mlp_apply(p, x);
        for (double v : ym.data()) fm += v;
        (*pt[t])[j] = keep;
        const double fd = (fp - fm) / (2.0 * h * x.rows());
        const double an = (*gt[t])[j];
        worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-3}));
      }
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("shape errors name the node") {
  Graph g;
  Node a = g.leaf("a");
  Node b = g.leaf("b");
  Node c = g.matmul(a, b);
  g.mark_output("c", c);
  try {
    g.forward({{"a", Tensor::matrix(2, 3)}, {"b", Tensor::matrix(2, 3)}});
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(e.node() == static_cast<std::int64_t>(c.index));
  }
  CHECK_THROWS_AS(g.forward({{"a", Tensor::matrix(2, 3)}}), ShapeError);
}

TEST_CASE("graph is reusable across batch sizes") {
  Graph g;
  Node x = g.leaf("x");
  Node m = g.mean(g.square(x));
  g.mark_output("m", m);
  CHECK(g.forward({{"x", Tensor::matrix(3, 2, 2.0)}}).at("m").item() == 4.0);
  CHECK(g.forward({{"x", Tensor::matrix(7, 2, 1.0)}}).at("m").item() == 1.0);
  auto grad = g.backward(m).at("x");
  CHECK(grad.rows() == 7);
  CHECK(grad(6, 1) == doctest::Approx(2.0 / 14.0));
}

TEST_CASE("adam step follows the bias-corrected rule") {
  MlpParams p = MlpParams::init(1, {}, 1, Activation::Elu, 0).zeros_like();
  p.layers[0].weight(0, 0) = 1.0;
  MlpParams grad = p.zeros_like();
  AdamState state = AdamState::for_params(p);
  AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};

  double w = 1.0, m = 0.0, v = 0.0;
  const double grads[] = {0.5, -2.0, 1.0};
  for (int t = 1; t <= 3; ++t) {
    const double gr = grads[t - 1];
    grad.layers[0].weight(0, 0) = gr;
    adam_step(p, grad, state, cfg);
    m = 0.9 * m + 0.1 * gr;
    v = 0.999 * v + 0.001 * gr * gr;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    w -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(p.layers[0].weight(0, 0) == doctest::Approx(w).epsilon(1e-14));
  }
  CHECK(p.layers[0].bias(0, 0) == 0.0);

  double scalar = 1.0;
  ScalarAdam sa;
  sa.step(scalar, 0.5, cfg);
  CHECK(scalar == doctest::Approx(0.9));
}

TEST_CASE("parameter block round trip is bit exact") {
  MlpParams p = MlpParams::init(4, {9, 3}, 2, Activation::Tanh, 99);
  std::stringstream buf;
  write_mlp(buf, p);
  MlpParams q = read_mlp(buf);
  CHECK(q.activation == Activation::Tanh);
  CHECK(q.seed == 99);
  auto a = p.tensors();
  auto b = q.tensors();
  REQUIRE(a.size() == b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    REQUIRE(a[t]->size() == b[t]->size());
    for (std::size_t j = 0; j < a[t]->size(); ++j) CHECK((*a[t])[j] == (*b[t])[j]);
  }

  std::stringstream again;
  write_mlp(again, p);
  std::string full = again.str();
  std::stringstream truncated(full.substr(0, full.size() - 5));
  CHECK_THROWS_AS(read_mlp(truncated), ParseError);
}

}  // TEST_SUITE
