#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "misa/common/error.hpp"
#include "misa/data/dataset.hpp"
#include "misa/data/envs.hpp"
#include "misa/data/evaluate.hpp"
#include "misa/data/generate.hpp"

using namespace misa;
using namespace misa::data;

namespace {

bool same_tensor(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

// Bang-bang controller toward the goal, rolled out by hand.
double line_reach_optimum(double s) {
  double ret = 0.0;
  for (int t = 0; t < 50; ++t) {
    const double a = std::clamp((LineReach::kGoal - s) / LineReach::kGain, -1.0, 1.0);
    s = std::clamp(s + LineReach::kGain * a, -1.0, 1.0);
    ret -= std::abs(s - LineReach::kGoal);
  }
  return ret;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("line reach dynamics") {
  LineReach env;
  Rng rng = make_stream(0, 0, 0);
  auto s = env.reset(rng);
  REQUIRE(s.size() == 1);
  CHECK(std::abs(s[0]) <= 1.0);
  const double before = s[0];
  auto r = env.step(std::vector<double>{5.0});  // clipped to 1
  CHECK(r.next_state[0] == doctest::Approx(std::min(1.0, before + 0.1)));
  CHECK(r.reward == doctest::Approx(-std::abs(r.next_state[0] - 0.5)));
}

TEST_CASE("grid discrete action bins") {
  CHECK(GridDiscrete::action_index(-0.9) == 0);
  CHECK(GridDiscrete::action_index(-0.1) == 1);
  CHECK(GridDiscrete::action_index(0.1) == 2);
  CHECK(GridDiscrete::action_index(0.9) == 3);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(GridDiscrete::action_index(GridDiscrete::action_value(i)) == i);
  }
  GridDiscrete env;
  Rng rng = make_stream(0, 0, 0);
  auto s = env.reset(rng);
  CHECK(GridDiscrete::state_index(s) == 0);
  auto t = env.step(std::vector<double>{GridDiscrete::action_value(3)});
  CHECK(t.next_state[0] == doctest::Approx(1.0 / 3.0));
  CHECK(t.reward == 0.0);

  auto u = TabularSoftmax::uniform(16, 4);
  for (double p : u.probabilities(5)) CHECK(p == doctest::Approx(0.25));
  CHECK(u.log_prob(2, 1) == doctest::Approx(-std::log(4.0)));
}

TEST_CASE("chain maze reaches the goal") {
  ChainMaze env;
  Rng rng = make_stream(0, 0, 0);
  const double ret = run_episode(env, expert_policy(env), rng);
  CHECK(ret == 1.0);
}

TEST_CASE("env registry") {
  for (const auto& name : env_names()) CHECK(make_env(name)->name() == name);
  CHECK_THROWS_AS(make_env("mujoco"), ConfigError);
}

TEST_CASE("expert tier on line reach is near the analytic optimum") {
  LineReach env;
  auto ds = generate_dataset(env, Tier::Expert, 50 * 400, 0);
  double total = 0.0;
  for (double r : ds.rewards().data()) total += r;
  const double mean_return = total / 400.0;

  // E over s0 ~ U[-1, 1] by the midpoint rule.
  double optimum = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) optimum += line_reach_optimum(-1.0 + (i + 0.5) * 2.0 / n) / n;
  CHECK(mean_return == doctest::Approx(optimum).epsilon(0.05));
}

TEST_CASE("tier construction") {
  LineReach env;
  auto me = generate_dataset(env, Tier::MediumExpert, 1000, 3);
  CHECK(me.size() == 1000);
  const auto& seg = me.provenance().at("segments");
  CHECK(seg[0].at("tier") == "medium");
  CHECK(seg[0].at("end") == 500);
  CHECK(seg[1].at("tier") == "expert");

  auto gap = generate_dataset(env, Tier::OodGap, 5000, 1);
  double widest = 0.0;
  for (double a : gap.actions().data()) widest = std::max(widest, std::abs(a));
  CHECK(widest <= 0.3);
  CHECK(widest > 0.25);

  CHECK(parse_tier("medium-replay") == Tier::MediumReplay);
  CHECK_THROWS_AS(parse_tier("hard"), ConfigError);
  CHECK_THROWS_AS(generate_dataset(env, Tier::Random, 0, 0), ConfigError);
}

TEST_CASE("generation is deterministic") {
  PointMass2D env;
  auto a = generate_dataset(env, Tier::MediumReplay, 700, 9);
  auto b = generate_dataset(env, Tier::MediumReplay, 700, 9);
  CHECK(same_tensor(a.states(), b.states()));
  CHECK(same_tensor(a.actions(), b.actions()));
  CHECK(a.provenance() == b.provenance());
}

TEST_CASE("dataset file round trip") {
  ChainMaze env;
  auto ds = generate_dataset(env, Tier::Medium, 777, 2);
  std::stringstream buf;
  write_dataset(buf, ds);
  auto back = read_dataset(buf);
  CHECK(back.size() == 777);
  CHECK(same_tensor(ds.states(), back.states()));
  CHECK(same_tensor(ds.actions(), back.actions()));
  CHECK(same_tensor(ds.rewards(), back.rewards()));
  CHECK(same_tensor(ds.next_states(), back.next_states()));
  CHECK(same_tensor(ds.terminals(), back.terminals()));
  CHECK(back.provenance() == ds.provenance());

  std::stringstream again;
  write_dataset(again, back);
  std::stringstream first;
  write_dataset(first, ds);
  CHECK(again.str() == first.str());
}

TEST_CASE("malformed dataset files") {
  LineReach env;
  auto ds = generate_dataset(env, Tier::Random, 10, 0);
  std::stringstream buf;
  write_dataset(buf, ds);
  const std::string full = buf.str();
  std::stringstream cut(full.substr(0, full.size() - 6));
  try {
    read_dataset(cut);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    // 10 records of (1 + 1 + 1 + 1 + 1) floats.
    CHECK(msg.find("200") != std::string::npos);
    CHECK(msg.find("194") != std::string::npos);
  }

  std::stringstream empty(
      R"({"version":1,"state_dim":1,"action_dim":1,"count":0,"provenance":{}})"
      "\n");
  CHECK_THROWS_AS(read_dataset(empty), ParseError);
  std::stringstream junk("not json\n");
  CHECK_THROWS_AS(read_dataset(junk), ParseError);
}

TEST_CASE("batch sampling is reproducible") {
  LineReach env;
  auto ds = generate_dataset(env, Tier::Random, 500, 0);
  Rng a = make_stream(4, 17, 1);
  Rng b = make_stream(4, 17, 1);
  CHECK(ds.sample_indices(64, a) == ds.sample_indices(64, b));
  Rng c = make_stream(4, 18, 1);
  CHECK(ds.sample_indices(64, a) != ds.sample_indices(64, c));

  std::vector<std::size_t> idx = {3, 3, 7};
  auto batch = ds.gather(idx);
  CHECK(batch.size() == 3);
  CHECK(batch.actions(2, 0) == ds.actions()(7, 0));
}

TEST_CASE("normalized scores") {
  // 5000 episodes keep the standard error near 1 point on line-reach.
  CHECK(kDefaultEvalEpisodes == 10);
  for (const auto& name : {"line-reach", "chain-maze"}) {
    auto env = make_env(name);
    auto norm = ScoreNormalizer::compute(*env);
    auto random = evaluate_policy(*env, uniform_policy(env->action_dim()), 5000, 77, norm);
    auto expert = evaluate_policy(*env, expert_policy(*env), 5000, 77, norm);
    CHECK(std::abs(random.normalized_score) < 5.0);
    CHECK(std::abs(expert.normalized_score - 100.0) < 5.0);
    CHECK(random.returns.size() == 5000);
  }
}

TEST_CASE("support coverage") {
  LineReach env;
  auto ds = generate_dataset(env, Tier::OodGap, 4000, 5);
  CHECK(support_coverage(ds, ds.states(), ds.actions(), 20) == 1.0);

  Tensor outside = Tensor::matrix(ds.size(), 1, 0.95);
  CHECK(support_coverage(ds, ds.states(), outside, 20) == 0.0);

  ActionEnvelope env_box(ds, 20);
  auto bounds = env_box.bounds(ds.transition(0).s);
  REQUIRE(bounds.has_value());
  CHECK(bounds->first[0] >= -0.3);
  CHECK(bounds->second[0] <= 0.3);
}

}  // TEST_SUITE
