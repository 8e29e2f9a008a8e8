#include "misa/data/generate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "misa/common/error.hpp"

namespace misa::data {
namespace {

constexpr std::uint64_t kCalibrationSeed = 977;

// Largest float32 value not above x (x > 0).
double f32_floor(double x) {
  float f = static_cast<float>(x);
  if (static_cast<double>(f) > x) f = std::nextafter(f, 0.0f);
  return static_cast<double>(f);
}

std::vector<double> noisy(std::vector<double> a, double sigma, double limit, Rng& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  for (double& v : a) v = std::clamp(v + normal(rng), -limit, limit);
  return a;
}

// Follow the noisy expert with probability p_of(episode), else act uniformly.
struct MixturePolicy {
  const ToyEnv* env;
  double noise;

  std::vector<double> operator()(std::span<const double> s, double p, Rng& rng) const {
    const double u = uniform01(rng);
    std::vector<double> uniform(env->action_dim());
    fill_uniform(rng, uniform, -1.0, 1.0);
    std::vector<double> expert = noisy(env->expert_action(s), noise, 1.0, rng);
    return u < p ? expert : uniform;
  }
};

struct Rollout {
  std::vector<Transition> transitions;
  std::size_t episodes = 0;  // completed episodes only
  double return_sum = 0.0;

  double mean_return() const {
    return episodes == 0 ? 0.0 : return_sum / static_cast<double>(episodes);
  }
};

using StepPolicy =
    std::function<std::vector<double>(std::span<const double>, std::size_t episode, Rng&)>;

Rollout rollout(const ToyEnv& env, std::size_t n, const StepPolicy& policy, Rng& rng) {
  Rollout out;
  auto sim = env.clone();
  std::size_t episode = 0;
  while (out.transitions.size() < n) {
    std::vector<double> s = sim->reset(rng);
    double ret = 0.0;
    bool complete = false;
    for (std::size_t t = 0; t < env.horizon() && out.transitions.size() < n; ++t) {
      std::vector<double> a = policy(s, episode, rng);
      for (double& v : a) v = to_f32(std::clamp(v, -1.0, 1.0));
      StepResult step = sim->step(a);
      Transition tr;
      tr.s = s;
      for (double& v : tr.s) v = to_f32(v);
      tr.a = a;
      tr.r = to_f32(step.reward);
      tr.s_next = step.next_state;
      for (double& v : tr.s_next) v = to_f32(v);
      tr.terminal = step.terminal;
      out.transitions.push_back(std::move(tr));
      ret += step.reward;
      s = std::move(step.next_state);
      if (step.terminal || t + 1 == env.horizon()) {
        complete = true;
        break;
      }
    }
    if (complete) {
      ++out.episodes;
      out.return_sum += ret;
    }
    ++episode;
  }
  return out;
}

double mixture_score(const ToyEnv& env, double p, const GenerateOptions& options,
                     const ScoreNormalizer& norm) {
  auto sim = env.clone();
  const MixturePolicy mix{&env, options.medium_noise};
  double total = 0.0;
  for (std::size_t e = 0; e < options.calibration_episodes; ++e) {
    Rng rng = make_stream(kCalibrationSeed, e, 0);
    total += run_episode(
        *sim, [&](std::span<const double> s, Rng& r) { return mix(s, p, r); }, rng);
  }
  return norm.normalize(total / static_cast<double>(options.calibration_episodes));
}

}  // namespace

const char* tier_name(Tier tier) noexcept {
  switch (tier) {
    case Tier::Random: return "random";
    case Tier::Expert: return "expert";
    case Tier::Medium: return "medium";
    case Tier::MediumReplay: return "medium_replay";
    case Tier::MediumExpert: return "medium_expert";
    case Tier::OodGap: return "ood_gap";
  }
  return "?";
}

Tier parse_tier(const std::string& name) {
  std::string c;
  for (char ch : name) {
    c.push_back(ch == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  for (Tier t : {Tier::Random, Tier::Expert, Tier::Medium, Tier::MediumReplay, Tier::MediumExpert,
                 Tier::OodGap}) {
    if (c == tier_name(t)) return t;
  }
  throw ConfigError("unknown tier '" + name + "'");
}

double calibrate_medium_mix(const ToyEnv& env, const GenerateOptions& options) {
  const ScoreNormalizer norm = ScoreNormalizer::compute(env);
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mixture_score(env, mid, options, norm) < options.medium_target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

OfflineDataset generate_dataset(const ToyEnv& env, Tier tier, std::size_t n, std::uint64_t seed,
                                const GenerateOptions& options) {
  if (n == 0) throw ConfigError("generate_dataset needs n >= 1");
  nlohmann::json prov = {{"generator", "misa.generate_dataset"},
                         {"env", env.name()},
                         {"tier", tier_name(tier)},
                         {"seed", seed},
                         {"count", n}};
  const MixturePolicy mix{&env, options.medium_noise};
  const auto expert = [&](std::span<const double> s, std::size_t, Rng& rng) {
    return noisy(env.expert_action(s), options.expert_noise, 1.0, rng);
  };
  const auto random = [&](std::span<const double>, std::size_t, Rng& rng) {
    std::vector<double> a(env.action_dim());
    fill_uniform(rng, a, -1.0, 1.0);
    return a;
  };
  const auto summarize = [](const Rollout& r) {
    return nlohmann::json{{"episodes", r.episodes}, {"mean_return", r.mean_return()}};
  };

  Rng rng = make_stream(seed, 0, 100 + static_cast<std::uint64_t>(tier));
  Rollout data;
  switch (tier) {
    case Tier::Random:
      data = rollout(env, n, random, rng);
      prov["behavior"] = {{"kind", "uniform"}};
      break;
    case Tier::Expert:
      data = rollout(env, n, expert, rng);
      prov["behavior"] = {{"kind", "expert"}, {"noise", options.expert_noise}};
      break;
    case Tier::Medium: {
      const double p = calibrate_medium_mix(env, options);
      data = rollout(
          env, n, [&](std::span<const double> s, std::size_t, Rng& r) { return mix(s, p, r); },
          rng);
      prov["behavior"] = {{"kind", "mixture"}, {"p_expert", p}, {"noise", options.medium_noise}};
      break;
    }
    case Tier::MediumReplay: {
      const double p = calibrate_medium_mix(env, options);
      const double planned = std::ceil(static_cast<double>(n) / static_cast<double>(env.horizon()));
      const auto ramp = [&](std::size_t episode) {
        if (planned <= 1.0) return p;
        return p * std::min(1.0, static_cast<double>(episode) / (planned - 1.0));
      };
      data = rollout(
          env, n,
          [&](std::span<const double> s, std::size_t e, Rng& r) { return mix(s, ramp(e), r); },
          rng);
      prov["behavior"] = {{"kind", "mixture_ramp"},
                          {"p_expert_start", 0.0},
                          {"p_expert_end", p},
                          {"noise", options.medium_noise}};
      break;
    }
    case Tier::MediumExpert: {
      const std::size_t half = n / 2;
      const double p = calibrate_medium_mix(env, options);
      Rollout medium;
      if (half > 0) {
        medium = rollout(
            env, half,
            [&](std::span<const double> s, std::size_t, Rng& r) { return mix(s, p, r); }, rng);
      }
      Rng rng_expert = make_stream(seed, 1, 100 + static_cast<std::uint64_t>(tier));
      Rollout top = rollout(env, n - half, expert, rng_expert);
      data.transitions = std::move(medium.transitions);
      data.transitions.insert(data.transitions.end(), top.transitions.begin(),
                              top.transitions.end());
      data.episodes = medium.episodes + top.episodes;
      data.return_sum = medium.return_sum + top.return_sum;
      prov["behavior"] = {{"kind", "concatenation"}};
      prov["segments"] = nlohmann::json::array(
          {{{"tier", "medium"}, {"begin", 0}, {"end", half}, {"p_expert", p}, {"summary", summarize(medium)}},
           {{"tier", "expert"}, {"begin", half}, {"end", n}, {"summary", summarize(top)}}});
      break;
    }
    case Tier::OodGap: {
      if (!(options.ood_limit > 0.0 && options.ood_limit <= 1.0)) {
        throw ConfigError("ood_limit must lie in (0, 1]");
      }
      const double lim = f32_floor(options.ood_limit);
      data = rollout(
          env, n,
          [&](std::span<const double> s, std::size_t, Rng& r) {
            const double u = uniform01(r);
            std::vector<double> inner(env.action_dim());
            fill_uniform(r, inner, -lim, lim);
            std::vector<double> guided = noisy(env.expert_action(s), 0.1, lim, r);
            return u < 0.5 ? inner : guided;
          },
          rng);
      prov["behavior"] = {{"kind", "ood_gap"}, {"limit", lim}, {"noise", 0.1}};
      break;
    }
  }
  prov["summary"] = summarize(data);
  return OfflineDataset::from_transitions(data.transitions, std::move(prov));
}

}  // namespace misa::data
