#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "misa/agent/agent.hpp"
#include "misa/agent/checkpoint.hpp"
#include "misa/agent/gradcheck.hpp"
#include "misa/agent/variants.hpp"
#include "misa/common/error.hpp"
#include "misa/data/evaluate.hpp"
#include "misa/data/generate.hpp"
#include "misa/mi/estimator_training.hpp"

namespace misa::cli {
namespace fs = std::filesystem;

namespace {

std::set<std::string> train_keys() {
  std::set<std::string> keys;
  const Json defaults = agent::to_json(agent::TrainConfig{});
  for (const auto& [k, v] : defaults.items()) keys.insert(k);
  return keys;
}

// Env defaults, then the variant deltas, then every train field the user set.
agent::TrainConfig resolve_train(const ResolvedConfig& rc, const std::string& prefix,
                                 const std::string& variant, const std::string& env) {
  agent::TrainConfig defaults;
  defaults.tau = agent::default_tau(env);
  agent::TrainConfig base = agent::variant_matrix(variant, defaults);
  Json explicit_fields = explicit_subset(rc, prefix, train_keys());
  explicit_fields.erase("variant");
  agent::TrainConfig c = agent::train_config_from_json(explicit_fields, base);
  c.variant = variant;
  c.validate();
  return c;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::uint64_t> seed_list(const Json& values) {
  if (values.contains("seeds") && values["seeds"].is_array() && !values["seeds"].empty()) {
    try {
      return values["seeds"].get<std::vector<std::uint64_t>>();
    } catch (const Json::exception&) {
      throw UsageError("--seeds expects non-negative integers");
    }
  }
  return {values.at("seed").get<std::uint64_t>()};
}

data::OfflineDataset load_dataset_arg(const Json& values) {
  if (!values["dataset"].is_string()) throw UsageError("missing --dataset");
  const fs::path path = values["dataset"].get<std::string>();
  if (!fs::exists(path)) throw UsageError("dataset file '" + path.string() + "' does not exist");
  return data::load_dataset(path);
}

std::string env_of(const Json& values, const data::OfflineDataset& ds) {
  if (values["env"].is_string()) return values["env"].get<std::string>();
  const auto& prov = ds.provenance();
  if (prov.is_object() && prov.contains("env") && prov["env"].is_string()) {
    return prov["env"].get<std::string>();
  }
  throw UsageError("dataset has no env in its provenance; pass --env");
}

std::unique_ptr<data::ToyEnv> make_env_arg(const std::string& name) {
  try {
    return data::make_env(name);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

struct EvalRow {
  std::uint64_t step = 0;
  data::EvalResult eval;
  agent::OodReport ood;
};

struct TrainOptions {
  std::size_t eval_interval = 0;
  std::size_t eval_episodes = 10;
  std::size_t coverage_bins = 20;
  std::size_t ood_states = 1000;
  bool checkpoint = true;
};

EvalRow evaluate_agent(const agent::MisaAgent& agent, const data::ToyEnv& env,
                       const data::OfflineDataset& ds, const data::ScoreNormalizer& norm,
                       const TrainOptions& opt, std::uint64_t seed) {
  EvalRow row;
  row.step = agent.state().step;
  row.eval = data::evaluate_policy(env, agent.state().policy, opt.eval_episodes,
                                   seed * 1000003 + 17, norm);
  row.ood = agent::ood_report(agent.state(), ds, opt.coverage_bins, opt.ood_states, seed);
  return row;
}

// Runs one seed. When `dir` is set, writes metrics.csv, evals.csv, eval.json
// and a checkpoint there. NumericalError propagates after a state dump.
EvalRow train_one(const agent::TrainConfig& config, const data::OfflineDataset& ds,
                  const data::ToyEnv& env, const data::ScoreNormalizer& norm,
                  const TrainOptions& opt, const std::optional<fs::path>& dir) {
  agent::MisaAgent agent(config, ds.state_dim(), ds.action_dim());
  std::ofstream metrics;
  std::ofstream evals;
  if (dir) {
    fs::create_directories(*dir);
    metrics.open(*dir / "metrics.csv");
    agent::write_metrics_header(metrics);
    evals.open(*dir / "evals.csv");
    evals << "step,mean_return,normalized_score,support_coverage,q_data_mean,q_ood_mean\n";
  }
  const auto log_eval = [&](const EvalRow& r) {
    if (!dir) return;
    evals << r.step << ',' << fmt(r.eval.mean_return) << ',' << fmt(r.eval.normalized_score)
          << ',' << fmt(r.ood.support_coverage) << ',' << fmt(r.ood.q_data_mean) << ','
          << fmt(r.ood.q_ood_mean) << '\n';
  };
  try {
    for (std::size_t s = 0; s < config.steps; ++s) {
      const agent::StepMetrics m = agent.train_step(ds);
      if (dir) agent::write_metrics_row(metrics, m);
      if (opt.eval_interval > 0 && (s + 1) % opt.eval_interval == 0 && s + 1 < config.steps) {
        log_eval(evaluate_agent(agent, env, ds, norm, opt, config.seed));
      }
    }
  } catch (const NumericalError& e) {
    std::string where = "(not written)";
    if (dir) {
      metrics.flush();
      const fs::path dump = *dir / "nan_dump.ckpt";
      agent::save_checkpoint(dump, config, agent.state());
      where = dump.string();
    }
    throw NumericalError(std::string(e.what()) + "; state dump: " + where);
  }
  const EvalRow final = evaluate_agent(agent, env, ds, norm, opt, config.seed);
  log_eval(final);
  if (dir) {
    write_json(*dir / "eval.json", {{"mean_return", final.eval.mean_return},
                                    {"normalized_score", final.eval.normalized_score},
                                    {"support_coverage", final.ood.support_coverage},
                                    {"q_data_mean", final.ood.q_data_mean},
                                    {"q_ood_mean", final.ood.q_ood_mean},
                                    {"returns", final.eval.returns},
                                    {"step", final.step}});
    if (opt.checkpoint) agent::save_checkpoint(*dir / "checkpoint.bin", config, agent.state());
  }
  return final;
}

TrainOptions train_options(const Json& v) {
  TrainOptions o;
  o.eval_interval = v.at("eval_interval").get<std::size_t>();
  o.eval_episodes = v.at("eval_episodes").get<std::size_t>();
  o.coverage_bins = v.at("coverage_bins").get<std::size_t>();
  o.ood_states = v.at("ood_states").get<std::size_t>();
  if (v.contains("checkpoint")) o.checkpoint = v.at("checkpoint").get<bool>();
  if (o.eval_episodes == 0 || o.coverage_bins == 0 || o.ood_states == 0) {
    throw UsageError("eval_episodes, coverage_bins and ood_states must be >= 1");
  }
  return o;
}

// ---- gen-data ----

Json gen_data_defaults() {
  const data::GenerateOptions g;
  return {{"env", "line-reach"},       {"tier", "medium"},
          {"n", 20000},                {"seed", 0},
          {"out", nullptr},            {"out_dir", nullptr},
          {"expert_noise", g.expert_noise}, {"medium_noise", g.medium_noise},
          {"medium_target", g.medium_target}, {"ood_limit", g.ood_limit}};
}

int run_gen_data(const ResolvedConfig& rc) {
  const Json& v = rc.values;
  if (!v["out"].is_string()) throw UsageError("missing --out");
  data::Tier tier;
  try {
    tier = data::parse_tier(v["tier"].get<std::string>());
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  const auto env = make_env_arg(v["env"].get<std::string>());
  const auto n = v["n"].get<std::size_t>();
  if (n == 0) throw UsageError("--n must be >= 1");
  const auto seed = v["seed"].get<std::uint64_t>();
  const fs::path dir = run_directory("gen-data", seed, v);
  write_run_files(dir, "gen-data", v);

  data::GenerateOptions opt;
  opt.expert_noise = v["expert_noise"].get<double>();
  opt.medium_noise = v["medium_noise"].get<double>();
  opt.medium_target = v["medium_target"].get<double>();
  opt.ood_limit = v["ood_limit"].get<double>();
  const data::OfflineDataset ds = data::generate_dataset(*env, tier, n, seed, opt);
  const fs::path out = v["out"].get<std::string>();
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  data::save_dataset(ds, out);
  write_json(dir / "provenance.json", ds.provenance());
  std::cout << "wrote " << ds.size() << " transitions to " << out.string() << '\n';
  return 0;
}

// ---- train ----

Json train_defaults() {
  Json j = agent::to_json(agent::TrainConfig{});
  j["dataset"] = nullptr;
  j["env"] = nullptr;
  j["seeds"] = Json::array();
  j["eval_interval"] = 5000;
  j["eval_episodes"] = 10;
  j["coverage_bins"] = 20;
  j["ood_states"] = 1000;
  j["checkpoint"] = true;
  j["out_dir"] = nullptr;
  return j;
}

int run_train(const ResolvedConfig& rc) {
  const std::string variant = rc.values["variant"].get<std::string>();
  const auto seeds = seed_list(rc.values);
  const TrainOptions opt = train_options(rc.values);
  const data::OfflineDataset ds = load_dataset_arg(rc.values);
  const auto env = make_env_arg(env_of(rc.values, ds));
  if (env->state_dim() != ds.state_dim() || env->action_dim() != ds.action_dim()) {
    throw UsageError("dataset dimensions do not match env '" + env->name() + "'");
  }
  agent::TrainConfig config;
  try {
    config = resolve_train(rc, "", variant, env->name());
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }

  // Echo of the fully resolved config: it reloads to the same run.
  Json resolved = rc.values;
  const Json train = agent::to_json(config);
  for (const auto& [k, val] : train.items()) {
    if (k != "seed") resolved[k] = val;
  }
  resolved["seeds"] = seeds;
  resolved["seed"] = seeds.front();
  resolved["env"] = env->name();
  const fs::path dir = run_directory("train", seeds.front(), resolved);
  write_run_files(dir, "train", resolved);

  const data::ScoreNormalizer norm = data::ScoreNormalizer::compute(*env);
  std::ofstream summary(dir / "summary.csv");
  summary << "seed,mean_return,normalized_score,support_coverage,q_data_mean,q_ood_mean\n";
  double sums[5] = {0, 0, 0, 0, 0};
  for (std::uint64_t seed : seeds) {
    agent::TrainConfig c = config;
    c.seed = seed;
    const fs::path seed_dir = seeds.size() == 1 ? dir : dir / ("seed-" + std::to_string(seed));
    const EvalRow r = train_one(c, ds, *env, norm, opt, seed_dir);
    const double vals[5] = {r.eval.mean_return, r.eval.normalized_score, r.ood.support_coverage,
                            r.ood.q_data_mean, r.ood.q_ood_mean};
    summary << seed;
    for (int i = 0; i < 5; ++i) {
      summary << ',' << fmt(vals[i]);
      sums[i] += vals[i] / static_cast<double>(seeds.size());
    }
    summary << '\n';
    std::cout << "seed " << seed << ": normalized score " << r.eval.normalized_score
              << ", support coverage " << r.ood.support_coverage << '\n';
  }
  summary << "mean";
  for (double s : sums) summary << ',' << fmt(s);
  summary << '\n';
  if (seeds.size() > 1) {
    write_json(dir / "eval.json", {{"mean_return", sums[0]},
                                   {"normalized_score", sums[1]},
                                   {"support_coverage", sums[2]},
                                   {"q_data_mean", sums[3]},
                                   {"q_ood_mean", sums[4]},
                                   {"seeds", seeds}});
  }
  std::cout << "run directory: " << dir.string() << '\n';
  return 0;
}

// ---- estimate-mi ----

Json estimate_defaults() {
  const mi::EstimatorConfig e;
  return {{"joint", "gaussian"},
          {"rho", 0.5},
          {"dataset", nullptr},
          {"bounds", {"BA", "MISA-f", "MISA-DV", "MISA"}},
          {"marginal", "auto"},
          {"steps", 1500},
          {"batch_size", 128},
          {"k", e.k},
          {"hidden", e.hidden},
          {"learning_rate", e.learning_rate},
          {"exp_clamp", e.options.exp_clamp},
          {"seed", 0},
          {"out_dir", nullptr}};
}

int run_estimate_mi(const ResolvedConfig& rc) {
  const Json& v = rc.values;
  std::vector<mi::BoundKind> kinds;
  try {
    for (const auto& name : v["bounds"]) kinds.push_back(mi::parse_bound(name.get<std::string>()));
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (kinds.empty()) throw UsageError("--bounds must list at least one bound");

  mi::EstimatorConfig ec;
  ec.steps = v["steps"].get<std::size_t>();
  ec.batch_size = v["batch_size"].get<std::size_t>();
  ec.k = v["k"].get<std::size_t>();
  ec.hidden = v["hidden"].get<std::vector<std::size_t>>();
  ec.learning_rate = v["learning_rate"].get<double>();
  ec.options.exp_clamp = v["exp_clamp"].is_string() ? INFINITY : v["exp_clamp"].get<double>();
  ec.seed = v["seed"].get<std::uint64_t>();

  mi::JointSampler joint;
  std::optional<double> analytic;
  std::optional<data::OfflineDataset> ds;
  std::string marginal = v["marginal"].get<std::string>();
  if (marginal == "auto") marginal = v["dataset"].is_string() ? "fitted" : "analytic";
  if (v["dataset"].is_string()) {
    ds = load_dataset_arg(v);
    joint = [&ds](std::size_t n, Rng& rng) {
      const data::Batch b = ds->sample_batch(n, rng);
      return mi::PairBatch{b.states, b.actions};
    };
    if (marginal == "analytic") throw UsageError("no analytic marginal for a dataset; use fitted");
  } else {
    if (v["joint"] != "gaussian") throw UsageError("--joint must be 'gaussian' or use --dataset");
    const mi::GaussianJoint g{v["rho"].get<double>()};
    if (!(std::abs(g.rho) < 1.0)) throw UsageError("--rho must lie in (-1, 1)");
    joint = g.sampler();
    analytic = g.analytic_mi();
    ec.mi_hint = analytic;
  }
  if (marginal == "analytic") {
    ec.marginal = mi::Marginal::analytic(mi::GaussianJoint{v["rho"].get<double>()}.marginal());
  } else if (marginal == "fitted") {
    Rng rng = make_stream(ec.seed, 0, 99);
    ec.marginal = mi::Marginal::fitted(joint(4096, rng).actions);
  } else if (marginal == "omitted") {
    ec.marginal = mi::Marginal::omitted();
  } else {
    throw UsageError("--marginal must be analytic, fitted or omitted");
  }

  const fs::path dir = run_directory("estimate-mi", ec.seed, v);
  write_run_files(dir, "estimate-mi", v);
  std::ofstream curve(dir / "curve.csv");
  mi::write_curve_header(curve);
  Json estimates = Json::object();
  for (mi::BoundKind kind : kinds) {
    const mi::EstimatorResult r = mi::train_estimator(joint, kind, ec);
    mi::write_curve_rows(curve, r);
    const auto& e = r.final_estimate;
    estimates[mi::bound_name(kind)] = {{"value", e.value},
                                       {"ba_term", e.terms.ba_term},
                                       {"energy_term", e.terms.energy_term},
                                       {"normalizer_term", e.terms.normalizer_term},
                                       {"clipped", e.clipped}};
    std::cout << mi::bound_name(kind) << ": " << e.value << '\n';
  }
  Json out = {{"estimates", estimates},
              {"marginal", marginal},
              {"analytic_mi", analytic ? Json(*analytic) : Json()}};
  if (analytic) std::cout << "analytic: " << *analytic << '\n';
  write_json(dir / "estimates.json", out);
  return 0;
}

// ---- gradcheck ----

Json gradcheck_defaults() {
  const agent::GradcheckConfig g;
  return {{"points", g.points},
          {"samples", g.samples},
          {"batch", g.batch},
          {"grid", g.grid},
          {"q", agent::q_shape_name(g.q)},
          {"peak_scale", g.peak_scale},
          {"mi_grad", agent::mi_grad_name(g.mi_grad)},
          {"bound", mi::bound_name(g.bound)},
          {"hmc",
           {{"burn_in", g.hmc.burn_in},
            {"leapfrog_steps", g.hmc.leapfrog_steps},
            {"step_size", g.hmc.step_size},
            {"chains", g.hmc.chains}}},
          {"hidden", g.hidden},
          {"seed", g.seed},
          {"out_dir", nullptr}};
}

int run_gradcheck(const ResolvedConfig& rc) {
  const Json& v = rc.values;
  agent::GradcheckConfig g;
  try {
    g.points = v["points"].get<std::size_t>();
    g.samples = v["samples"].get<std::size_t>();
    g.batch = v["batch"].get<std::size_t>();
    g.grid = v["grid"].get<std::size_t>();
    g.q = agent::parse_q_shape(v["q"].get<std::string>());
    g.peak_scale = v["peak_scale"].get<double>();
    g.mi_grad = agent::parse_mi_grad(v["mi_grad"].get<std::string>());
    g.bound = mi::parse_bound(v["bound"].get<std::string>());
    g.hmc.burn_in = v["hmc"]["burn_in"].get<std::size_t>();
    g.hmc.leapfrog_steps = v["hmc"]["leapfrog_steps"].get<std::size_t>();
    g.hmc.step_size = v["hmc"]["step_size"].get<double>();
    g.hmc.chains = v["hmc"]["chains"].get<std::size_t>();
    g.hidden = v["hidden"].get<std::vector<std::size_t>>();
    g.seed = v["seed"].get<std::uint64_t>();
    g.hmc.validate();
    if (g.bound == mi::BoundKind::BA) throw ConfigError("gradcheck bound must not be BA");
    if (g.points == 0) throw ConfigError("--points must be >= 1");
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = run_directory("gradcheck", g.seed, v);
  write_run_files(dir, "gradcheck", v);
  const agent::GradcheckReport r = agent::run_gradcheck(g);
  std::ofstream csv(dir / "cosines.csv");
  csv << "point,cosine\n";
  for (std::size_t i = 0; i < r.cosines.size(); ++i) csv << i << ',' << fmt(r.cosines[i]) << '\n';
  write_json(dir / "report.json", {{"cosines", r.cosines},
                                   {"mean_cosine", r.mean_cosine},
                                   {"min_cosine", r.min_cosine},
                                   {"pass", r.pass}});
  std::printf("%s mean cosine %.6f min cosine %.6f over %zu points\n", r.pass ? "PASS" : "FAIL",
              r.mean_cosine, r.min_cosine, r.cosines.size());
  return r.pass ? 0 : 1;
}

// ---- ablate ----

Json ablate_defaults() {
  Json train = agent::to_json(agent::TrainConfig{});
  train.erase("variant");
  train.erase("seed");
  return {{"variants", {"BA", "MISA-f", "MISA-DV", "MISA"}},
          {"envs", {"line-reach"}},
          {"tier", "medium_replay"},
          {"seeds", {0, 1, 2, 3, 4}},
          {"n", 20000},
          {"data_seed", 0},
          {"eval_interval", 0},
          {"eval_episodes", 10},
          {"coverage_bins", 20},
          {"ood_states", 1000},
          {"train", train},
          {"out_dir", nullptr}};
}

struct Stats {
  double mean = NAN;
  double std = NAN;
  double se = NAN;
  std::size_t n = 0;
};

Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  std::vector<double> ok;
  for (double x : xs) {
    if (std::isfinite(x)) ok.push_back(x);
  }
  s.n = ok.size();
  if (ok.empty()) return s;
  s.mean = 0.0;
  for (double x : ok) s.mean += x / static_cast<double>(ok.size());
  double ss = 0.0;
  for (double x : ok) ss += (x - s.mean) * (x - s.mean);
  s.std = ok.size() > 1 ? std::sqrt(ss / static_cast<double>(ok.size() - 1)) : 0.0;
  s.se = s.std / std::sqrt(static_cast<double>(ok.size()));
  return s;
}

int run_ablate(const ResolvedConfig& rc) {
  const Json& v = rc.values;
  const auto variants = v["variants"].get<std::vector<std::string>>();
  const auto envs = v["envs"].get<std::vector<std::string>>();
  const auto seeds = v["seeds"].get<std::vector<std::uint64_t>>();
  if (variants.empty()) throw UsageError("--variants must list at least one variant");
  if (envs.empty()) throw UsageError("--envs must list at least one env");
  if (seeds.empty()) throw UsageError("--seeds must list at least one seed");
  data::Tier tier;
  std::map<std::pair<std::string, std::string>, agent::TrainConfig> configs;
  for (const auto& e : envs) make_env_arg(e);
  try {
    tier = data::parse_tier(v["tier"].get<std::string>());
    for (const auto& e : envs) {
      for (const auto& name : variants) configs[{name, e}] = resolve_train(rc, "train", name, e);
    }
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  TrainOptions opt = train_options(v);
  opt.checkpoint = false;

  // Rows follow the table's variant order; names outside it keep their given order.
  std::vector<std::string> ordered;
  for (const char* name : agent::kVariantNames) {
    if (std::find(variants.begin(), variants.end(), name) != variants.end()) ordered.push_back(name);
  }
  for (const auto& name : variants) {
    if (std::find(ordered.begin(), ordered.end(), name) == ordered.end()) ordered.push_back(name);
  }

  const fs::path dir = run_directory("ablate", seeds.front(), v);
  write_run_files(dir, "ablate", v);
  std::ofstream runs(dir / "runs.csv");
  runs << "variant,env,seed,normalized_score,support_coverage,status\n";
  std::ofstream summary(dir / "summary.csv");
  summary << "variant,env,mean,std,se,n\n";
  std::map<std::pair<std::string, std::string>, Stats> table;

  for (const auto& env_name : envs) {
    const auto env = data::make_env(env_name);
    const data::OfflineDataset ds =
        data::generate_dataset(*env, tier, v["n"].get<std::size_t>(),
                               v["data_seed"].get<std::uint64_t>());
    const data::ScoreNormalizer norm = data::ScoreNormalizer::compute(*env);
    for (const auto& variant : ordered) {
      std::vector<double> scores;
      for (std::uint64_t seed : seeds) {
        agent::TrainConfig c = configs.at({variant, env_name});
        c.seed = seed;
        double score = NAN;
        double coverage = NAN;
        std::string status = "ok";
        try {
          const EvalRow r = train_one(c, ds, *env, norm, opt, std::nullopt);
          score = r.eval.normalized_score;
          coverage = r.ood.support_coverage;
        } catch (const std::exception& e) {
          status = "failed";
          std::cerr << variant << " / " << env_name << " / seed " << seed << ": " << e.what()
                    << '\n';
        }
        scores.push_back(score);
        runs << '"' << variant << "\"," << env_name << ',' << seed << ',' << fmt(score) << ','
             << fmt(coverage) << ',' << status << '\n';
        runs.flush();
      }
      const Stats s = stats_of(scores);
      table[{variant, env_name}] = s;
      summary << '"' << variant << "\"," << env_name << ',' << fmt(s.mean) << ',' << fmt(s.std)
              << ',' << fmt(s.se) << ',' << s.n << '\n';
      std::printf("%-12s %-14s %8.2f +- %.2f (n=%zu)\n", variant.c_str(), env_name.c_str(),
                  s.mean, s.std, s.n);
    }
  }

  // Soft trend checks with a one-standard-error allowance.
  Json trends = Json::array();
  const auto check = [&](const std::string& hi, const std::string& lo, const std::string& env) {
    if (!table.contains({hi, env}) || !table.contains({lo, env})) return;
    const Stats& a = table[{hi, env}];
    const Stats& b = table[{lo, env}];
    const double allowance = std::max(a.se, b.se);
    const bool holds = a.mean + allowance >= b.mean;
    trends.push_back({{"env", env}, {"higher", hi}, {"lower", lo}, {"holds", holds},
                      {"difference", a.mean - b.mean}, {"allowance", allowance}});
    std::printf("trend %s >= %s on %s: %s (%.2f vs %.2f, allowance %.2f)\n", hi.c_str(),
                lo.c_str(), env.c_str(), holds ? "holds" : "VIOLATED", a.mean, b.mean, allowance);
  };
  for (const auto& env : envs) {
    check("MISA", "MISA-DV", env);
    check("MISA-DV", "MISA-f", env);
    check("MISA", "k=5", env);
  }
  write_json(dir / "trend.json", trends);
  std::cout << "run directory: " << dir.string() << '\n';
  return 0;
}

}  // namespace

const std::vector<Command>& commands() {
  static const std::vector<Command> list = {
      {"gen-data", "Generate an offline dataset for a toy env", gen_data_defaults, run_gen_data},
      {"train", "Train an agent on a dataset and evaluate it", train_defaults, run_train},
      {"estimate-mi", "Train the MI estimators on a joint distribution", estimate_defaults,
       run_estimate_mi},
      {"gradcheck", "Compare the MI policy gradient with a quadrature oracle",
       gradcheck_defaults, run_gradcheck},
      {"ablate", "Sweep variants x envs x seeds and tabulate scores", ablate_defaults,
       run_ablate},
  };
  return list;
}

}  // namespace misa::cli
