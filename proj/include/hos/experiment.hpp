#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hos/core.hpp"
#include "hos/envs.hpp"
#include "hos/horde.hpp"
#include "hos/shaping.hpp"
#include "hos/stats.hpp"
#include "hos/tilecoding.hpp"
#include "hos/voting.hpp"

namespace hos {

// Raised for configuration problems; the message starts with the offending key path.
struct config_error : invalid_input {
  using invalid_input::invalid_input;
};

struct PotentialEntry {
  PotentialKind kind{PotentialKind::mc_position};
  std::vector<double> scales;
  SpeedForm speed_form{SpeedForm::shifted};
  double max_angular_speed{4.0};
};

struct EnsembleEntry {
  std::string name;
  std::vector<std::string> members;  // demon ids, "<kind>@*", or "*"
  VotingScheme voting{VotingScheme::rank};
};

// Dashed reference series: mean over the demons of one potential across a scale range.
struct ReferenceEntry {
  std::string name;
  PotentialKind kind{PotentialKind::mc_position};
  std::vector<double> scales;
};

struct ExperimentConfig {
  EnvId environment{EnvId::mountain_car};
  double gamma{0.99};
  double alpha{0.1};
  double beta{1e-4};
  double lambda{0.4};
  bool normalize_step_sizes{true};  // divide alpha and beta by the number of active tiles
  std::size_t runs{1};
  std::size_t episodes{1};
  std::size_t eval_interval{1};
  std::size_t max_steps{0};  // 0 selects the environment default
  std::size_t tilings{10};
  std::size_t bins{10};
  std::vector<std::pair<double, double>> tile_bounds;  // empty selects the environment default
  std::vector<PotentialEntry> potentials;
  std::vector<EnsembleEntry> ensembles;
  bool include_base{true};
  std::uint64_t seed{0};
  std::vector<std::pair<std::string, std::string>> comparisons;
  std::vector<ReferenceEntry> references;
  std::string output;
  std::size_t workers{1};
  bool save_snapshots{false};
};

inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

inline std::string demon_id(PotentialKind kind, double scale) {
  return concat(to_string(kind), "@", format_number(scale));
}

// ---------------------------------------------------------------------------
// Config ingestion

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& path) {
  if (!j.is_object()) throw config_error(concat(path.empty() ? "<root>" : path, ": expected an object"));
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw config_error(concat(path.empty() ? "" : path + ".", key, ": unknown key"));
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& path, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error(concat(path.empty() ? "" : path + ".", key, ": wrong type"));
  }
}

template <typename T>
T require(const json& j, const std::string& key, const std::string& path) {
  const std::string where = concat(path.empty() ? "" : path + ".", key);
  if (!j.contains(key)) throw config_error(concat(where, ": missing required key"));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error(concat(where, ": wrong type"));
  }
}

template <typename F>
auto wrap(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const config_error&) {
    throw;
  } catch (const invalid_input& e) {
    throw config_error(concat(path, ": ", e.what()));
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::get;
  using detail::require;
  detail::check_keys(j,
                     {"environment", "gamma", "alpha", "beta", "lambda", "normalize_step_sizes", "runs", "episodes",
                      "eval_interval", "max_steps", "tilings", "bins", "tile_bounds", "potentials", "ensembles",
                      "include_base", "seed", "comparisons", "references", "output", "workers", "save_snapshots"},
                     "");
  ExperimentConfig c;
  c.environment = detail::wrap("environment", [&] { return parse_env_id(require<std::string>(j, "environment", "")); });
  if (c.environment == EnvId::gridworld) throw config_error("environment: gridworld is only available to the oracle");
  c.gamma = get(j, "gamma", "", c.gamma);
  c.alpha = get(j, "alpha", "", c.alpha);
  c.beta = get(j, "beta", "", c.beta);
  c.lambda = get(j, "lambda", "", c.lambda);
  c.normalize_step_sizes = get(j, "normalize_step_sizes", "", c.normalize_step_sizes);
  c.runs = get(j, "runs", "", c.runs);
  c.episodes = get(j, "episodes", "", c.episodes);
  c.eval_interval = get(j, "eval_interval", "", c.eval_interval);
  c.max_steps = get(j, "max_steps", "", c.max_steps);
  c.tilings = get(j, "tilings", "", c.tilings);
  c.bins = get(j, "bins", "", c.bins);
  c.include_base = get(j, "include_base", "", c.include_base);
  c.seed = get(j, "seed", "", c.seed);
  c.output = get(j, "output", "", c.output);
  c.workers = get(j, "workers", "", c.workers);
  c.save_snapshots = get(j, "save_snapshots", "", c.save_snapshots);

  if (j.contains("tile_bounds")) {
    const auto& tb = j.at("tile_bounds");
    if (!tb.is_array()) throw config_error("tile_bounds: expected an array of [lo, hi] pairs");
    for (std::size_t i = 0; i < tb.size(); ++i) {
      const std::string path = concat("tile_bounds[", i, "]");
      if (!tb[i].is_array() || tb[i].size() != 2 || !tb[i][0].is_number() || !tb[i][1].is_number())
        throw config_error(concat(path, ": expected [lo, hi]"));
      c.tile_bounds.emplace_back(tb[i][0].get<double>(), tb[i][1].get<double>());
    }
  }

  if (j.contains("potentials")) {
    const auto& ps = j.at("potentials");
    if (!ps.is_array()) throw config_error("potentials: expected an array");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string path = concat("potentials[", i, "]");
      detail::check_keys(ps[i], {"kind", "scales", "speed_form", "max_angular_speed"}, path);
      PotentialEntry e;
      e.kind = detail::wrap(path + ".kind", [&] { return parse_potential_kind(require<std::string>(ps[i], "kind", path)); });
      e.scales = require<std::vector<double>>(ps[i], "scales", path);
      const auto form = get<std::string>(ps[i], "speed_form", path, "shifted");
      if (form == "shifted") e.speed_form = SpeedForm::shifted;
      else if (form == "magnitude") e.speed_form = SpeedForm::magnitude;
      else throw config_error(concat(path, ".speed_form: expected 'shifted' or 'magnitude'"));
      e.max_angular_speed = get(ps[i], "max_angular_speed", path, e.max_angular_speed);
      c.potentials.push_back(std::move(e));
    }
  }

  if (j.contains("ensembles")) {
    const auto& es = j.at("ensembles");
    if (!es.is_array()) throw config_error("ensembles: expected an array");
    for (std::size_t i = 0; i < es.size(); ++i) {
      const std::string path = concat("ensembles[", i, "]");
      detail::check_keys(es[i], {"name", "members", "voting"}, path);
      EnsembleEntry e;
      e.name = require<std::string>(es[i], "name", path);
      e.members = require<std::vector<std::string>>(es[i], "members", path);
      e.voting = detail::wrap(path + ".voting", [&] { return parse_voting(get<std::string>(es[i], "voting", path, "rank")); });
      c.ensembles.push_back(std::move(e));
    }
  }

  if (j.contains("references")) {
    const auto& rs = j.at("references");
    if (!rs.is_array()) throw config_error("references: expected an array");
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const std::string path = concat("references[", i, "]");
      detail::check_keys(rs[i], {"name", "potential", "scales"}, path);
      ReferenceEntry r;
      r.name = require<std::string>(rs[i], "name", path);
      r.kind = detail::wrap(path + ".potential",
                            [&] { return parse_potential_kind(require<std::string>(rs[i], "potential", path)); });
      r.scales = require<std::vector<double>>(rs[i], "scales", path);
      c.references.push_back(std::move(r));
    }
  }

  if (j.contains("comparisons")) {
    const auto& cs = j.at("comparisons");
    if (!cs.is_array()) throw config_error("comparisons: expected an array of [a, b] pairs");
    for (std::size_t i = 0; i < cs.size(); ++i) {
      if (!cs[i].is_array() || cs[i].size() != 2 || !cs[i][0].is_string() || !cs[i][1].is_string())
        throw config_error(concat("comparisons[", i, "]: expected [policy_a, policy_b]"));
      c.comparisons.emplace_back(cs[i][0].get<std::string>(), cs[i][1].get<std::string>());
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error(concat(path.string(), ": cannot open config"));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(concat(path.string(), ": ", e.what()));
  }
  return parse_config(j);
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["environment"] = std::string(to_string(c.environment));
  j["gamma"] = c.gamma;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["lambda"] = c.lambda;
  j["normalize_step_sizes"] = c.normalize_step_sizes;
  j["runs"] = c.runs;
  j["episodes"] = c.episodes;
  j["eval_interval"] = c.eval_interval;
  j["max_steps"] = c.max_steps;
  j["tilings"] = c.tilings;
  j["bins"] = c.bins;
  j["tile_bounds"] = nlohmann::json::array();
  for (const auto& [lo, hi] : c.tile_bounds) j["tile_bounds"].push_back({lo, hi});
  j["potentials"] = nlohmann::json::array();
  for (const auto& p : c.potentials)
    j["potentials"].push_back({{"kind", std::string(to_string(p.kind))},
                               {"scales", p.scales},
                               {"speed_form", p.speed_form == SpeedForm::shifted ? "shifted" : "magnitude"},
                               {"max_angular_speed", p.max_angular_speed}});
  j["ensembles"] = nlohmann::json::array();
  for (const auto& e : c.ensembles)
    j["ensembles"].push_back({{"name", e.name}, {"members", e.members}, {"voting", std::string(to_string(e.voting))}});
  j["references"] = nlohmann::json::array();
  for (const auto& r : c.references)
    j["references"].push_back({{"name", r.name}, {"potential", std::string(to_string(r.kind))}, {"scales", r.scales}});
  j["comparisons"] = nlohmann::json::array();
  for (const auto& [a, b] : c.comparisons) j["comparisons"].push_back({a, b});
  j["include_base"] = c.include_base;
  j["seed"] = c.seed;
  j["save_snapshots"] = c.save_snapshots;
  return j;
}

// ---------------------------------------------------------------------------
// Experiment plan: demons, policies and the tile coder resolved from a config

struct ExperimentPlan {
  std::vector<ShapingAssignment> demons;
  std::vector<PolicySpec> policies;  // every demon, then every ensemble
  TileCoderSpec coder;
  DemonParams params;
  std::size_t max_steps{0};
  std::size_t checkpoints{0};
};

inline std::vector<std::pair<double, double>> default_tile_bounds(EnvId env) {
  switch (env) {
    case EnvId::mountain_car:
      return {{MountainCar::min_position, MountainCar::max_position}, {-MountainCar::max_speed, MountainCar::max_speed}};
    case EnvId::cart_pole:
      // Angular velocity shares the angular-speed potential's normalization bound; the
      // cart-velocity range covers ~99% of the states visited under uniform behavior.
      return {{-CartPole::drop_angle, CartPole::drop_angle}, {-4.0, 4.0}, {-CartPole::track_limit, CartPole::track_limit},
              {-2.0, 2.0}};
    case EnvId::gridworld: break;
  }
  throw invalid_input("no tile bounds for gridworld");
}

inline ExperimentPlan make_plan(const ExperimentConfig& c) {
  if (c.runs < 1) throw config_error("runs: must be at least 1");
  if (c.episodes < 1) throw config_error("episodes: must be at least 1");
  if (c.eval_interval < 1) throw config_error("eval_interval: must be at least 1");
  if (c.workers < 1) throw config_error("workers: must be at least 1");
  if (c.tilings < 1) throw config_error("tilings: must be at least 1");
  if (c.bins < 1) throw config_error("bins: must be at least 1");

  const Environment env = detail::wrap("environment", [&] { return make_environment(c.environment, c.max_steps, c.gamma); });
  ExperimentPlan plan;
  plan.max_steps = env.spec().max_steps;
  plan.checkpoints = c.episodes / c.eval_interval;

  const double step_divisor = c.normalize_step_sizes ? static_cast<double>(c.tilings) : 1.0;
  plan.params = DemonParams{c.alpha / step_divisor, c.beta / step_divisor, c.lambda, c.gamma};
  detail::wrap("alpha/beta/lambda/gamma", [&] {
    plan.params.validate();
    return 0;
  });

  const auto bounds = c.tile_bounds.empty() ? default_tile_bounds(c.environment) : c.tile_bounds;
  if (bounds.size() != env.spec().state_dim)
    throw config_error(concat("tile_bounds: expected ", env.spec().state_dim, " pairs"));
  plan.coder.dims = env.spec().state_dim;
  plan.coder.bins_per_dim = c.bins;
  plan.coder.tilings = c.tilings;
  plan.coder.action_count = env.spec().action_count;
  for (const auto& [lo, hi] : bounds) {
    plan.coder.lower.push_back(lo);
    plan.coder.upper.push_back(hi);
  }
  detail::wrap("tile_bounds", [&] {
    plan.coder.validate();
    return 0;
  });

  std::set<std::string> seen;
  if (c.include_base) {
    plan.demons.push_back({"base", std::nullopt});
    seen.insert("base");
  }
  for (std::size_t i = 0; i < c.potentials.size(); ++i) {
    const auto& p = c.potentials[i];
    const std::string path = concat("potentials[", i, "]");
    if (!compatible(p.kind, c.environment))
      throw config_error(concat(path, ".kind: ", to_string(p.kind), " does not apply to ", to_string(c.environment)));
    if (p.scales.empty()) throw config_error(concat(path, ".scales: must not be empty"));
    for (double scale : p.scales) {
      PotentialSpec spec{p.kind, scale, p.speed_form, p.max_angular_speed, {}};
      detail::wrap(path + ".scales", [&] {
        spec.validate();
        return 0;
      });
      std::string id = demon_id(p.kind, scale);
      if (!seen.insert(id).second) continue;
      plan.demons.push_back({std::move(id), spec});
    }
  }
  if (plan.demons.empty()) throw config_error("potentials: the horde has no demons (set include_base or add potentials)");

  for (std::size_t k = 0; k < plan.demons.size(); ++k) plan.policies.push_back({plan.demons[k].id, {k}, std::nullopt});

  for (std::size_t i = 0; i < c.ensembles.size(); ++i) {
    const auto& e = c.ensembles[i];
    const std::string path = concat("ensembles[", i, "]");
    if (e.name.empty()) throw config_error(concat(path, ".name: must not be empty"));
    if (seen.count(e.name)) throw config_error(concat(path, ".name: '", e.name, "' clashes with another policy"));
    seen.insert(e.name);
    PolicySpec policy{e.name, {}, e.voting};
    auto add = [&](std::size_t k) {
      if (std::find(policy.members.begin(), policy.members.end(), k) == policy.members.end()) policy.members.push_back(k);
    };
    for (std::size_t m = 0; m < e.members.size(); ++m) {
      const std::string& sel = e.members[m];
      bool matched = false;
      for (std::size_t k = 0; k < plan.demons.size(); ++k) {
        const auto& d = plan.demons[k];
        const bool hit = sel == "*" || sel == d.id ||
                         (sel.size() > 2 && sel.ends_with("@*") && d.potential &&
                          sel.substr(0, sel.size() - 2) == to_string(d.potential->kind));
        if (hit) {
          add(k);
          matched = true;
        }
      }
      if (!matched) throw config_error(concat(path, ".members[", m, "]: '", sel, "' matches no demon"));
    }
    std::sort(policy.members.begin(), policy.members.end());
    plan.policies.push_back(std::move(policy));
  }

  auto known = [&](const std::string& name) {
    return std::any_of(plan.policies.begin(), plan.policies.end(), [&](const auto& p) { return p.name == name; });
  };
  for (std::size_t i = 0; i < c.comparisons.size(); ++i)
    for (const auto& name : {c.comparisons[i].first, c.comparisons[i].second})
      if (!known(name)) throw config_error(concat("comparisons[", i, "]: unknown policy '", name, "'"));
  for (std::size_t i = 0; i < c.references.size(); ++i)
    for (double s : c.references[i].scales)
      if (!seen.count(demon_id(c.references[i].kind, s)))
        throw config_error(concat("references[", i, "].scales: no demon ", demon_id(c.references[i].kind, s)));
  return plan;
}

// ---------------------------------------------------------------------------
// Running

struct LearningCurve {
  std::string policy;
  std::vector<std::size_t> episodes;            // episode index of every checkpoint
  std::vector<std::vector<double>> returns;     // [run][checkpoint]
  std::vector<std::vector<std::size_t>> steps;  // [run][checkpoint]

  std::vector<double> summed_returns() const {
    std::vector<double> out;
    for (const auto& run : returns) out.push_back(std::accumulate(run.begin(), run.end(), 0.0));
    return out;
  }
  std::vector<double> mean_curve() const {
    std::vector<double> out(episodes.size(), 0.0);
    for (const auto& run : returns)
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += run[k];
    for (auto& v : out) v /= static_cast<double>(returns.size());
    return out;
  }
  std::vector<double> stderr_curve() const {
    std::vector<double> out(episodes.size(), 0.0), column(returns.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
      for (std::size_t r = 0; r < returns.size(); ++r) column[r] = returns[r][k];
      out[k] = standard_error(column);
    }
    return out;
  }
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<LearningCurve> curves;  // in policy order
  std::vector<DemonSnapshot> final_snapshots;  // run 0 only, when requested

  const LearningCurve& curve(const std::string& policy) const {
    for (const auto& c : curves)
      if (c.policy == policy) return c;
    throw invalid_input(concat("unknown policy '", policy, "'"));
  }
};

struct RunOutcome {
  std::vector<std::vector<EvaluationResult>> evaluations;  // [policy][checkpoint]
  std::vector<DemonSnapshot> snapshots;
};

inline RunOutcome run_single(const ExperimentConfig& c, const ExperimentPlan& plan, std::size_t run) {
  Horde horde(make_environment(c.environment, c.max_steps, c.gamma), TileCoder(plan.coder), plan.demons, plan.params);
  Rng behavior = make_stream(c.seed, run, Stream::behavior);
  Rng env_rng = make_stream(c.seed, run, Stream::environment);
  RunOutcome out;
  out.evaluations.assign(plan.policies.size(), {});
  for (std::size_t episode = 1; episode <= c.episodes; ++episode) {
    horde.run_episode(behavior, env_rng, plan.max_steps);
    if (episode % c.eval_interval != 0) continue;
    const std::size_t checkpoint = episode / c.eval_interval - 1;
    if (checkpoint >= plan.checkpoints) continue;
    for (std::size_t p = 0; p < plan.policies.size(); ++p) {
      // Every policy of a checkpoint starts from the same state.
      Rng start = make_stream(c.seed, run, Stream::evaluation, checkpoint);
      Rng ties = make_stream(c.seed, run, Stream::tie_break, checkpoint * plan.policies.size() + p);
      out.evaluations[p].push_back(
          evaluate_policy(plan.policies[p], horde.demons(), horde.env(), horde.coder(), start, ties, plan.max_steps));
    }
  }
  if (c.save_snapshots && run == 0)
    for (const auto& d : horde.demons()) out.snapshots.push_back(snapshot(d));
  return out;
}

// Runs `config.runs` independent seeds on up to `config.workers` threads. The result
// does not depend on the worker count.
inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  const ExperimentPlan plan = make_plan(c);
  std::vector<RunOutcome> outcomes(c.runs);
  std::vector<std::exception_ptr> errors(c.runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t run = next++; run < c.runs; run = next++) {
      try {
        outcomes[run] = run_single(c, plan, run);
      } catch (...) {
        errors[run] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min(c.workers, c.runs);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t run = 0; run < c.runs; ++run) {
    if (!errors[run]) continue;
    try {
      std::rethrow_exception(errors[run]);
    } catch (const std::exception& e) {
      throw numerical_error(concat("run ", run, " (seed ", c.seed, ") aborted: ", e.what()));
    }
  }

  ExperimentResult result;
  result.config = c;
  for (std::size_t p = 0; p < plan.policies.size(); ++p) {
    LearningCurve curve;
    curve.policy = plan.policies[p].name;
    for (std::size_t k = 0; k < plan.checkpoints; ++k) curve.episodes.push_back((k + 1) * c.eval_interval);
    for (const auto& o : outcomes) {
      std::vector<double> returns;
      std::vector<std::size_t> steps;
      for (const auto& e : o.evaluations[p]) {
        returns.push_back(e.total_return);
        steps.push_back(e.steps);
      }
      curve.returns.push_back(std::move(returns));
      curve.steps.push_back(std::move(steps));
    }
    result.curves.push_back(std::move(curve));
  }
  if (!outcomes.empty()) result.final_snapshots = std::move(outcomes.front().snapshots);
  return result;
}

// ---------------------------------------------------------------------------
// Analysis

struct ComparisonReport {
  std::string policy_a, policy_b;
  double mean_a{0.0}, mean_b{0.0};
  WelchResult test;

  double difference() const { return mean_a - mean_b; }
};

inline const LearningCurve& find_curve(std::span<const LearningCurve> curves, const std::string& policy) {
  for (const auto& c : curves)
    if (c.policy == policy) return c;
  throw invalid_input(concat("unknown policy '", policy, "'"));
}

// Welch test on the per-run summed evaluation returns of two policies.
inline ComparisonReport compare_policies(std::span<const LearningCurve> curves, const std::string& a,
                                         const std::string& b) {
  const auto& ca = find_curve(curves, a);
  const auto& cb = find_curve(curves, b);
  if (ca.returns.size() != cb.returns.size())
    throw invalid_input(concat("policies '", a, "' and '", b, "' have different run counts"));
  const auto sa = ca.summed_returns(), sb = cb.summed_returns();
  return {a, b, mean(sa), mean(sb), welch_t_test(sa, sb)};
}

// Per-checkpoint mean over the demons of `kind` at `scales`, across all runs. There is
// no single demon with this performance; it is a reference series only.
inline std::vector<double> mean_of_scale_range(std::span<const LearningCurve> curves, PotentialKind kind,
                                               std::span<const double> scales) {
  if (scales.empty()) throw invalid_input("mean_of_scale_range: empty scale range");
  std::vector<double> out;
  for (double s : scales) {
    const auto m = find_curve(curves, demon_id(kind, s)).mean_curve();
    if (out.empty()) out.assign(m.size(), 0.0);
    if (m.size() != out.size()) throw invalid_input("mean_of_scale_range: checkpoint counts differ");
    for (std::size_t k = 0; k < m.size(); ++k) out[k] += m[k];
  }
  for (auto& v : out) v /= static_cast<double>(scales.size());
  return out;
}

// Best scale per potential kind by mean summed return; ties keep the smaller scale.
inline std::map<PotentialKind, double> best_scales(const ExperimentResult& r) {
  std::map<PotentialKind, double> best;
  std::map<PotentialKind, double> best_value;
  for (const auto& p : r.config.potentials) {
    auto scales = p.scales;
    std::sort(scales.begin(), scales.end());
    for (double s : scales) {
      const double v = mean(find_curve(r.curves, demon_id(p.kind, s)).summed_returns());
      if (!best.count(p.kind) || v > best_value[p.kind]) {
        best[p.kind] = s;
        best_value[p.kind] = v;
      }
    }
  }
  return best;
}

inline std::vector<std::pair<std::string, std::string>> default_comparisons(const ExperimentResult& r) {
  if (!r.config.comparisons.empty()) return r.config.comparisons;
  std::vector<std::pair<std::string, std::string>> out;
  const bool has_base = std::any_of(r.curves.begin(), r.curves.end(), [](const auto& c) { return c.policy == "base"; });
  if (!has_base) return out;
  for (const auto& c : r.curves)
    if (c.policy != "base") out.emplace_back(c.policy, "base");
  return out;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {
inline void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(concat("cannot write ", path.string()));
  out << body;
  if (!out) throw std::runtime_error(concat("failed writing ", path.string()));
}
}  // namespace detail

// Writes curves.csv, summary.csv, comparisons.csv, references.csv and manifest.json.
inline void emit_outputs(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error(concat("cannot create ", dir.string(), ": ", ec.message()));

  std::ostringstream curves;
  curves << "policy,run,checkpoint,episode,return,steps\n";
  for (const auto& c : r.curves)
    for (std::size_t run = 0; run < c.returns.size(); ++run)
      for (std::size_t k = 0; k < c.episodes.size(); ++k)
        curves << c.policy << ',' << run << ',' << k << ',' << c.episodes[k] << ','
               << format_number(c.returns[run][k]) << ',' << c.steps[run][k] << '\n';
  detail::write_file(dir / "curves.csv", curves.str());

  std::ostringstream summary;
  summary << "policy,mean_sum_return,stderr,n\n";
  for (const auto& c : r.curves) {
    const auto sums = c.summed_returns();
    summary << c.policy << ',' << format_number(mean(sums)) << ',' << format_number(standard_error(sums)) << ','
            << sums.size() << '\n';
  }
  detail::write_file(dir / "summary.csv", summary.str());

  std::ostringstream comparisons;
  comparisons << "policy_a,policy_b,mean_a,mean_b,t,df,p\n";
  if (r.config.runs >= 2) {
    for (const auto& [a, b] : default_comparisons(r)) {
      const auto rep = compare_policies(r.curves, a, b);
      comparisons << a << ',' << b << ',' << format_number(rep.mean_a) << ',' << format_number(rep.mean_b) << ','
                  << format_number(rep.test.t) << ',' << format_number(rep.test.df) << ','
                  << format_number(rep.test.p) << '\n';
    }
  }
  detail::write_file(dir / "comparisons.csv", comparisons.str());

  std::ostringstream refs;
  refs << "reference,checkpoint,episode,mean_return\n";
  for (const auto& ref : r.config.references) {
    const auto series = mean_of_scale_range(r.curves, ref.kind, ref.scales);
    const auto& episodes = r.curves.front().episodes;
    for (std::size_t k = 0; k < series.size(); ++k)
      refs << ref.name << ',' << k << ',' << episodes[k] << ',' << format_number(series[k]) << '\n';
  }
  detail::write_file(dir / "references.csv", refs.str());

  detail::write_file(dir / "manifest.json", to_json(r.config).dump(2) + "\n");

  if (!r.final_snapshots.empty()) {
    std::filesystem::create_directories(dir / "snapshots", ec);
    for (const auto& s : r.final_snapshots) {
      std::string file = s.id;
      std::replace(file.begin(), file.end(), '@', '_');
      std::ofstream out(dir / "snapshots" / (file + ".demon"), std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error(concat("cannot write snapshot for ", s.id));
      write_snapshot(out, s);
    }
  }
}

// Reads curves.csv back into learning curves, preserving policy order.
inline std::vector<LearningCurve> read_curves(const std::filesystem::path& dir) {
  const auto path = dir / "curves.csv";
  std::ifstream in(path);
  if (!in) throw std::runtime_error(concat("cannot open ", path.string()));
  std::string line;
  std::getline(in, line);
  if (line != "policy,run,checkpoint,episode,return,steps")
    throw invalid_input(concat(path.string(), ": unexpected header"));
  std::vector<LearningCurve> curves;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 6) throw invalid_input(concat(path.string(), ":", line_no, ": expected 6 columns"));
    try {
      const std::size_t run = std::stoul(cells[1]), k = std::stoul(cells[2]), episode = std::stoul(cells[3]);
      if (curves.empty() || curves.back().policy != cells[0]) curves.push_back({cells[0], {}, {}, {}});
      auto& c = curves.back();
      if (run >= c.returns.size()) {
        c.returns.resize(run + 1);
        c.steps.resize(run + 1);
      }
      if (k >= c.episodes.size()) c.episodes.resize(k + 1);
      c.episodes[k] = episode;
      c.returns[run].push_back(std::stod(cells[4]));
      c.steps[run].push_back(std::stoul(cells[5]));
    } catch (const std::logic_error&) {
      throw invalid_input(concat(path.string(), ":", line_no, ": malformed row"));
    }
  }
  return curves;
}

// Gnuplot-ready blocks ("# policy" header, then "episode mean stderr" rows), separated
// by two blank lines so each policy is addressable with `index`.
inline std::string plot_data(std::span<const LearningCurve> curves, std::span<const std::string> policies) {
  std::ostringstream out;
  bool first = true;
  for (const auto& name : policies) {
    const auto& c = find_curve(curves, name);
    if (!first) out << "\n\n";
    first = false;
    out << "# " << c.policy << "\n# episode mean stderr\n";
    const auto m = c.mean_curve(), se = c.stderr_curve();
    for (std::size_t k = 0; k < c.episodes.size(); ++k)
      out << c.episodes[k] << ' ' << format_number(m[k]) << ' ' << format_number(se[k]) << '\n';
  }
  return out.str();
}

}  // namespace hos
