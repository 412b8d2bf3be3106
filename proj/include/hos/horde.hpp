#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hos/core.hpp"
#include "hos/envs.hpp"
#include "hos/gtd.hpp"
#include "hos/shaping.hpp"
#include "hos/tilecoding.hpp"
#include "hos/voting.hpp"

namespace hos {

// Fixed behavior policy. Only the uniform distribution is supported.
struct BehaviorPolicy {
  std::size_t action_count{2};

  double probability(Action) const { return 1.0 / static_cast<double>(action_count); }
  Action sample(Rng& rng) const { return uniform_index(rng, action_count); }
};

struct EpisodeRecord {
  std::size_t length{0};
  double base_return{0.0};
};

// A Horde of Greedy-GQ(lambda) demons learning from one behavior stream. Every demon
// sees the same (s, a, s') sequence and differs only in its reward component.
class Horde {
 public:
  Horde(Environment env, TileCoder coder, std::vector<ShapingAssignment> demons, DemonParams params)
      : env_(std::move(env)), coder_(std::move(coder)), behavior_{env_.spec().action_count} {
    if (demons.empty()) throw invalid_input("a horde needs at least one demon");
    if (coder_.action_count() != env_.spec().action_count)
      throw invalid_input("tile coder and environment disagree on the action count");
    params.gamma = env_.spec().gamma;
    params.validate();
    for (auto& assignment : demons) {
      int group = -1;
      if (assignment.potential) {
        const auto& p = *assignment.potential;
        p.validate();
        if (!compatible(p.kind, env_.spec().id))
          throw invalid_input(concat("demon '", assignment.id, "': potential ", to_string(p.kind),
                                     " does not apply to ", to_string(env_.spec().id)));
        group = potential_group(p);
      }
      group_of_.push_back(group);
      const std::string id = assignment.id;
      demons_.emplace_back(id, coder_.total_dim(), params, std::move(assignment));
    }
    order_.resize(demons_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    code_.resize(coder_.tilings());
    code_next_.resize(coder_.tilings());
    phi_s_.resize(groups_.size());
    phi_next_.resize(groups_.size());
  }

  const Environment& env() const { return env_; }
  const TileCoder& coder() const { return coder_; }
  const BehaviorPolicy& behavior() const { return behavior_; }
  std::span<const DemonState> demons() const { return demons_; }
  std::span<DemonState> demons() { return demons_; }
  const State& state() const { return state_; }
  bool episode_done() const { return done_; }

  // Permutation of demon indices used for the per-transition update sweep.
  void set_update_order(std::vector<std::size_t> order) {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
      if (sorted.size() != demons_.size() || sorted[i] != i) throw invalid_input("update order is not a permutation");
    order_ = std::move(order);
  }

  void begin_episode(Rng& env_rng) {
    state_ = env_.reset(env_rng);
    step_index_ = 0;
    done_ = false;
    for (auto& d : demons_) d.begin_episode();
  }

  // Sample a behavior action, step the environment once and update every demon with
  // its own shaped reward. The behavior never consults any demon.
  Transition learn_step(Rng& behavior_rng) {
    if (done_) throw invalid_input("learn_step called on a finished episode");
    const Action a = behavior_.sample(behavior_rng);
    Transition t = env_.step(state_, a, ++step_index_);

    const double gamma = env_.spec().gamma;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      phi_s_[g] = potential(groups_[g], t.state);
      phi_next_[g] = potential(groups_[g], t.next_state);
    }
    coder_.encode_state(t.state, code_);
    coder_.encode_state(t.next_state, code_next_);

    for (std::size_t k : order_) {
      auto& d = demons_[k];
      const int g = group_of_[k];
      const double r =
          g < 0 ? t.reward
                : t.reward + shaping_reward(phi_s_[g], phi_next_[g], gamma, d.shaping.potential->scale);
      greedy_gq_lambda_step_coded(d, code_, code_next_, coder_.action_block(), coder_.action_count(), t, r,
                                  scratch_);
    }
    state_ = t.next_state;
    done_ = t.terminal;
    return t;
  }

  EpisodeRecord run_episode(Rng& behavior_rng, Rng& env_rng, std::size_t max_steps) {
    begin_episode(env_rng);
    EpisodeRecord rec;
    while (!done_ && rec.length < max_steps) {
      rec.base_return += learn_step(behavior_rng).reward;
      ++rec.length;
    }
    return rec;
  }

 private:
  int potential_group(const PotentialSpec& p) {
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      const auto& q = groups_[g];
      if (q.kind == p.kind && q.speed_form == p.speed_form && q.max_angular_speed == p.max_angular_speed &&
          q.table == p.table)
        return static_cast<int>(g);
    }
    PotentialSpec unit = p;
    unit.scale = 1.0;
    groups_.push_back(std::move(unit));
    return static_cast<int>(groups_.size() - 1);
  }

  Environment env_;
  TileCoder coder_;
  BehaviorPolicy behavior_;
  std::vector<DemonState> demons_;
  std::vector<int> group_of_;
  std::vector<PotentialSpec> groups_;  // distinct unscaled potentials shared by several demons
  std::vector<std::size_t> order_;

  State state_;
  std::size_t step_index_{0};
  bool done_{true};

  std::vector<std::size_t> code_, code_next_;
  std::vector<double> phi_s_, phi_next_;
  StepScratch scratch_;
};

// A policy to evaluate: a single demon acting greedily, or an ensemble that votes.
struct PolicySpec {
  std::string name;
  std::vector<std::size_t> members;     // indices into the demon list
  std::optional<VotingScheme> voting;   // empty for a single demon

  bool is_ensemble() const { return voting.has_value(); }
};

struct EvaluationResult {
  double total_return{0.0};
  std::size_t steps{0};
};

// Run one learning-free episode with `policy`. Demons are only read.
// `start_rng` draws the start state; `tie_rng` breaks ties in the ensemble vote.
inline EvaluationResult evaluate_policy(const PolicySpec& policy, std::span<const DemonState> demons,
                                        const Environment& env, const TileCoder& coder, Rng& start_rng,
                                        Rng& tie_rng, std::size_t max_steps) {
  if (policy.members.empty()) throw invalid_input(concat("policy '", policy.name, "' has no members"));
  for (std::size_t m : policy.members)
    if (m >= demons.size()) throw invalid_input(concat("policy '", policy.name, "' refers to a missing demon"));
  if (!policy.is_ensemble() && policy.members.size() != 1)
    throw invalid_input(concat("policy '", policy.name, "' has several members but no voting scheme"));

  const std::size_t n_actions = coder.action_count();
  std::vector<std::size_t> code(coder.tilings());
  std::vector<double> q(n_actions);
  PreferenceTable prefs{std::vector<double>(n_actions)};
  std::vector<std::size_t> order;

  EvaluationResult result;
  State s = env.reset(start_rng);
  for (std::size_t step = 1; step <= max_steps; ++step) {
    coder.encode_state(s, code);
    Action a;
    if (!policy.is_ensemble()) {
      a = greedy_from_code(demons[policy.members.front()].theta, code, coder.action_block(), q);
    } else {
      std::fill(prefs.votes.begin(), prefs.votes.end(), 0.0);
      for (std::size_t m : policy.members) {
        for (Action b = 0; b < n_actions; ++b) q[b] = q_from_code(demons[m].theta, code, coder.action_block(), b);
        if (*policy.voting == VotingScheme::majority) add_majority_vote(q, prefs.votes);
        else add_rank_vote(q, prefs.votes, order);
      }
      a = ensemble_action(prefs, tie_rng);
    }
    const Transition t = env.step(s, a, step);
    result.total_return += t.reward;
    result.steps = step;
    if (t.terminal) break;
    s = t.next_state;
  }
  return result;
}

}  // namespace hos
