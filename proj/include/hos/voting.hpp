#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "hos/core.hpp"

namespace hos {

enum class VotingScheme { majority, rank };

inline std::string_view to_string(VotingScheme v) { return v == VotingScheme::majority ? "majority" : "rank"; }

inline VotingScheme parse_voting(std::string_view name) {
  if (name == "majority") return VotingScheme::majority;
  if (name == "rank") return VotingScheme::rank;
  throw invalid_input(concat("unknown voting scheme '", name, "'"));
}

// Accumulated votes P(s, .) of an ensemble in one state.
struct PreferenceTable {
  std::vector<double> votes;

  std::size_t action_count() const { return votes.size(); }
  double total() const { return std::accumulate(votes.begin(), votes.end(), 0.0); }
};

namespace detail {
inline std::size_t common_action_count(std::span<const std::vector<double>> q_values) {
  if (q_values.empty()) throw invalid_input("an ensemble needs at least one member");
  const std::size_t n = q_values.front().size();
  if (n == 0) throw invalid_input("Q-value rows must not be empty");
  for (const auto& row : q_values)
    if (row.size() != n) throw invalid_input("every member must report the same number of actions");
  return n;
}
}  // namespace detail

// Vote of one member under majority voting: 1 for its argmax (lowest index on ties).
inline void add_majority_vote(std::span<const double> q, std::span<double> votes) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < q.size(); ++a)
    if (q[a] > q[best]) best = a;
  votes[best] += 1.0;
}

// Vote of one member under rank voting: n-1 for the highest Q down to 0 for the lowest,
// equal Q-values ordered by ascending action index.
inline void add_rank_vote(std::span<const double> q, std::span<double> votes, std::vector<std::size_t>& order) {
  const std::size_t n = q.size();
  order.resize(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return q[a] > q[b]; });
  for (std::size_t r = 0; r < n; ++r) votes[order[r]] += static_cast<double>(n - 1 - r);
}

inline PreferenceTable majority_votes(std::span<const std::vector<double>> q_values) {
  PreferenceTable p{std::vector<double>(detail::common_action_count(q_values), 0.0)};
  for (const auto& row : q_values) add_majority_vote(row, p.votes);
  return p;
}

inline PreferenceTable rank_votes(std::span<const std::vector<double>> q_values) {
  PreferenceTable p{std::vector<double>(detail::common_action_count(q_values), 0.0)};
  std::vector<std::size_t> order;
  for (const auto& row : q_values) add_rank_vote(row, p.votes, order);
  return p;
}

inline PreferenceTable preferences(VotingScheme scheme, std::span<const std::vector<double>> q_values) {
  return scheme == VotingScheme::majority ? majority_votes(q_values) : rank_votes(q_values);
}

// Greedy on P with ties broken uniformly at random from `rng`.
inline Action ensemble_action(const PreferenceTable& p, Rng& rng) {
  if (p.votes.empty()) throw invalid_input("empty preference table");
  const double best = *std::max_element(p.votes.begin(), p.votes.end());
  std::array<Action, 16> small{};
  std::vector<Action> large;
  std::size_t count = 0;
  for (Action a = 0; a < p.votes.size(); ++a) {
    if (p.votes[a] != best) continue;
    if (count < small.size()) small[count] = a;
    else {
      if (large.empty()) large.assign(small.begin(), small.end());
      large.push_back(a);
    }
    ++count;
  }
  if (count == 1) return small[0];
  const std::size_t pick = uniform_index(rng, count);
  return large.empty() ? small[pick] : large[pick];
}

}  // namespace hos
