#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hos/core.hpp"

namespace hos {

struct Outcome {
  std::size_t next{0};
  double prob{1.0};
  double reward{0.0};
};

// Explicit finite MDP. `outcomes[s * actions + a]` lists the successor distribution
// of (s, a) with the reward R(s, a, s') attached to each successor.
struct TabularMDP {
  std::size_t states{0};
  std::size_t actions{0};
  double gamma{1.0};
  std::vector<std::vector<Outcome>> outcomes;
  std::vector<bool> terminal;

  const std::vector<Outcome>& row(std::size_t s, std::size_t a) const { return outcomes[s * actions + a]; }
  std::vector<Outcome>& row(std::size_t s, std::size_t a) { return outcomes[s * actions + a]; }

  void validate() const {
    if (states == 0 || actions == 0) throw invalid_input("tabular MDP needs at least one state and action");
    if (gamma < 0.0 || gamma > 1.0) throw invalid_input("gamma must lie in [0,1]");
    if (outcomes.size() != states * actions || terminal.size() != states)
      throw invalid_input("tabular MDP tables do not match its state/action counts");
    for (std::size_t s = 0; s < states; ++s) {
      for (std::size_t a = 0; a < actions; ++a) {
        double total = 0.0;
        for (const auto& o : row(s, a)) {
          if (o.next >= states) throw invalid_input(concat("successor out of range at (", s, ",", a, ")"));
          if (!std::isfinite(o.reward)) throw invalid_input(concat("non-finite reward at (", s, ",", a, ")"));
          if (o.prob < 0.0) throw invalid_input(concat("negative probability at (", s, ",", a, ")"));
          total += o.prob;
        }
        if (std::abs(total - 1.0) > 1e-9)
          throw invalid_input(concat("transition row (", s, ",", a, ") sums to ", total, ", not 1"));
      }
    }
  }
};

using PotentialTable = std::vector<double>;

}  // namespace hos
