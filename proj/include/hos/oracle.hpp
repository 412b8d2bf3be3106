#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "hos/core.hpp"
#include "hos/tabular.hpp"

namespace hos {

struct TabularQ {
  std::size_t states{0};
  std::size_t actions{0};
  std::vector<double> values;

  TabularQ() = default;
  TabularQ(std::size_t s, std::size_t a, double init = 0.0) : states(s), actions(a), values(s * a, init) {}

  double operator()(std::size_t s, std::size_t a) const { return values[s * actions + a]; }
  double& operator()(std::size_t s, std::size_t a) { return values[s * actions + a]; }

  double max(std::size_t s) const {
    double m = (*this)(s, 0);
    for (std::size_t a = 1; a < actions; ++a) m = std::max(m, (*this)(s, a));
    return m;
  }
};

struct ValueIterationResult {
  TabularQ q;
  std::vector<double> residuals;  // sup-norm Bellman residual of every sweep
};

// Synchronous value iteration on Q until the sup-norm change of a sweep drops below
// `tol`. Absorbing states are ordinary self-loops, so no terminal value is forced.
inline ValueIterationResult value_iteration(const TabularMDP& m, double tol, std::size_t max_sweeps = 1'000'000) {
  if (!(tol > 0.0)) throw invalid_input("value iteration tolerance must be positive");
  m.validate();
  ValueIterationResult out{TabularQ(m.states, m.actions), {}};
  std::vector<double> v(m.states, 0.0);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double residual = 0.0;
    for (std::size_t s = 0; s < m.states; ++s) {
      for (std::size_t a = 0; a < m.actions; ++a) {
        double q = 0.0;
        for (const auto& o : m.row(s, a)) q += o.prob * (o.reward + m.gamma * v[o.next]);
        residual = std::max(residual, std::abs(q - out.q(s, a)));
        out.q(s, a) = q;
      }
    }
    for (std::size_t s = 0; s < m.states; ++s) v[s] = out.q.max(s);
    out.residuals.push_back(residual);
    if (residual < tol) return out;
  }
  throw numerical_error("value iteration did not converge");
}

// R'(s,a,s') = R(s,a,s') + gamma * phi(s') - phi(s); dynamics unchanged.
inline TabularMDP shape_tabular(const TabularMDP& m, const PotentialTable& phi) {
  if (phi.size() != m.states) throw invalid_input("potential table size does not match the state count");
  for (double p : phi)
    if (!std::isfinite(p)) throw invalid_input("potential table has a non-finite entry");
  TabularMDP shaped = m;
  for (std::size_t s = 0; s < m.states; ++s)
    for (std::size_t a = 0; a < m.actions; ++a)
      for (auto& o : shaped.row(s, a)) o.reward += m.gamma * phi[o.next] - phi[s];
  return shaped;
}

// Step size as a function of how often (s, a) has been updated, counting from 1.
using AlphaSchedule = std::function<double(std::size_t visits)>;

// Tabular Q-learning under a uniform behavior policy. Episodes start in a uniformly
// drawn state; reaching an absorbing terminal performs one self-loop update there and
// then restarts.
inline TabularQ tabular_q_learning(const TabularMDP& m, std::size_t steps, const AlphaSchedule& alpha, Rng& rng) {
  m.validate();
  TabularQ q(m.states, m.actions);
  std::vector<std::size_t> visits(m.states * m.actions, 0);
  std::size_t s = uniform_index(rng, m.states);
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t a = uniform_index(rng, m.actions);
    const auto& row = m.row(s, a);
    std::size_t pick = 0;
    if (row.size() > 1) {
      double u = uniform_real(rng, 0.0, 1.0), acc = 0.0;
      for (pick = 0; pick + 1 < row.size(); ++pick) {
        acc += row[pick].prob;
        if (u < acc) break;
      }
    }
    const Outcome& o = row[pick];
    const double step = alpha(++visits[s * m.actions + a]);
    q(s, a) += step * (o.reward + m.gamma * q.max(o.next) - q(s, a));
    s = m.terminal[s] ? uniform_index(rng, m.states) : o.next;
  }
  return q;
}

// Per-state set of actions whose value is within `eps` of the state's maximum.
inline std::vector<std::vector<std::size_t>> greedy_sets(const TabularQ& q, double eps = 1e-9) {
  std::vector<std::vector<std::size_t>> out(q.states);
  for (std::size_t s = 0; s < q.states; ++s) {
    const double best = q.max(s);
    for (std::size_t a = 0; a < q.actions; ++a)
      if (q(s, a) >= best - eps) out[s].push_back(a);
  }
  return out;
}

}  // namespace hos
