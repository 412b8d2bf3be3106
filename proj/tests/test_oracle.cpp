#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hos/envs.hpp"
#include "hos/fixtures.hpp"
#include "hos/oracle.hpp"

using namespace hos;

namespace {

PotentialTable random_potential(Rng& rng, std::size_t n, double spread) {
  PotentialTable phi(n);
  for (auto& v : phi) v = uniform_real(rng, -spread, spread);
  return phi;
}

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("hos_test_" + name);
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST(value_iteration, gridworld_closed_form) {
  const double gamma = 0.95;
  const auto m = make_gridworld(5, 5, {4, 4}, -1.0, gamma);
  const auto vi = value_iteration(m, 1e-12);
  for (std::size_t y = 0; y < 5; ++y) {
    for (std::size_t x = 0; x < 5; ++x) {
      const double d = static_cast<double>((4 - x) + (4 - y));
      EXPECT_NEAR(vi.q.max(grid_state(5, {x, y})), -(1.0 - std::pow(gamma, d)) / (1.0 - gamma), 1e-9);
    }
  }
  // Moving away from the goal costs one extra step there and back.
  const std::size_t s = grid_state(5, {2, 2});
  EXPECT_NEAR(vi.q(s, grid_left), -1.0 + gamma * vi.q.max(grid_state(5, {1, 2})), 1e-9);
  const auto greedy = greedy_sets(vi.q);
  EXPECT_EQ(greedy[s], (std::vector<std::size_t>{grid_up, grid_right}));
}

TEST(value_iteration, residuals_contract_by_gamma) {
  const double gamma = 0.9;
  const auto m = make_gridworld(6, 4, {5, 0}, -1.0, gamma);
  const auto vi = value_iteration(m, 1e-10);
  ASSERT_GT(vi.residuals.size(), 2u);
  for (std::size_t k = 1; k < vi.residuals.size(); ++k)
    EXPECT_LE(vi.residuals[k], gamma * vi.residuals[k - 1] + 1e-12) << k;
  EXPECT_LT(vi.residuals.back(), 1e-10);
}

TEST(value_iteration, rejects_invalid_models) {
  auto m = make_gridworld(2, 2, {1, 1}, -1.0, 0.9);
  m.row(0, 0).front().prob = 0.5;
  EXPECT_THROW(value_iteration(m, 1e-9), invalid_input);
  EXPECT_THROW(value_iteration(make_gridworld(2, 2, {1, 1}, -1.0, 0.9), 0.0), invalid_input);
  // gamma = 1 with a reward-bearing loop never converges.
  auto loop = make_gridworld(1, 1, {0, 0}, -1.0, 1.0);
  for (std::size_t a = 0; a < loop.actions; ++a) loop.row(0, a).front().reward = -1.0;
  EXPECT_THROW(value_iteration(loop, 1e-9, 1000), numerical_error);
}

TEST(shaping_oracle, optimal_policy_is_preserved) {
  const double gamma = 0.95;
  const auto m = make_gridworld(5, 5, {4, 4}, -1.0, gamma);
  const auto base = value_iteration(m, 1e-12);
  const auto greedy = greedy_sets(base.q, 1e-7);
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto phi = random_potential(rng, m.states, 50.0);
    const auto shaped = value_iteration(shape_tabular(m, phi), 1e-12);
    EXPECT_EQ(greedy_sets(shaped.q, 1e-7), greedy) << trial;
    for (std::size_t s = 0; s < m.states; ++s)
      for (std::size_t a = 0; a < m.actions; ++a)
        ASSERT_NEAR(shaped.q(s, a), base.q(s, a) - phi[s], 1e-8) << trial << ":" << s << "," << a;
  }
}

TEST(shaping_oracle, stochastic_model_value_shift) {
  // Slippery 4x4 grid: intended move with 0.8, stay put with 0.2.
  auto m = make_gridworld(4, 4, {3, 3}, -1.0, 0.9);
  for (std::size_t s = 0; s < m.states; ++s) {
    if (m.terminal[s]) continue;
    for (std::size_t a = 0; a < m.actions; ++a) {
      auto& row = m.row(s, a);
      const Outcome move = row.front();
      row = {{move.next, 0.8, move.reward}, {s, 0.2, move.reward}};
    }
  }
  const auto base = value_iteration(m, 1e-12);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto phi = random_potential(rng, m.states, 10.0);
    const auto shaped = value_iteration(shape_tabular(m, phi), 1e-12);
    for (std::size_t s = 0; s < m.states; ++s)
      for (std::size_t a = 0; a < m.actions; ++a) ASSERT_NEAR(shaped.q(s, a), base.q(s, a) - phi[s], 1e-8);
  }
}

TEST(shaping_oracle, rejects_bad_tables) {
  const auto m = make_gridworld(2, 2, {1, 1}, -1.0, 0.9);
  EXPECT_THROW(shape_tabular(m, PotentialTable(3, 0.0)), invalid_input);
  EXPECT_THROW(shape_tabular(m, PotentialTable{0.0, NAN, 0.0, 0.0}), invalid_input);
}

TEST(tabular_q_learning, converges_with_and_without_shaping) {
  const double gamma = 0.9;
  const auto m = make_gridworld(3, 3, {2, 2}, -1.0, gamma);
  const auto vi = value_iteration(m, 1e-12);
  Rng rng(12);
  const auto phi = random_potential(rng, m.states, 5.0);
  const AlphaSchedule alpha = [](std::size_t) { return 0.5; };
  Rng r1(1), r2(2);
  const auto q = tabular_q_learning(m, 200000, alpha, r1);
  const auto qs = tabular_q_learning(shape_tabular(m, phi), 200000, alpha, r2);
  for (std::size_t s = 0; s < m.states; ++s) {
    for (std::size_t a = 0; a < m.actions; ++a) {
      EXPECT_NEAR(q(s, a), vi.q(s, a), 1e-6);
      EXPECT_NEAR(qs(s, a), vi.q(s, a) - phi[s], 1e-6);
    }
  }
  EXPECT_EQ(greedy_sets(q, 1e-4), greedy_sets(vi.q, 1e-4));
  EXPECT_EQ(greedy_sets(qs, 1e-4), greedy_sets(vi.q, 1e-4));
}

TEST(fixtures, load_gridworld_and_potential) {
  const auto grid = write_temp("grid.json", R"({"width": 3, "height": 2, "goal": [2, 1], "step_reward": -2, "gamma": 0.8})");
  const auto m = load_gridworld(grid);
  EXPECT_EQ(m.states, 6u);
  EXPECT_EQ(m.gamma, 0.8);
  EXPECT_TRUE(m.terminal[grid_state(3, {2, 1})]);
  EXPECT_EQ(m.row(0, grid_right).front().reward, -2.0);

  const auto pot = write_temp("pot.json", R"({"values": [0, 1, 2, 3, 4, 5]})");
  const auto phi = load_potential_table(pot);
  EXPECT_EQ(phi.size(), 6u);
  const auto shaped = value_iteration(shape_tabular(m, phi), 1e-12);
  EXPECT_NEAR(shaped.q(1, grid_right), value_iteration(m, 1e-12).q(1, grid_right) - 1.0, 1e-9);
  std::filesystem::remove(grid);
  std::filesystem::remove(pot);
}

TEST(fixtures, reject_malformed_documents) {
  EXPECT_THROW(gridworld_from_json(nlohmann::json::parse(R"({"width": 3, "height": 2, "goal": [2, 1], "colour": 1})")),
               invalid_input);
  EXPECT_THROW(gridworld_from_json(nlohmann::json::parse(R"({"width": 3, "height": 2, "goal": [2]})")), invalid_input);
  EXPECT_THROW(gridworld_from_json(nlohmann::json::parse(R"({"width": "3", "height": 2, "goal": [2, 1]})")),
               invalid_input);
  EXPECT_THROW(potential_table_from_json(nlohmann::json::parse(R"({"values": []})")), invalid_input);
  EXPECT_THROW(load_gridworld("/nonexistent/grid.json"), std::runtime_error);
  const auto broken = write_temp("broken.json", "{not json");
  EXPECT_THROW(load_potential_table(broken), invalid_input);
  std::filesystem::remove(broken);
}
