#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hos/shaping.hpp"

using namespace hos;

namespace {
PotentialSpec spec(PotentialKind k, double scale = 1.0) {
  PotentialSpec p;
  p.kind = k;
  p.scale = scale;
  return p;
}
}  // namespace

TEST(potential, mountain_car_position_endpoints) {
  const auto p = spec(PotentialKind::mc_position);
  EXPECT_EQ(potential(p, State{-1.2, 0.0}), 0.0);
  EXPECT_EQ(potential(p, State{0.6, 0.0}), 1.0);
  EXPECT_NEAR(potential(p, State{-0.5, 0.0}), 0.7 / 1.8, 1e-15);
}

TEST(potential, mountain_car_height_and_speed) {
  const auto h = spec(PotentialKind::mc_height);
  EXPECT_NEAR(potential(h, State{-std::numbers::pi / 6.0, 0.0}), 0.0, 1e-15);  // valley floor
  EXPECT_NEAR(potential(h, State{std::numbers::pi / 6.0, 0.0}), 1.0, 1e-15);   // off-track crest of sin(3x)

  auto v = spec(PotentialKind::mc_speed);
  EXPECT_NEAR(potential(v, State{0.0, 0.0}), 0.25, 1e-15);
  EXPECT_EQ(potential(v, State{0.0, 0.07}), 1.0);
  EXPECT_EQ(potential(v, State{0.0, -0.07}), 0.0);
  v.speed_form = SpeedForm::magnitude;
  EXPECT_EQ(potential(v, State{0.0, 0.0}), 0.0);
  EXPECT_EQ(potential(v, State{0.0, -0.07}), 1.0);
}

TEST(potential, cart_pole) {
  const auto angle = spec(PotentialKind::cp_angle);
  const auto speed = spec(PotentialKind::cp_angular_speed);
  EXPECT_EQ(potential(angle, State{0.0, 0.0, 0.0, 0.0}), -0.0);
  EXPECT_NEAR(potential(angle, State{std::numbers::pi / 8.0, 0.0, 0.0, 0.0}), -0.25, 1e-15);
  EXPECT_EQ(potential(angle, State{-1.0, 0.0, 0.0, 0.0}), -1.0);  // beyond the drop angle, clipped
  EXPECT_NEAR(potential(speed, State{0.0, -2.0, 0.0, 0.0}), -0.25, 1e-15);
  EXPECT_EQ(potential(speed, State{0.0, 9.0, 0.0, 0.0}), -1.0);
}

TEST(potential, kind_environment_mismatch) {
  EXPECT_THROW(potential(spec(PotentialKind::cp_angle), State{-0.5, 0.0}), invalid_input);
  EXPECT_THROW(potential(spec(PotentialKind::mc_height), State{0.0, 0.0, 0.0, 0.0}), invalid_input);
  EXPECT_FALSE(compatible(PotentialKind::mc_speed, EnvId::cart_pole));
  EXPECT_TRUE(compatible(PotentialKind::cp_angular_speed, EnvId::cart_pole));
}

TEST(potential, built_ins_are_bounded) {
  Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    const State mc{uniform_real(rng, -1.2, 0.6), uniform_real(rng, -0.07, 0.07)};
    for (auto k : {PotentialKind::mc_position, PotentialKind::mc_height, PotentialKind::mc_speed}) {
      const double v = potential(spec(k), mc);
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    const State cp{uniform_real(rng, -2, 2), uniform_real(rng, -10, 10), uniform_real(rng, -4, 4),
                   uniform_real(rng, -5, 5)};
    for (auto k : {PotentialKind::cp_angle, PotentialKind::cp_angular_speed}) {
      const double v = potential(spec(k), cp);
      ASSERT_GE(v, -1.0);
      ASSERT_LE(v, 0.0);
    }
  }
}

TEST(potential, custom_table) {
  PotentialSpec p = spec(PotentialKind::custom_tabular);
  p.table = {0.5, -1.0, 2.0};
  State s;
  s.dim = 1;
  s[0] = 2;
  EXPECT_EQ(potential(p, s), 2.0);
  s[0] = 3;
  EXPECT_THROW(potential(p, s), invalid_input);
}

TEST(shaping_reward, direct_evaluation) {
  EXPECT_EQ(shaping_reward(0.0, 0.0, 0.99, 5.0), 0.0);
  EXPECT_EQ(shaping_reward(0.7, 0.7, 1.0, 3.0), 0.0);
  EXPECT_NEAR(shaping_reward(0.5, 0.6, 0.99, 1.0), 0.094, 1e-15);
}

TEST(shaping_reward, linear_in_scale) {
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const double a = uniform_real(rng, -2, 2), b = uniform_real(rng, -2, 2), g = uniform_real(rng, 0, 1),
                 c = uniform_real(rng, 0, 1000);
    ASSERT_EQ(shaping_reward(a, b, g, c), c * shaping_reward(a, b, g, 1.0));
  }
}

TEST(shaping_reward, telescopes_along_trajectories) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> table(20);
    for (auto& v : table) v = uniform_real(rng, -10, 10);
    const double gamma = uniform_real(rng, 0.5, 1.0);
    const std::size_t length = 1 + uniform_index(rng, 60);
    std::vector<std::size_t> states{uniform_index(rng, table.size())};
    for (std::size_t t = 0; t < length; ++t) states.push_back(uniform_index(rng, table.size()));
    double sum = 0.0, discount = 1.0;
    for (std::size_t t = 0; t < length; ++t) {
      sum += discount * shaping_reward(table[states[t]], table[states[t + 1]], gamma, 1.0);
      discount *= gamma;
    }
    EXPECT_NEAR(sum, discount * table[states.back()] - table[states.front()], 1e-9);
  }
}

TEST(reward_vector, base_and_shaped_components) {
  Transition t;
  t.state = State{-0.5, 0.0};
  t.next_state = State{-0.49917684300416926, 0.0008231569958307428};
  t.reward = -1.0;
  const std::vector<ShapingAssignment> demons{{"base", std::nullopt},
                                              {"pos10", spec(PotentialKind::mc_position, 10.0)},
                                              {"zero", spec(PotentialKind::mc_height, 0.0)}};
  const auto r = build_reward_vector(t, demons, 0.99);
  ASSERT_EQ(r.components.size(), 3u);
  EXPECT_EQ(r.base, -1.0);
  EXPECT_EQ(r.components[0], -1.0);
  // -1 + 10 * (0.99 * phi(s') - phi(s)), evaluated by hand.
  EXPECT_NEAR(r.components[1], -1.0343615254118195, 1e-12);
  EXPECT_EQ(r.components[2], -1.0);

  const std::vector<ShapingAssignment> base_only{{"base", std::nullopt}};
  EXPECT_EQ(build_reward_vector(t, base_only, 0.99).components, std::vector<double>{-1.0});
}

TEST(potential_spec, validation) {
  auto p = spec(PotentialKind::mc_position, -1.0);
  EXPECT_THROW(p.validate(), invalid_input);
  p.scale = std::numeric_limits<double>::infinity();
  EXPECT_THROW(p.validate(), invalid_input);
  EXPECT_THROW(spec(PotentialKind::custom_tabular).validate(), invalid_input);
}
