#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <variant>

#include "hos/core.hpp"
#include "hos/tabular.hpp"

namespace hos {

enum class EnvId { mountain_car, cart_pole, gridworld };

inline std::string_view to_string(EnvId id) {
  switch (id) {
    case EnvId::mountain_car: return "mountain_car";
    case EnvId::cart_pole: return "cart_pole";
    case EnvId::gridworld: return "gridworld";
  }
  return "?";
}

inline EnvId parse_env_id(std::string_view name) {
  if (name == "mountain_car") return EnvId::mountain_car;
  if (name == "cart_pole") return EnvId::cart_pole;
  if (name == "gridworld") return EnvId::gridworld;
  throw invalid_input(concat("unknown environment '", name, "'"));
}

struct EnvSpec {
  EnvId id{EnvId::mountain_car};
  std::size_t state_dim{0};
  std::size_t action_count{0};
  std::size_t max_steps{1};
  double gamma{1.0};

  void validate() const {
    if (action_count < 2) throw invalid_input("environment needs at least two actions");
    if (max_steps < 1) throw invalid_input("max_steps must be at least 1");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw invalid_input("gamma must lie in [0,1]");
  }
};

// Underpowered car in a valley; state is (position, velocity), throttle in {-1, 0, 1}.
struct MountainCar {
  static constexpr double min_position = -1.2;
  static constexpr double max_position = 0.6;
  static constexpr double max_speed = 0.07;
  static constexpr double start_position = -0.5;
  static constexpr std::size_t default_max_steps = 2000;

  EnvSpec spec{EnvId::mountain_car, 2, 3, default_max_steps, 0.99};

  State reset() const { return State{start_position, 0.0}; }
  State reset(Rng&) const { return reset(); }

  Transition step(const State& s, Action a, std::size_t step_index = 1) const {
    if (a >= spec.action_count) throw invalid_input(concat("mountain car action ", a, " out of range"));
    const double throttle = static_cast<double>(a) - 1.0;
    double velocity = clamp(s[1] + 0.001 * throttle - 0.0025 * std::cos(3.0 * s[0]), -max_speed, max_speed);
    const double position = clamp(s[0] + velocity, min_position, max_position);
    if (position == min_position) velocity = 0.0;

    Transition t;
    t.state = s;
    t.action = a;
    t.reward = -1.0;
    t.next_state = State{position, velocity};
    t.step_index = step_index;
    t.terminal = position >= max_position || step_index >= spec.max_steps;
    return t;
  }
};

// Pole on a cart with soft track ends. State order is (angle, angular velocity,
// cart position, cart velocity); action 0 pushes left, action 1 pushes right.
struct CartPole {
  static constexpr double gravity = 9.8;
  static constexpr double cart_mass = 1.0;
  static constexpr double pole_mass = 0.1;
  static constexpr double total_mass = cart_mass + pole_mass;
  static constexpr double half_length = 0.5;
  static constexpr double pole_moment = pole_mass * half_length;
  static constexpr double force_magnitude = 10.0;
  static constexpr double tau = 0.02;
  static constexpr double track_limit = 4.0;
  static constexpr double drop_angle = std::numbers::pi / 4.0;
  static constexpr double start_spread = 0.05;
  static constexpr std::size_t default_max_steps = 1000;

  EnvSpec spec{EnvId::cart_pole, 4, 2, default_max_steps, 0.99};

  State reset(Rng& rng) const {
    State s;
    s.dim = 4;
    for (std::size_t i = 0; i < 4; ++i) s[i] = uniform_real(rng, -start_spread, start_spread);
    return s;
  }

  Transition step(const State& s, Action a, std::size_t step_index = 1) const {
    if (a >= spec.action_count) throw invalid_input(concat("cart-pole action ", a, " out of range"));
    const double angle = s[0], angular_velocity = s[1], position = s[2], velocity = s[3];
    const double force = a == 1 ? force_magnitude : -force_magnitude;

    const double cos_a = std::cos(angle), sin_a = std::sin(angle);
    const double temp = (force + pole_moment * angular_velocity * angular_velocity * sin_a) / total_mass;
    const double angular_acc =
        (gravity * sin_a - cos_a * temp) / (half_length * (4.0 / 3.0 - pole_mass * cos_a * cos_a / total_mass));
    const double acc = temp - pole_moment * angular_acc * cos_a / total_mass;

    State next;
    next.dim = 4;
    next[0] = angle + tau * angular_velocity;
    next[1] = angular_velocity + tau * angular_acc;
    next[2] = position + tau * velocity;
    next[3] = velocity + tau * acc;
    if (next[2] <= -track_limit || next[2] >= track_limit) {
      next[2] = clamp(next[2], -track_limit, track_limit);
      next[3] = 0.0;
    }

    const bool dropped = std::abs(next[0]) > drop_angle;
    Transition t;
    t.state = s;
    t.action = a;
    t.reward = dropped ? -1.0 : 0.0;
    t.next_state = next;
    t.step_index = step_index;
    t.terminal = dropped || step_index >= spec.max_steps;
    return t;
  }
};

// Episodic continuous-state environment. Both variants are pure functions of
// (state, action, step index); only the cart-pole start draw consumes randomness.
class Environment {
 public:
  explicit Environment(MountainCar env) : impl_(env) {}
  explicit Environment(CartPole env) : impl_(env) {}

  const EnvSpec& spec() const {
    return std::visit([](const auto& e) -> const EnvSpec& { return e.spec; }, impl_);
  }
  State reset(Rng& rng) const {
    return std::visit([&](const auto& e) { return e.reset(rng); }, impl_);
  }
  Transition step(const State& s, Action a, std::size_t step_index) const {
    return std::visit([&](const auto& e) { return e.step(s, a, step_index); }, impl_);
  }

 private:
  std::variant<MountainCar, CartPole> impl_;
};

inline Environment make_environment(EnvId id, std::size_t max_steps, double gamma) {
  auto configure = [&](auto env) {
    if (max_steps > 0) env.spec.max_steps = max_steps;
    env.spec.gamma = gamma;
    env.spec.validate();
    return Environment(env);
  };
  switch (id) {
    case EnvId::mountain_car: return configure(MountainCar{});
    case EnvId::cart_pole: return configure(CartPole{});
    case EnvId::gridworld: break;
  }
  throw invalid_input("gridworld is tabular; build it with make_gridworld");
}

// Grid cell, x is the column and y the row.
struct Cell {
  std::size_t x{0};
  std::size_t y{0};
};

enum GridAction : std::size_t { grid_up = 0, grid_right = 1, grid_down = 2, grid_left = 3 };

inline std::size_t grid_state(std::size_t width, Cell c) { return c.y * width + c.x; }

// Deterministic 4-action gridworld. Bumping a wall keeps the position; the goal is
// absorbing with zero reward.
inline TabularMDP make_gridworld(std::size_t width, std::size_t height, Cell goal, double step_reward,
                                 double gamma) {
  if (width == 0 || height == 0) throw invalid_input("gridworld must have at least one cell");
  if (goal.x >= width || goal.y >= height) throw invalid_input("gridworld goal lies outside the grid");

  TabularMDP m;
  m.states = width * height;
  m.actions = 4;
  m.gamma = gamma;
  m.outcomes.resize(m.states * m.actions);
  m.terminal.assign(m.states, false);
  const std::size_t goal_state = grid_state(width, goal);
  m.terminal[goal_state] = true;

  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t s = grid_state(width, {x, y});
      for (std::size_t a = 0; a < 4; ++a) {
        if (s == goal_state) {
          m.row(s, a) = {Outcome{s, 1.0, 0.0}};
          continue;
        }
        Cell next{x, y};
        switch (a) {
          case grid_up: next.y = y + 1 < height ? y + 1 : y; break;
          case grid_right: next.x = x + 1 < width ? x + 1 : x; break;
          case grid_down: next.y = y > 0 ? y - 1 : y; break;
          case grid_left: next.x = x > 0 ? x - 1 : x; break;
        }
        m.row(s, a) = {Outcome{grid_state(width, next), 1.0, step_reward}};
      }
    }
  }
  m.validate();
  return m;
}

}  // namespace hos
