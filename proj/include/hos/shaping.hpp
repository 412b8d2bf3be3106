#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hos/core.hpp"
#include "hos/envs.hpp"
#include "hos/tabular.hpp"

namespace hos {

enum class PotentialKind { mc_position, mc_height, mc_speed, cp_angle, cp_angular_speed, custom_tabular };

inline std::string_view to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::mc_position: return "mc_position";
    case PotentialKind::mc_height: return "mc_height";
    case PotentialKind::mc_speed: return "mc_speed";
    case PotentialKind::cp_angle: return "cp_angle";
    case PotentialKind::cp_angular_speed: return "cp_angular_speed";
    case PotentialKind::custom_tabular: return "custom_tabular";
  }
  return "?";
}

inline PotentialKind parse_potential_kind(std::string_view name) {
  for (auto k : {PotentialKind::mc_position, PotentialKind::mc_height, PotentialKind::mc_speed,
                 PotentialKind::cp_angle, PotentialKind::cp_angular_speed, PotentialKind::custom_tabular})
    if (to_string(k) == name) return k;
  throw invalid_input(concat("unknown potential kind '", name, "'"));
}

inline bool compatible(PotentialKind k, EnvId env) {
  switch (k) {
    case PotentialKind::mc_position:
    case PotentialKind::mc_height:
    case PotentialKind::mc_speed: return env == EnvId::mountain_car;
    case PotentialKind::cp_angle:
    case PotentialKind::cp_angular_speed: return env == EnvId::cart_pole;
    case PotentialKind::custom_tabular: return env == EnvId::gridworld;
  }
  return false;
}

// How the mountain-car speed potential normalizes velocity before squaring.
// `shifted` maps [-0.07, 0.07] onto [0, 1] (rest -> 0.25); `magnitude` maps |v| onto [0, 1] (rest -> 0).
enum class SpeedForm { shifted, magnitude };

struct PotentialSpec {
  PotentialKind kind{PotentialKind::mc_position};
  double scale{1.0};
  SpeedForm speed_form{SpeedForm::shifted};
  double max_angular_speed{4.0};  // normalization bound for cp_angular_speed
  PotentialTable table;           // custom_tabular only, indexed by discrete state

  void validate() const {
    if (!std::isfinite(scale) || scale < 0.0) throw invalid_input("potential scale must be finite and non-negative");
    if (kind == PotentialKind::cp_angular_speed && !(max_angular_speed > 0.0))
      throw invalid_input("max_angular_speed must be positive");
    if (kind == PotentialKind::custom_tabular && table.empty())
      throw invalid_input("custom_tabular potential needs a table");
  }
};

namespace detail {
inline void require_dim(const State& s, std::size_t dim, PotentialKind k) {
  if (s.dim != dim)
    throw invalid_input(concat("potential ", to_string(k), " expects a ", dim, "-dimensional state, got ", s.dim));
}
inline double unit(double v, double lo, double hi) { return (clamp(v, lo, hi) - lo) / (hi - lo); }
}  // namespace detail

// Unscaled potential of `s`. Mountain-car potentials lie in [0,1], cart-pole ones in [-1,0].
inline double potential(const PotentialSpec& spec, const State& s) {
  using detail::unit;
  switch (spec.kind) {
    case PotentialKind::mc_position:
      detail::require_dim(s, 2, spec.kind);
      return unit(s[0], MountainCar::min_position, MountainCar::max_position);
    case PotentialKind::mc_height:
      detail::require_dim(s, 2, spec.kind);
      return unit(std::sin(3.0 * s[0]), -1.0, 1.0);
    case PotentialKind::mc_speed: {
      detail::require_dim(s, 2, spec.kind);
      const double v = spec.speed_form == SpeedForm::shifted
                           ? unit(s[1], -MountainCar::max_speed, MountainCar::max_speed)
                           : unit(std::abs(s[1]), 0.0, MountainCar::max_speed);
      return v * v;
    }
    case PotentialKind::cp_angle: {
      detail::require_dim(s, 4, spec.kind);
      const double a = unit(std::abs(s[0]), 0.0, CartPole::drop_angle);
      return -(a * a);
    }
    case PotentialKind::cp_angular_speed: {
      detail::require_dim(s, 4, spec.kind);
      const double w = unit(std::abs(s[1]), 0.0, spec.max_angular_speed);
      return -(w * w);
    }
    case PotentialKind::custom_tabular: {
      detail::require_dim(s, 1, spec.kind);
      const auto idx = static_cast<std::size_t>(s[0]);
      if (s[0] < 0.0 || idx >= spec.table.size())
        throw invalid_input(concat("state ", s[0], " outside the potential table"));
      return spec.table[idx];
    }
  }
  throw invalid_input("unknown potential kind");
}

// Scaled potential-based shaping reward c * (gamma * phi(s') - phi(s)).
inline double shaping_reward(double phi_s, double phi_next, double gamma, double scale) {
  return scale * (gamma * phi_next - phi_s);
}

// Reward signal of one demon: the base reward alone, or base plus scaled shaping.
struct ShapingAssignment {
  std::string id;
  std::optional<PotentialSpec> potential;

  bool is_base() const { return !potential.has_value(); }
};

// Component j belongs to demons[j].
struct ShapedRewardVector {
  double base{0.0};
  std::vector<double> components;
};

inline double shaped_reward(const ShapingAssignment& demon, const Transition& t, double gamma) {
  if (demon.is_base()) return t.reward;
  const auto& p = *demon.potential;
  return t.reward + shaping_reward(potential(p, t.state), potential(p, t.next_state), gamma, p.scale);
}

inline ShapedRewardVector build_reward_vector(const Transition& t, std::span<const ShapingAssignment> demons,
                                              double gamma) {
  ShapedRewardVector out;
  out.base = t.reward;
  out.components.reserve(demons.size());
  for (const auto& d : demons) out.components.push_back(shaped_reward(d, t, gamma));
  return out;
}

}  // namespace hos
