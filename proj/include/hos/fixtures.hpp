#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "hos/core.hpp"
#include "hos/envs.hpp"
#include "hos/tabular.hpp"

namespace hos {

// Gridworld fixture:
//   {"width": 5, "height": 5, "goal": [4, 4], "step_reward": -1, "gamma": 0.95}
// Potential fixture, one value per discrete state (state = y * width + x for gridworlds):
//   {"values": [0.0, 0.5, ...]}

namespace detail {
inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(concat("cannot open ", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw invalid_input(concat(path.string(), ": ", e.what()));
  }
}

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                                const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw invalid_input(concat(where, ": unknown key '", key, "'"));
}
}  // namespace detail

inline TabularMDP gridworld_from_json(const nlohmann::json& j, const std::string& where = "gridworld") {
  detail::reject_unknown_keys(j, {"width", "height", "goal", "step_reward", "gamma"}, where);
  try {
    const auto goal = j.at("goal").get<std::vector<std::size_t>>();
    if (goal.size() != 2) throw invalid_input(concat(where, ".goal: expected [x, y]"));
    return make_gridworld(j.at("width").get<std::size_t>(), j.at("height").get<std::size_t>(), {goal[0], goal[1]},
                          j.value("step_reward", -1.0), j.value("gamma", 0.95));
  } catch (const nlohmann::json::exception& e) {
    throw invalid_input(concat(where, ": ", e.what()));
  }
}

inline PotentialTable potential_table_from_json(const nlohmann::json& j, const std::string& where = "potential") {
  detail::reject_unknown_keys(j, {"values"}, where);
  try {
    auto values = j.at("values").get<PotentialTable>();
    if (values.empty()) throw invalid_input(concat(where, ".values: empty table"));
    return values;
  } catch (const nlohmann::json::exception& e) {
    throw invalid_input(concat(where, ": ", e.what()));
  }
}

inline TabularMDP load_gridworld(const std::filesystem::path& path) {
  return gridworld_from_json(detail::read_json(path), path.string());
}

inline PotentialTable load_potential_table(const std::filesystem::path& path) {
  return potential_table_from_json(detail::read_json(path), path.string());
}

}  // namespace hos
