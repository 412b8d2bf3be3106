#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace hos {

// Raised for any input a contract rejects (bad action index, dimension mismatch, ...).
struct invalid_input : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised when a learner produces or receives a non-finite quantity.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename... Ts>
std::string concat(Ts&&... parts) {
  std::ostringstream oss;
  (oss << ... << std::forward<Ts>(parts));
  return oss.str();
}

inline constexpr std::size_t kMaxStateDim = 4;

// Fixed-capacity continuous state; `dim` coordinates are meaningful.
struct State {
  std::array<double, kMaxStateDim> coords{};
  std::size_t dim{0};

  State() = default;
  State(std::initializer_list<double> values) {
    if (values.size() > kMaxStateDim) throw invalid_input("state has too many coordinates");
    for (double v : values) coords[dim++] = v;
  }

  double operator[](std::size_t i) const { return coords[i]; }
  double& operator[](std::size_t i) { return coords[i]; }
  std::span<const double> view() const { return {coords.data(), dim}; }

  friend bool operator==(const State& a, const State& b) {
    if (a.dim != b.dim) return false;
    for (std::size_t i = 0; i < a.dim; ++i)
      if (a.coords[i] != b.coords[i]) return false;
    return true;
  }
};

using Action = std::size_t;

struct Transition {
  State state;
  Action action{0};
  double reward{0.0};
  State next_state;
  bool terminal{false};
  std::size_t step_index{0};  // 1-based index of this step within its episode
};

using Rng = std::mt19937_64;

// Named RNG streams derived from one master seed. Each (run, stream) pair gets an
// independent generator so that evaluation never perturbs the learning stream.
enum class Stream : std::uint32_t { behavior = 1, environment = 2, evaluation = 3, tie_break = 4 };

inline Rng make_stream(std::uint64_t master_seed, std::uint64_t run, Stream stream,
                       std::uint64_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(sub),
                    static_cast<std::uint32_t>(sub >> 32)};
  return Rng(seq);
}

// Uniform draw from [0, n) that does not depend on the standard library's
// distribution implementation, so streams are portable across toolchains.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw invalid_input("uniform_index over an empty range");
  const std::uint64_t range = n;
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % range);
}

// Uniform real in [lo, hi) from the top 53 bits of one draw.
inline double uniform_real(Rng& rng, double lo, double hi) {
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

inline double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace hos
