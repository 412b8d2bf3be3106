#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hos/core.hpp"

namespace hos {

struct TileCoderSpec {
  std::size_t dims{1};
  std::size_t bins_per_dim{10};
  std::size_t tilings{10};
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t action_count{1};

  void validate() const {
    if (dims == 0 || dims > kMaxStateDim) throw invalid_input("tile coder dims out of range");
    if (bins_per_dim < 1) throw invalid_input("bins_per_dim must be at least 1");
    if (tilings < 1) throw invalid_input("tilings must be at least 1");
    if (action_count < 1) throw invalid_input("tile coder needs at least one action");
    if (lower.size() != dims || upper.size() != dims) throw invalid_input("tile coder bounds do not match dims");
    for (std::size_t d = 0; d < dims; ++d)
      if (!(lower[d] < upper[d])) throw invalid_input(concat("tile coder bounds not ordered in dimension ", d));
  }
};

// Binary feature vector: the listed indices are 1, everything else is 0.
struct SparseFeatures {
  std::vector<std::size_t> active_indices;
  std::size_t total_dim{0};

  bool empty() const { return active_indices.empty(); }
  friend bool operator==(const SparseFeatures&, const SparseFeatures&) = default;
};

// Grid tile coder with uniform diagonal offsets and one weight block per action.
// Tiling i is shifted by i / (tilings * bins) of the range in every dimension.
class TileCoder {
 public:
  TileCoder() = default;
  explicit TileCoder(TileCoderSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    cells_per_tiling_ = 1;
    for (std::size_t d = 0; d < spec_.dims; ++d) cells_per_tiling_ *= spec_.bins_per_dim;
    block_ = spec_.tilings * cells_per_tiling_;
  }

  const TileCoderSpec& spec() const { return spec_; }
  std::size_t tilings() const { return spec_.tilings; }
  std::size_t action_count() const { return spec_.action_count; }
  std::size_t action_block() const { return block_; }
  std::size_t total_dim() const { return block_ * spec_.action_count; }

  // Active tile of every tiling for state `s`, relative to the start of an action block.
  // Writes exactly `tilings` ascending indices into `out`.
  void encode_state(const State& s, std::span<std::size_t> out) const {
    const double bins = static_cast<double>(spec_.bins_per_dim);
    const double shift_unit = 1.0 / (static_cast<double>(spec_.tilings) * bins);
    std::array<double, kMaxStateDim> unit{};
    for (std::size_t d = 0; d < spec_.dims; ++d) {
      const double lo = spec_.lower[d], hi = spec_.upper[d];
      unit[d] = (clamp(s[d], lo, hi) - lo) / (hi - lo);
    }
    for (std::size_t t = 0; t < spec_.tilings; ++t) {
      const double shift = static_cast<double>(t) * shift_unit;
      std::size_t cell = 0, stride = 1;
      for (std::size_t d = 0; d < spec_.dims; ++d) {
        auto c = static_cast<std::size_t>(std::floor((unit[d] + shift) * bins));
        if (c >= spec_.bins_per_dim) c = spec_.bins_per_dim - 1;
        cell += c * stride;
        stride *= spec_.bins_per_dim;
      }
      out[t] = t * cells_per_tiling_ + cell;
    }
  }

  std::vector<std::size_t> encode_state(const State& s) const {
    std::vector<std::size_t> out(spec_.tilings);
    encode_state(s, out);
    return out;
  }

  SparseFeatures encode(const State& s, Action a) const {
    if (a >= spec_.action_count) throw invalid_input(concat("action ", a, " out of range for tile coder"));
    SparseFeatures f;
    f.total_dim = total_dim();
    f.active_indices = encode_state(s);
    for (auto& i : f.active_indices) i += a * block_;
    return f;
  }

 private:
  TileCoderSpec spec_;
  std::size_t cells_per_tiling_{1};
  std::size_t block_{0};
};

inline double q_value(std::span<const double> theta, const SparseFeatures& f) {
  if (theta.size() != f.total_dim)
    throw invalid_input(concat("weight length ", theta.size(), " does not match feature dimension ", f.total_dim));
  double q = 0.0;
  for (std::size_t i : f.active_indices) q += theta[i];
  return q;
}

}  // namespace hos
