#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hos/core.hpp"
#include "hos/shaping.hpp"
#include "hos/tilecoding.hpp"

namespace hos {

struct DemonParams {
  double alpha{0.1};   // step size for theta
  double beta{1e-4};   // step size for the correction weights w
  double lambda{0.0};  // trace decay
  double gamma{0.99};

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw invalid_input("alpha must be positive");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw invalid_input("beta must be non-negative");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw invalid_input("lambda must lie in [0,1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw invalid_input("gamma must lie in [0,1]");
  }
};

// Eligibility trace over a dense index space, storing only the non-zero entries.
// `slot_` maps a feature index to its position in `entries_`, or npos.
class SparseTrace {
 public:
  struct Entry {
    std::size_t index;
    double value;
  };

  SparseTrace() = default;
  explicit SparseTrace(std::size_t total_dim) : slot_(total_dim, npos) {}

  std::size_t total_dim() const { return slot_.size(); }
  std::span<const Entry> entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  void clear() {
    for (const auto& e : entries_) slot_[e.index] = npos;
    entries_.clear();
  }

  void scale(double factor) {
    if (factor == 0.0) {
      clear();
      return;
    }
    for (auto& e : entries_) e.value *= factor;
  }

  void add(std::size_t index, double value) {
    auto& slot = slot_[index];
    if (slot == npos) {
      slot = static_cast<std::uint32_t>(entries_.size());
      entries_.push_back({index, value});
    } else {
      entries_[slot].value += value;
    }
  }

  double get(std::size_t index) const {
    const auto slot = slot_[index];
    return slot == npos ? 0.0 : entries_[slot].value;
  }

  std::vector<double> dense() const {
    std::vector<double> out(total_dim(), 0.0);
    for (const auto& e : entries_) out[e.index] = e.value;
    return out;
  }

 private:
  static constexpr std::uint32_t npos = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> slot_;
  std::vector<Entry> entries_;
};

struct DemonState {
  std::string id;
  std::vector<double> theta;
  std::vector<double> w;
  SparseTrace trace;
  DemonParams params;
  ShapingAssignment shaping;

  DemonState() = default;
  DemonState(std::string demon_id, std::size_t total_dim, DemonParams p, ShapingAssignment assignment = {})
      : id(std::move(demon_id)),
        theta(total_dim, 0.0),
        w(total_dim, 0.0),
        trace(total_dim),
        params(p),
        shaping(std::move(assignment)) {
    params.validate();
    if (shaping.id.empty()) shaping.id = id;
  }

  std::size_t total_dim() const { return theta.size(); }
  void begin_episode() { trace.clear(); }
};

struct GreedyChoice {
  Action action{0};
  std::vector<double> q;
};

// Q-value of action `a` given the state's tile code (indices relative to an action block).
inline double q_from_code(std::span<const double> theta, std::span<const std::size_t> code, std::size_t block,
                          Action a) {
  const double* base = theta.data() + a * block;
  double q = 0.0;
  for (std::size_t i : code) q += base[i];
  return q;
}

// Argmax with ties broken toward the lowest action index. Writes every Q-value into `q`.
inline Action greedy_from_code(std::span<const double> theta, std::span<const std::size_t> code,
                               std::size_t block, std::span<double> q) {
  Action best = 0;
  for (Action a = 0; a < q.size(); ++a) {
    q[a] = q_from_code(theta, code, block, a);
    if (q[a] > q[best]) best = a;
  }
  return best;
}

inline GreedyChoice greedy_action(const DemonState& d, const TileCoder& coder, const State& s) {
  std::vector<std::size_t> code = coder.encode_state(s);
  GreedyChoice choice;
  choice.q.resize(coder.action_count());
  choice.action = greedy_from_code(d.theta, code, coder.action_block(), choice.q);
  return choice;
}

inline double td_error(double q_sa, double q_next_greedy, double reward, double gamma, bool terminal) {
  return reward + gamma * q_next_greedy * (terminal ? 0.0 : 1.0) - q_sa;
}

namespace detail {

// theta += alpha * [delta * e - gamma * (1 - lambda) * (e.w) * phi_next]
// w     += beta  * [delta * e - (phi.w) * phi]
// Both inner products use w before the update. With e = phi and lambda = 0 this is
// exactly the TDC update, evaluated in the same operation order.
inline void gq_kernel(DemonState& d, std::span<const SparseTrace::Entry> trace,
                      std::span<const std::size_t> phi, std::span<const std::size_t> phi_next, double delta,
                      double lambda) {
  const auto& p = d.params;
  double trace_dot_w = 0.0;
  for (const auto& e : trace) trace_dot_w += e.value * d.w[e.index];
  double phi_dot_w = 0.0;
  for (std::size_t i : phi) phi_dot_w += d.w[i];
  if (!std::isfinite(trace_dot_w) || !std::isfinite(phi_dot_w))
    throw numerical_error(concat("demon '", d.id, "': non-finite correction term"));

  for (const auto& e : trace) d.theta[e.index] += p.alpha * (delta * e.value);
  const double correction = p.alpha * (p.gamma * (1.0 - lambda) * trace_dot_w);
  for (std::size_t i : phi_next) d.theta[i] -= correction;

  for (const auto& e : trace) d.w[e.index] += p.beta * (delta * e.value);
  const double w_decay = p.beta * phi_dot_w;
  for (std::size_t i : phi) d.w[i] -= w_decay;

  for (const auto& e : trace)
    if (!std::isfinite(d.theta[e.index]) || !std::isfinite(d.w[e.index]))
      throw numerical_error(concat("demon '", d.id, "': weights diverged at index ", e.index));
}

inline void check_dims(const DemonState& d, const SparseFeatures& f) {
  if (f.total_dim != d.total_dim())
    throw invalid_input(concat("demon '", d.id, "': feature dimension ", f.total_dim, " != weight dimension ",
                               d.total_dim()));
}

}  // namespace detail

// One TDC step on binary features: theta += alpha*delta*phi - alpha*gamma*(phi.w)*phi',
// w += beta*(delta - phi.w)*phi. The demon's trace is left untouched.
inline void tdc_update(DemonState& d, const SparseFeatures& phi, const SparseFeatures& phi_next, double delta) {
  detail::check_dims(d, phi);
  if (!phi_next.empty()) detail::check_dims(d, phi_next);
  if (!std::isfinite(delta)) throw numerical_error(concat("demon '", d.id, "': non-finite TD error"));
  std::vector<SparseTrace::Entry> as_trace;
  as_trace.reserve(phi.active_indices.size());
  for (std::size_t i : phi.active_indices) as_trace.push_back({i, 1.0});
  detail::gq_kernel(d, as_trace, phi.active_indices, phi_next.active_indices, delta, 0.0);
}

// Scratch buffers reused across steps so the per-transition path does not allocate.
struct StepScratch {
  std::vector<std::size_t> phi;
  std::vector<std::size_t> phi_next;
  std::vector<double> q;
};

// Greedy-GQ(lambda) step on pre-computed tile codes of s and s'. `code_next` is ignored
// for terminal transitions (next features are the zero vector).
inline double greedy_gq_lambda_step_coded(DemonState& d, std::span<const std::size_t> code,
                                          std::span<const std::size_t> code_next, std::size_t block,
                                          std::size_t action_count, const Transition& t, double shaped_reward,
                                          StepScratch& scratch) {
  if (!std::isfinite(shaped_reward)) throw numerical_error(concat("demon '", d.id, "': non-finite reward"));
  if (t.action >= action_count) throw invalid_input(concat("demon '", d.id, "': action out of range"));
  const auto& p = d.params;
  scratch.q.resize(action_count);

  // Watkins cut: the inherited trace survives only if the taken action is greedy at s.
  greedy_from_code(d.theta, code, block, scratch.q);
  double q_max = scratch.q[0];
  for (double q : scratch.q) q_max = q > q_max ? q : q_max;
  const double q_sa = scratch.q[t.action];
  const bool taken_greedy = q_sa >= q_max;

  scratch.phi.resize(code.size());
  for (std::size_t k = 0; k < code.size(); ++k) scratch.phi[k] = code[k] + t.action * block;

  double q_next = 0.0;
  scratch.phi_next.clear();
  if (!t.terminal) {
    const Action next = greedy_from_code(d.theta, code_next, block, scratch.q);
    q_next = scratch.q[next];
    for (std::size_t i : code_next) scratch.phi_next.push_back(i + next * block);
  }

  const double delta = td_error(q_sa, q_next, shaped_reward, p.gamma, t.terminal);
  if (!std::isfinite(delta)) throw numerical_error(concat("demon '", d.id, "': non-finite TD error"));

  d.trace.scale(taken_greedy ? p.gamma * p.lambda : 0.0);
  for (std::size_t i : scratch.phi) d.trace.add(i, 1.0);

  detail::gq_kernel(d, d.trace.entries(), scratch.phi, scratch.phi_next, delta, p.lambda);
  return delta;
}

// Greedy-GQ(lambda) on one transition with the demon's own shaped reward. The behavior
// probability only has to be positive: the target policy is greedy, so the trace is cut
// rather than importance-weighted.
inline double greedy_gq_lambda_step(DemonState& d, const TileCoder& coder, const Transition& t,
                                    double shaped_reward, double behavior_prob) {
  if (!(behavior_prob > 0.0)) throw invalid_input("behavior probability must be positive");
  if (coder.total_dim() != d.total_dim())
    throw invalid_input(concat("demon '", d.id, "': tile coder dimension mismatch"));
  const auto code = coder.encode_state(t.state);
  const auto code_next = coder.encode_state(t.next_state);
  StepScratch scratch;
  return greedy_gq_lambda_step_coded(d, code, code_next, coder.action_block(), coder.action_count(), t,
                                     shaped_reward, scratch);
}

// Binary snapshot: "HOSDEMON", u32 version, u32 id length, id bytes, u64 dim,
// dim f64 theta, dim f64 w. All integers and doubles little-endian.
struct DemonSnapshot {
  std::string id;
  std::vector<double> theta;
  std::vector<double> w;

  friend bool operator==(const DemonSnapshot&, const DemonSnapshot&) = default;
};

inline constexpr char kSnapshotMagic[8] = {'H', 'O', 'S', 'D', 'E', 'M', 'O', 'N'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

inline DemonSnapshot snapshot(const DemonState& d) { return {d.id, d.theta, d.w}; }

inline void write_snapshot(std::ostream& out, const DemonSnapshot& s) {
  if (s.theta.size() != s.w.size()) throw invalid_input("snapshot theta and w lengths differ");
  const auto id_len = static_cast<std::uint32_t>(s.id.size());
  const auto dim = static_cast<std::uint64_t>(s.theta.size());
  out.write(kSnapshotMagic, sizeof kSnapshotMagic);
  out.write(reinterpret_cast<const char*>(&kSnapshotVersion), sizeof kSnapshotVersion);
  out.write(reinterpret_cast<const char*>(&id_len), sizeof id_len);
  out.write(s.id.data(), id_len);
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  out.write(reinterpret_cast<const char*>(s.theta.data()), static_cast<std::streamsize>(dim * sizeof(double)));
  out.write(reinterpret_cast<const char*>(s.w.data()), static_cast<std::streamsize>(dim * sizeof(double)));
  if (!out) throw std::runtime_error(concat("failed to write snapshot of demon '", s.id, "'"));
}

inline DemonSnapshot read_snapshot(std::istream& in) {
  char magic[8];
  std::uint32_t version = 0, id_len = 0;
  std::uint64_t dim = 0;
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kSnapshotMagic, sizeof magic) != 0) throw invalid_input("not a demon snapshot");
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (!in || version != kSnapshotVersion) throw invalid_input("unsupported snapshot version");
  in.read(reinterpret_cast<char*>(&id_len), sizeof id_len);
  DemonSnapshot s;
  s.id.resize(id_len);
  in.read(s.id.data(), id_len);
  in.read(reinterpret_cast<char*>(&dim), sizeof dim);
  if (!in) throw invalid_input("truncated snapshot header");
  s.theta.resize(dim);
  s.w.resize(dim);
  in.read(reinterpret_cast<char*>(s.theta.data()), static_cast<std::streamsize>(dim * sizeof(double)));
  in.read(reinterpret_cast<char*>(s.w.data()), static_cast<std::streamsize>(dim * sizeof(double)));
  if (!in) throw invalid_input(concat("truncated snapshot body for demon '", s.id, "'"));
  return s;
}

}  // namespace hos
