// mop/decoder.hpp

// Copyright 2026 The mop Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Streaming forward decoding on a sliding window of states.
//
// Each frame the forward mass is propagated one step along the chain
// (self and next transitions only), weighted by the emission scores,
// renormalized, and then truncated to a window of 2p+1 states around the
// rounded progression index. The log of every pre-normalization sum is
// accumulated as the stream log-likelihood. When the window covers the
// whole chain this is exactly the unwindowed forward recursion.

#ifndef MOP_DECODER_HPP_
#define MOP_DECODER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mop/core.hpp"
#include "mop/training.hpp"

namespace mop {

struct WindowBounds {
  std::size_t lo = 1;
  std::size_t hi = 1;
  bool operator==(const WindowBounds &) const = default;
};

/// Nearest state index, ties toward the larger index, clamped to [1, n].
inline std::size_t RoundState(double mu, std::size_t n) {
  const double r = std::floor(mu + 0.5);
  if (!(r >= 1.0)) return 1;
  if (r >= static_cast<double>(n)) return n;
  return static_cast<std::size_t>(r);
}

/// Active window for progression `mu` with half width `p` on an n-state
/// chain. The tail case uses max(n - 2p, 1) so all three cases share the
/// 2p+1 width; `fixed_tail` reproduces the fixed n - 2 lower bound.
inline WindowBounds window_bounds(double mu, std::size_t p, std::size_t n,
                                  bool fixed_tail = false) {
  const std::size_t c = RoundState(mu, n);
  if (c <= p) return {1, std::min(2 * p + 1, n)};
  if (c + p <= n) return {c - p, c + p};
  if (fixed_tail) return {n > 2 ? n - 2 : 1, n};
  return {n > 2 * p ? n - 2 * p : 1, n};
}

struct Moments {
  double mu = 1.0;
  double var = 0.0;
};

/// First moment and variance of a normalized distribution stored on
/// [lo, lo + alpha.size() - 1].
inline Moments outputs(std::span<const double> alpha, std::size_t lo) {
  Moments m{0.0, 0.0};
  for (std::size_t k = 0; k < alpha.size(); ++k)
    m.mu += static_cast<double>(lo + k) * alpha[k];
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    const double dev = static_cast<double>(lo + k) - m.mu;
    m.var += dev * dev * alpha[k];
  }
  return m;
}

inline double progression_seconds(double mu, const FollowerModel &model) {
  return mu / model.rate;
}

inline double progression_seconds(const FollowerOutput &out,
                                  const FollowerModel &model) {
  return progression_seconds(out.progress_states, model);
}

struct DecodeOptions {
  std::optional<std::size_t> half_window;  // overrides the model's p
  bool fixed_tail = false;
};

struct ConfidenceGate {
  double loglik_floor = -25.0;
  double var_threshold = 25.0;

  static ConfidenceGate From(const TrainConfig &cfg) {
    return {cfg.loglik_floor, cfg.var_threshold};
  }
};

namespace detail {

inline std::size_t HalfWindow(const FollowerModel &m, const DecodeOptions &o) {
  return std::max<std::size_t>(1, o.half_window.value_or(m.half_window));
}

// The frame in model space. Standardized models write into `scratch`.
inline std::span<const double> MapFrame(const FollowerModel &m, const Frame &o,
                                        std::vector<double> &scratch) {
  if (o.dims() != m.dims())
    throw DimensionError("frame has " + std::to_string(o.dims()) +
                         " dims, model '" + m.id + "' expects " +
                         std::to_string(m.dims()));
  if (!m.standardized()) return o.features;
  scratch = Standardizer{m.feature_offset, m.feature_scale}.apply(o.features);
  return scratch;
}

// Normalizes `mass` (stored from state `lo`), applies the window rule and
// writes the result into `state`. Returns the pre-normalization sum. Throws
// before touching `state`, so a failed step leaves it as it was.
inline double Commit(DecoderState &state, const FollowerModel &m,
                     std::vector<double> &mass, std::size_t lo,
                     const DecodeOptions &opts) {
  double sum = 0.0;
  for (double a : mass) sum += a;
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw AllZeroMass("model '" + m.id + "': forward mass vanished at frame " +
                      std::to_string(state.step_count + 1));
  for (double &a : mass) a /= sum;

  const std::size_t n = m.num_states();
  const std::size_t hi = lo + mass.size() - 1;
  const Moments pre = outputs(mass, lo);
  const WindowBounds w =
      window_bounds(pre.mu, HalfWindow(m, opts), n, opts.fixed_tail);
  const std::size_t from = std::max(lo, w.lo), to = std::min(hi, w.hi);

  if (w.lo <= lo && w.hi >= hi) {
    // Window already covers the support: keep values untouched.
    if (w.lo == lo && w.hi == hi) {
      state.alpha.swap(mass);
    } else {
      state.alpha.assign(w.hi - w.lo + 1, 0.0);
      std::copy(mass.begin(), mass.end(), state.alpha.begin() + (lo - w.lo));
    }
  } else {
    double kept = 0.0;
    for (std::size_t s = from; s <= to; ++s) kept += mass[s - lo];
    if (!(kept > 0.0))
      throw AllZeroMass("model '" + m.id + "': window holds no mass");
    state.alpha.assign(w.hi - w.lo + 1, 0.0);
    for (std::size_t s = from; s <= to; ++s)
      state.alpha[s - w.lo] = mass[s - lo] / kept;
  }
  state.window_lo = w.lo;
  state.window_hi = w.hi;
  const Moments mom = outputs(state.alpha, w.lo);
  state.mu = mom.mu;
  state.var = std::max(0.0, mom.var);
  return sum;
}

}  // namespace detail

/// Summary of the current decoder state for the controller and reports.
inline FollowerOutput make_output(const FollowerModel &m,
                                  const DecoderState &state,
                                  const ConfidenceGate &gate = {}) {
  FollowerOutput out;
  out.model_id = m.id;
  out.progress_states = state.mu;
  const double duration = static_cast<double>(m.num_states()) / m.rate;
  out.progress_seconds = std::clamp(progression_seconds(state.mu, m), 0.0,
                                    duration);
  out.loglik_rate = state.step_count
                        ? state.loglik / static_cast<double>(state.step_count)
                        : 0.0;
  out.var = state.var;
  out.confident = out.var < gate.var_threshold && out.loglik_rate > gate.loglik_floor;
  return out;
}

/// First frame: alpha_1(i) = prior_i * b_i(o_1) over every state, then
/// normalized and windowed. Throws AllZeroMass if every product underflows.
inline DecoderState init(const FollowerModel &m, const Frame &o1,
                         const DecodeOptions &opts = {}) {
  std::vector<double> scratch;
  const std::span<const double> o = detail::MapFrame(m, o1, scratch);
  const std::size_t n = m.num_states();
  std::vector<double> mass(n, 0.0);
  for (std::size_t j = 1; j <= n; ++j) {
    if (m.prior[j - 1] == 0.0) continue;
    mass[j - 1] = m.prior[j - 1] * std::exp(emission_logprob_mapped(m, j, o));
  }
  DecoderState state;
  const double sum = detail::Commit(state, m, mass, 1, opts);
  state.loglik = std::log(sum);
  state.step_count = 1;
  return state;
}

/// One forward step restricted to the states reachable from the current
/// window. On AllZeroMass the state is left unchanged.
inline void step(DecoderState &state, const FollowerModel &m, const Frame &o_in,
                 const DecodeOptions &opts = {}) {
  std::vector<double> scratch;
  const std::span<const double> o = detail::MapFrame(m, o_in, scratch);
  const std::size_t n = m.num_states();
  const std::size_t lo = state.window_lo;
  const std::size_t hi = std::min(state.window_hi + 1, n);
  // Reused across steps; Commit may swap it with the old alpha buffer.
  thread_local std::vector<double> mass;
  mass.assign(hi - lo + 1, 0.0);
  for (std::size_t j = lo; j <= hi; ++j) {
    const double from_prev = j > lo ? state.alpha_at(j - 1) : 0.0;
    const double pred = from_prev * m.a_next + state.alpha_at(j) * m.a_self;
    if (pred == 0.0) continue;
    mass[j - lo] = pred * std::exp(emission_logprob_mapped(m, j, o));
  }
  const double sum = detail::Commit(state, m, mass, lo, opts);
  state.loglik += std::log(sum);
  state.step_count += 1;
}

/// Owns one live decoder for a shared, immutable model.
class Decoder {
 public:
  explicit Decoder(std::shared_ptr<const FollowerModel> model,
                   DecodeOptions opts = {}, ConfidenceGate gate = {})
      : model_(std::move(model)), opts_(opts), gate_(gate) {}

  /// Initializes on the first frame, steps afterwards.
  FollowerOutput push(const Frame &frame) {
    if (!state_) {
      state_ = init(*model_, frame, opts_);
    } else {
      step(*state_, *model_, frame, opts_);
    }
    return make_output(*model_, *state_, gate_);
  }

  void reset() { state_.reset(); }
  bool started() const { return state_.has_value(); }
  const DecoderState &state() const { return *state_; }
  const FollowerModel &model() const { return *model_; }
  const std::shared_ptr<const FollowerModel> &model_ptr() const {
    return model_;
  }
  const DecodeOptions &options() const { return opts_; }
  const ConfidenceGate &gate() const { return gate_; }
  FollowerOutput output() const { return make_output(*model_, *state_, gate_); }

 private:
  std::shared_ptr<const FollowerModel> model_;
  DecodeOptions opts_;
  ConfidenceGate gate_;
  std::optional<DecoderState> state_;
};

}  // namespace mop

#endif  // MOP_DECODER_HPP_
