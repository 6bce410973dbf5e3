// mop/training.hpp

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

// Single-template training. Each template frame becomes one state of a
// left-to-right chain with fixed self/next transitions; state j emits
// Gaussian-shaped scores centered on the template frame x_j.

#ifndef MOP_TRAINING_HPP_
#define MOP_TRAINING_HPP_

#include <algorithm>
#include <cstddef>
#include <span>
#include <variant>

#include "mop/core.hpp"

namespace mop {

struct FixedSigma {
  double value = 1.0;
};

/// sigma2 = factor * (mean over dimensions of the per-dimension variance of
/// the template).
struct TemplateScaledSigma {
  double factor = 1.0;
};

/// sigma2 = factor * (mean squared distance between successive template
/// frames). Keeps neighbouring states distinguishable whatever the data
/// scale or template length. At the default factor a neighbouring state
/// scores log b = -1 on average.
inline constexpr double kDefaultStepFactor = 0.5;

struct StepScaledSigma {
  double factor = kDefaultStepFactor;
};

using SigmaMode = std::variant<FixedSigma, TemplateScaledSigma, StepScaledSigma>;

struct TrainConfig {
  SigmaMode sigma = StepScaledSigma{};
  PriorMode prior = PriorMode::kStartState;
  std::size_t half_window = 10;
  // Confidence gates used downstream by the controller.
  double loglik_floor = -25.0;
  double var_threshold = 25.0;
  bool standardize = false;
};

inline void validate_config(const TrainConfig &cfg) {
  if (const auto *f = std::get_if<FixedSigma>(&cfg.sigma)) {
    if (!(f->value > 0.0) || !std::isfinite(f->value))
      throw InvariantError("fixed sigma2 must be > 0");
  } else if (const auto *s = std::get_if<TemplateScaledSigma>(&cfg.sigma)) {
    if (!(s->factor > 0.0) || !std::isfinite(s->factor))
      throw InvariantError("sigma scale factor must be > 0");
  } else if (const auto *s = std::get_if<StepScaledSigma>(&cfg.sigma)) {
    if (!(s->factor > 0.0) || !std::isfinite(s->factor))
      throw InvariantError("sigma scale factor must be > 0");
  }
  if (cfg.half_window < 1) throw InvariantError("half window must be >= 1");
}

/// Mean over dimensions of the population variance of each dimension.
inline double MeanDimensionVariance(const std::vector<std::vector<double>> &xs) {
  const std::size_t n = xs.size();
  const std::size_t d = xs.empty() ? 0 : xs[0].size();
  if (n == 0 || d == 0) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (const auto &x : xs) mean += x[k];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const auto &x : xs) ss += (x[k] - mean) * (x[k] - mean);
    total += ss / static_cast<double>(n);
  }
  return total / static_cast<double>(d);
}

inline double MeanSuccessiveDistance2(const std::vector<std::vector<double>> &xs) {
  if (xs.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) total += distance2(xs[i], xs[i - 1]);
  return total / static_cast<double>(xs.size() - 1);
}

/// Start-state or uniform-over-first-window initial distribution.
inline std::vector<double> MakePrior(PriorMode mode, std::size_t n,
                                     std::size_t half_window) {
  std::vector<double> prior(n, 0.0);
  if (mode == PriorMode::kStartState) {
    prior[0] = 1.0;
  } else {
    const std::size_t width = std::min(2 * half_window + 1, n);
    for (std::size_t i = 0; i < width; ++i)
      prior[i] = 1.0 / static_cast<double>(width);
  }
  return prior;
}

inline FollowerModel train_model(const ActionTemplate &tpl,
                                 const TrainConfig &cfg = {}) {
  validate_template(tpl);
  validate_config(cfg);

  FollowerModel m;
  m.id = tpl.id;
  m.rate = tpl.rate;
  m.a_self = 0.5;
  m.a_next = 0.5;
  m.prior_mode = cfg.prior;
  m.half_window = std::min(cfg.half_window, tpl.length());

  Standardizer st;
  if (cfg.standardize) st = Standardizer::Fit(tpl);
  m.states.reserve(tpl.length());
  for (const Frame &f : tpl.frames) m.states.push_back(st.apply(f.features));
  m.feature_offset = st.offset;
  m.feature_scale = st.scale;

  if (const auto *f = std::get_if<FixedSigma>(&cfg.sigma)) {
    m.sigma2 = f->value;
  } else if (const auto *t = std::get_if<TemplateScaledSigma>(&cfg.sigma)) {
    const double v = MeanDimensionVariance(m.states);
    if (!(v > 0.0))
      throw InvariantError("template '" + tpl.id +
                           "' has zero variance; use a fixed sigma2");
    m.sigma2 = t->factor * v;
  } else {
    const double v = MeanSuccessiveDistance2(m.states);
    if (!(v > 0.0))
      throw InvariantError("template '" + tpl.id +
                           "' never moves; use a fixed sigma2");
    m.sigma2 = std::get<StepScaledSigma>(cfg.sigma).factor * v;
  }
  m.prior = MakePrior(m.prior_mode, m.num_states(), m.half_window);
  validate_model(m);
  return m;
}

/// Log of the un-normalized Gaussian emission of state `state` (1-based) for
/// an observation already mapped into model space.
inline double emission_logprob_mapped(const FollowerModel &m, std::size_t state,
                                      std::span<const double> o) {
  return -distance2(o, m.states[state - 1]) / (2.0 * m.sigma2);
}

/// Emission log-score of a raw frame; applies the model's standardization.
inline double emission_logprob(const FollowerModel &m, std::size_t state,
                               const Frame &o) {
  if (state < 1 || state > m.num_states())
    throw DimensionError("state index " + std::to_string(state) +
                         " outside [1, " + std::to_string(m.num_states()) + "]");
  if (o.dims() != m.dims())
    throw DimensionError("frame has " + std::to_string(o.dims()) +
                         " dims, model '" + m.id + "' expects " +
                         std::to_string(m.dims()));
  if (!m.standardized()) return emission_logprob_mapped(m, state, o.features);
  Standardizer st{m.feature_offset, m.feature_scale};
  return emission_logprob_mapped(m, state, st.apply(o.features));
}

}  // namespace mop

#endif  // MOP_TRAINING_HPP_
