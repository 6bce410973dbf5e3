// mop/oracle.hpp

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

// Brute-force references for verification: the unwindowed forward
// recursion over a dense transition matrix, classic DTW, and deterministic
// synthetic gesture generation. Nothing here depends on decoder.hpp.

#ifndef MOP_ORACLE_HPP_
#define MOP_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mop/core.hpp"

namespace mop::oracle {

struct ForwardStep {
  std::vector<double> alpha;  // all N states, normalized
  double mu = 0.0;
  double var = 0.0;
  double loglik = 0.0;
};

/// Textbook forward algorithm over all N states. Transitions are expanded
/// into a dense N x N matrix; alpha is renormalized after every frame and
/// log-likelihood accumulates the log of each pre-normalization sum.
/// Does not validate the model, so single-state models are accepted.
inline std::vector<ForwardStep> forward_full(const FollowerModel &model,
                                             std::span<const Frame> obs) {
  const std::size_t n = model.states.size();
  const std::size_t d = n ? model.states[0].size() : 0;
  std::vector<double> trans(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    trans[i * n + i] = model.a_self;
    if (i + 1 < n) trans[i * n + i + 1] = model.a_next;
  }

  auto emission = [&](std::size_t j, const std::vector<double> &o) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = o[k] - model.states[j][k];
      acc += diff * diff;
    }
    return std::exp(-acc / (2.0 * model.sigma2));
  };

  std::vector<ForwardStep> out;
  out.reserve(obs.size());
  std::vector<double> alpha(n, 0.0), next(n, 0.0);
  double loglik = 0.0;
  for (std::size_t t = 0; t < obs.size(); ++t) {
    if (obs[t].dims() != d)
      throw DimensionError("forward_full: observation " + std::to_string(t));
    std::vector<double> o = obs[t].features;
    if (!model.feature_scale.empty()) {
      for (std::size_t k = 0; k < d; ++k)
        o[k] = (o[k] - model.feature_offset[k]) / model.feature_scale[k];
    }
    for (std::size_t j = 0; j < n; ++j) {
      double pred;
      if (t == 0) {
        pred = model.prior[j];
      } else {
        pred = 0.0;
        for (std::size_t i = 0; i < n; ++i) pred += alpha[i] * trans[i * n + j];
      }
      next[j] = pred * emission(j, o);
    }
    double sum = 0.0;
    for (double a : next) sum += a;
    if (!(sum > 0.0) || !std::isfinite(sum))
      throw AllZeroMass("forward_full: mass vanished at frame " +
                        std::to_string(t));
    for (double &a : next) a /= sum;
    loglik += std::log(sum);
    alpha.swap(next);

    ForwardStep step;
    step.alpha = alpha;
    for (std::size_t i = 0; i < n; ++i)
      step.mu += static_cast<double>(i + 1) * alpha[i];
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = static_cast<double>(i + 1) - step.mu;
      step.var += dev * dev * alpha[i];
    }
    step.loglik = loglik;
    out.push_back(std::move(step));
  }
  return out;
}

struct DtwResult {
  std::vector<std::pair<std::size_t, std::size_t>> path;  // 1-based (i, j)
  double cost = 0.0;
};

/// Dynamic time warping with squared Euclidean local cost and steps
/// (1,0), (0,1), (1,1). Ties in the backtrack prefer the diagonal.
inline DtwResult dtw_align(std::span<const std::vector<double>> tpl,
                           std::span<const std::vector<double>> obs) {
  const std::size_t n = tpl.size();
  const std::size_t m = obs.size();
  if (n == 0 || m == 0) throw DimensionError("dtw_align: empty sequence");
  const std::size_t d = tpl[0].size();
  for (const auto &x : tpl)
    if (x.size() != d) throw DimensionError("dtw_align: ragged template");
  for (const auto &y : obs)
    if (y.size() != d) throw DimensionError("dtw_align: dimension mismatch");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> acc((n + 1) * (m + 1), kInf);
  auto at = [&](std::size_t i, std::size_t j) -> double & {
    return acc[i * (m + 1) + j];
  };
  at(0, 0) = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      double local = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = tpl[i - 1][k] - obs[j - 1][k];
        local += diff * diff;
      }
      at(i, j) =
          local + std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
    }
  }

  DtwResult res;
  res.cost = at(n, m);
  std::size_t i = n, j = m;
  res.path.emplace_back(i, j);
  while (i > 1 || j > 1) {
    if (i == 1) {
      --j;
    } else if (j == 1) {
      --i;
    } else {
      const double diag = at(i - 1, j - 1);
      const double up = at(i - 1, j);
      const double left = at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (left <= up) {
        --j;
      } else {
        --i;
      }
    }
    res.path.emplace_back(i, j);
  }
  std::reverse(res.path.begin(), res.path.end());
  return res;
}

inline DtwResult dtw_align(std::span<const Frame> tpl,
                           std::span<const Frame> obs) {
  std::vector<std::vector<double>> a, b;
  a.reserve(tpl.size());
  b.reserve(obs.size());
  for (const auto &f : tpl) a.push_back(f.features);
  for (const auto &f : obs) b.push_back(f.features);
  return dtw_align(std::span<const std::vector<double>>(a),
                   std::span<const std::vector<double>>(b));
}

enum class SynthKind { kLissajous, kRamp, kRandomWalk };

struct SynthSpec {
  SynthKind kind = SynthKind::kLissajous;
  std::size_t frames = 100;
  std::size_t dims = 2;
  double noise_sigma = 0.0;
  double speed = 1.0;
  std::uint64_t seed = 1;
  double rate = 30.0;
  std::string id = "synth";
};

/// Deterministic synthetic gesture. The curve is a function of a parameter
/// u = speed * i / (frames - 1), so `speed` scales how much of the curve is
/// traversed over the same number of frames. Additive i.i.d. Gaussian noise
/// of standard deviation noise_sigma is applied last.
inline ActionTemplate gen_synthetic(const SynthSpec &spec) {
  if (spec.frames < 2) throw DegenerateTemplate("gen_synthetic: frames < 2");
  if (spec.dims < 1) throw DimensionError("gen_synthetic: dims < 1");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::size_t T = spec.frames;
  const std::size_t d = spec.dims;
  ActionTemplate tpl;
  tpl.id = spec.id;
  tpl.rate = spec.rate;
  tpl.layout = {{"synth", d}};
  tpl.frames.resize(T);
  for (std::size_t i = 0; i < T; ++i) {
    tpl.frames[i].t = static_cast<double>(i) / spec.rate;
    tpl.frames[i].features.assign(d, 0.0);
  }
  auto param = [&](std::size_t i) {
    return spec.speed * static_cast<double>(i) / static_cast<double>(T - 1);
  };

  switch (spec.kind) {
    case SynthKind::kLissajous: {
      constexpr double kTwoPi = 6.283185307179586;
      for (std::size_t k = 0; k < d; ++k) {
        const double amp = 0.5 + unif(rng);
        const double cycles = 1.0 + 2.0 * unif(rng);
        const double phase = kTwoPi * unif(rng);
        for (std::size_t i = 0; i < T; ++i)
          tpl.frames[i].features[k] =
              amp * std::sin(kTwoPi * cycles * param(i) + phase);
      }
      break;
    }
    case SynthKind::kRamp: {
      for (std::size_t k = 0; k < d; ++k) {
        const double offset = unif(rng) - 0.5;
        for (std::size_t i = 0; i < T; ++i)
          tpl.frames[i].features[k] =
              offset + static_cast<double>(k + 1) * param(i);
      }
      break;
    }
    case SynthKind::kRandomWalk: {
      // Walk on a fixed grid of 64 knots per unit of u, smoothed, then read
      // back by linear interpolation at each frame's parameter value.
      constexpr double kKnotsPerUnit = 64.0;
      const double u_max = param(T - 1);
      const std::size_t knots =
          static_cast<std::size_t>(std::ceil(u_max * kKnotsPerUnit)) + 2;
      constexpr std::size_t kSmooth = 4;
      // Each dimension draws from its own stream so the walk does not depend
      // on how many knots the other dimensions consumed.
      for (std::size_t k = 0; k < d; ++k) {
        std::seed_seq seq{spec.seed, static_cast<std::uint64_t>(k)};
        std::mt19937_64 walk_rng(seq);
        std::normal_distribution<double> step(0.0, 1.0 / std::sqrt(kKnotsPerUnit));
        std::vector<double> walk(knots + kSmooth, 0.0);
        for (std::size_t s = 1; s < walk.size(); ++s)
          walk[s] = walk[s - 1] + step(walk_rng);
        std::vector<double> smooth(knots, 0.0);
        for (std::size_t s = 0; s < knots; ++s) {
          for (std::size_t w = 0; w <= kSmooth; ++w) smooth[s] += walk[s + w];
          smooth[s] /= static_cast<double>(kSmooth + 1);
        }
        for (std::size_t i = 0; i < T; ++i) {
          const double pos = param(i) * kKnotsPerUnit;
          const std::size_t lo =
              std::min(static_cast<std::size_t>(pos), knots - 2);
          const double frac = pos - static_cast<double>(lo);
          tpl.frames[i].features[k] =
              smooth[lo] + (smooth[lo + 1] - smooth[lo]) * frac;
        }
      }
      break;
    }
  }

  if (spec.noise_sigma > 0.0) {
    for (auto &f : tpl.frames)
      for (double &v : f.features) v += spec.noise_sigma * gauss(rng);
  }
  return tpl;
}

/// Root mean square over every feature value of a sequence.
inline double SignalRms(std::span<const Frame> frames) {
  double ss = 0.0;
  std::size_t count = 0;
  for (const auto &f : frames) {
    for (double v : f.features) ss += v * v;
    count += f.dims();
  }
  return count ? std::sqrt(ss / static_cast<double>(count)) : 0.0;
}

/// Copy of `frames` with i.i.d. Gaussian noise of standard deviation sigma.
inline std::vector<Frame> AddNoise(std::span<const Frame> frames, double sigma,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  std::vector<Frame> out(frames.begin(), frames.end());
  if (sigma <= 0.0) return out;
  for (auto &f : out)
    for (double &v : f.features) v += gauss(rng);
  return out;
}

}  // namespace mop::oracle

#endif  // MOP_ORACLE_HPP_
