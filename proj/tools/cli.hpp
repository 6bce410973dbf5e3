// tools/cli.hpp

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

// Command implementations behind the `mop` binary. Each command writes its
// normal output to `out`, diagnostics to `err`, and returns the process exit
// code: 0 success, 2 input error, 3 data mismatch, 4 internal invariant
// violation.

#ifndef MOP_TOOLS_CLI_HPP_
#define MOP_TOOLS_CLI_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mop/mop.hpp"

namespace mop::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kDataMismatch = 3,
  kInternal = 4,
};

inline int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension:
    case ErrorCode::kLayoutMismatch:
    case ErrorCode::kMissingSource: return kDataMismatch;
    case ErrorCode::kAllZeroMass: return kInternal;
    default: return kInputError;
  }
}

/// Raised for unreadable or unwritable paths.
class IoFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string ReadInput(const std::string &path) {
  if (path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), {});
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void WriteOutput(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoFailure("failed writing '" + path + "'");
}

/// Runs `body`, mapping exceptions to exit codes and messages on `err`.
template <typename Body>
int Guard(std::ostream &err, Body &&body) {
  try {
    return body();
  } catch (const IoFailure &e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception &e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}

/// Parses "fixed:V", "template:F" or "step:F".
inline SigmaMode ParseSigma(const std::string &spec) {
  const auto colon = spec.find(':');
  const std::string mode = spec.substr(0, colon);
  const std::string value = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto number = [&](double fallback) {
    if (value.empty()) return fallback;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != value.size())
      throw InvariantError("bad --sigma value '" + spec + "'");
    return v;
  };
  if (mode == "fixed") {
    if (value.empty()) throw InvariantError("--sigma fixed needs a value");
    return FixedSigma{number(1.0)};
  }
  if (mode == "template") return TemplateScaledSigma{number(1.0)};
  if (mode == "step") return StepScaledSigma{number(kDefaultStepFactor)};
  throw InvariantError("unknown --sigma mode '" + spec +
                       "' (expected fixed:V, template:F or step:F)");
}

inline PriorMode ParsePrior(const std::string &s) {
  if (s == "start_state" || s == "start") return PriorMode::kStartState;
  if (s == "uniform_first_window" || s == "window")
    return PriorMode::kUniformFirstWindow;
  throw InvariantError("unknown --prior '" + s + "'");
}

struct TrainArgs {
  std::string template_path;
  std::string out_path;  // empty: <template stem>.model next to the input
  std::string sigma = "step:0.5";
  std::string prior = "start_state";
  std::size_t window = 10;
  bool standardize = false;
};

inline int run_train(const TrainArgs &args, std::ostream &out,
                     std::ostream &err) {
  return Guard(err, [&] {
    const ActionTemplate tpl = io::load_template(ReadInput(args.template_path));
    TrainConfig cfg;
    cfg.sigma = ParseSigma(args.sigma);
    cfg.prior = ParsePrior(args.prior);
    cfg.half_window = args.window;
    cfg.standardize = args.standardize;
    const FollowerModel model = train_model(tpl, cfg);
    std::string path = args.out_path;
    if (path.empty()) {
      std::filesystem::path p =
          args.template_path == "-" ? std::filesystem::path(tpl.id)
                                    : std::filesystem::path(args.template_path);
      p.replace_extension(".model");
      path = p.string();
    }
    WriteOutput(path, io::save_model(model));
    out << "model " << model.id << "\n"
        << "N " << model.num_states() << "\n"
        << "d " << model.dims() << "\n"
        << "sigma2 " << io::FormatNumber(model.sigma2) << "\n"
        << "p " << model.half_window << "\n"
        << "path " << path << "\n";
    return static_cast<int>(kOk);
  });
}

struct FollowArgs {
  std::vector<std::string> model_paths;
  std::string input_path;
  std::string report_path;  // empty: table on `out`
  std::optional<std::size_t> window;
  double margin = 2.0;
  double loglik_floor = -25.0;
  double var_threshold = 25.0;
};

/// Least-squares slope and intercept of y against x.
inline std::pair<double, double> FitLine(const std::vector<double> &x,
                                         const std::vector<double> &y) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) return {0.0, y.empty() ? 0.0 : y[0]};
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  return {slope, my - slope * mx};
}

struct FollowSummary {
  std::size_t frames = 0;
  std::size_t holds = 0;
  double slope = 0.0;
  double intercept = 0.0;
  std::map<std::string, std::size_t> histogram;
  std::string majority;
};

/// Replays `obs` through a rig holding every model and renders the report.
inline FollowSummary Follow(const std::vector<FollowerModel> &models,
                            const std::vector<Frame> &obs,
                            const FollowArgs &args, std::string &table) {
  ArbitrationConfig arb;
  arb.hysteresis_margin = args.margin;
  arb.gate = {args.loglik_floor, args.var_threshold};
  if (args.window) arb.decode.half_window = args.window;
  CharacterRig rig("follow", arb);
  std::size_t max_p = 1;
  for (const auto &m : models) {
    rig.bind(std::make_shared<const FollowerModel>(m));
    max_p = std::max(max_p, args.window.value_or(m.half_window));
  }
  const std::size_t burn_in = 2 * max_p;

  table = "mop-report 1\ncolumns t active mu mu_seconds loglik_rate var\n";
  table += "frames " + std::to_string(obs.size()) + "\ndata\n";
  FollowSummary sum;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const PuppetCommand cmd = rig.advance(obs[i]);
    ++sum.frames;
    table += io::FormatNumber(obs[i].t);
    if (cmd.hold()) {
      ++sum.holds;
      ++sum.histogram["-"];
      table += " - - - - -\n";
      continue;
    }
    const FollowerOutput &o = *cmd.active_output;
    ++sum.histogram[*cmd.active_model_id];
    table += " " + *cmd.active_model_id + " " + io::FormatNumber(o.progress_states) +
             " " + io::FormatNumber(o.progress_seconds) + " " +
             io::FormatNumber(o.loglik_rate) + " " + io::FormatNumber(o.var) + "\n";
    if (i >= burn_in) {
      xs.push_back(static_cast<double>(i + 1));
      ys.push_back(o.progress_states);
    }
  }
  std::tie(sum.slope, sum.intercept) = FitLine(xs, ys);
  std::size_t best = 0;
  for (const auto &[id, count] : sum.histogram) {
    if (id != "-" && count > best) {
      best = count;
      sum.majority = id;
    }
  }
  table += "# summary\n";
  table += "# frames " + std::to_string(sum.frames) + "\n";
  table += "# burn_in " + std::to_string(burn_in) + "\n";
  table += "# slope " + io::FormatNumber(sum.slope) + "\n";
  table += "# intercept " + io::FormatNumber(sum.intercept) + "\n";
  table += "# holds " + std::to_string(sum.holds) + "\n";
  for (const auto &[id, count] : sum.histogram)
    if (id != "-") table += "# active " + id + " " + std::to_string(count) + "\n";
  table += "# majority " + (sum.majority.empty() ? std::string("-") : sum.majority) +
           "\n";
  return sum;
}

inline int run_follow(const FollowArgs &args, std::ostream &out,
                      std::ostream &err) {
  return Guard(err, [&] {
    if (args.model_paths.empty()) throw IoFailure("no model files given");
    std::vector<FollowerModel> models;
    for (const auto &p : args.model_paths)
      models.push_back(io::load_model(ReadInput(p)));
    const ActionTemplate input = io::load_template(ReadInput(args.input_path));
    for (const auto &m : models) {
      if (m.dims() != input.dims())
        throw DimensionError("model '" + m.id + "' has d=" +
                             std::to_string(m.dims()) + ", input has d=" +
                             std::to_string(input.dims()));
    }
    std::string table;
    Follow(models, input.frames, args, table);
    if (args.report_path.empty()) {
      out << table;
    } else {
      WriteOutput(args.report_path, table);
      out << "report " << args.report_path << "\n";
    }
    return static_cast<int>(kOk);
  });
}

struct BenchArgs {
  std::size_t states = 600;
  std::size_t dims = 60;
  std::size_t window = 10;
  std::size_t frames = 10000;
  bool compare_full = false;
  std::uint64_t seed = 7;
};

struct BenchResult {
  double mean_us = 0.0;
  double p50_us = 0.0;
  double p95_us = 0.0;
  double p99_us = 0.0;
  double steps_per_s = 0.0;
};

/// Times decoder steps only. The model's own template is replayed in a loop;
/// the decoder is re-initialized (untimed) at the end of each pass.
inline BenchResult TimeSteps(const FollowerModel &model,
                             const std::vector<Frame> &replay,
                             std::size_t frames, std::size_t window) {
  DecodeOptions opts;
  opts.half_window = window;
  std::vector<double> samples;
  samples.reserve(frames);
  std::optional<DecoderState> state;
  std::size_t pos = 0;
  using Clock = std::chrono::steady_clock;
  double checksum = 0.0;
  while (samples.size() < frames) {
    if (!state || pos >= replay.size()) {
      state = init(model, replay[0], opts);
      pos = 1;
    }
    const auto t0 = Clock::now();
    step(*state, model, replay[pos], opts);
    const auto t1 = Clock::now();
    checksum += state->mu;
    samples.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    ++pos;
  }
  BenchResult r;
  if (samples.empty()) return r;
  double total = 0.0;
  for (double s : samples) total += s;
  r.mean_us = total / static_cast<double>(samples.size());
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  auto pct = [&](double q) {
    const std::size_t idx = std::min(
        sorted.size() - 1,
        static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1) + 0.5));
    return sorted[idx];
  };
  r.p50_us = pct(0.50);
  r.p95_us = pct(0.95);
  r.p99_us = pct(0.99);
  r.steps_per_s = r.mean_us > 0 ? 1e6 / r.mean_us : 0.0;
  if (checksum < 0) r.steps_per_s = -r.steps_per_s;  // keeps the loop observable
  return r;
}

/// Random-walk model of the requested size; its template is the replay.
inline std::pair<FollowerModel, std::vector<Frame>> BenchModel(
    const BenchArgs &args) {
  oracle::SynthSpec spec;
  spec.kind = oracle::SynthKind::kRandomWalk;
  spec.frames = args.states;
  spec.dims = args.dims;
  spec.seed = args.seed;
  spec.id = "bench";
  const ActionTemplate tpl = oracle::gen_synthetic(spec);
  TrainConfig cfg;
  cfg.half_window = std::max<std::size_t>(1, args.window);
  return {train_model(tpl, cfg), tpl.frames};
}

inline int run_bench(const BenchArgs &args, std::ostream &out,
                     std::ostream &err) {
  return Guard(err, [&] {
    if (args.states < 2) throw InvariantError("--states must be >= 2");
    if (args.dims < 1) throw InvariantError("--dims must be >= 1");
    if (args.window < 1) throw InvariantError("--window must be >= 1");
    out << "states " << args.states << "\n"
        << "dims " << args.dims << "\n"
        << "window " << args.window << "\n"
        << "frames " << args.frames << "\n";
    if (args.frames == 0) return static_cast<int>(kOk);
    const auto [model, replay] = BenchModel(args);
    const BenchResult w = TimeSteps(model, replay, args.frames, args.window);
    out << "mean_us " << w.mean_us << "\n"
        << "p50_us " << w.p50_us << "\n"
        << "p95_us " << w.p95_us << "\n"
        << "p99_us " << w.p99_us << "\n"
        << "steps_per_s " << std::abs(w.steps_per_s) << "\n";
    if (args.compare_full) {
      const BenchResult f = TimeSteps(model, replay, args.frames, args.states);
      out << "full_mean_us " << f.mean_us << "\n"
          << "speedup " << (w.mean_us > 0 ? f.mean_us / w.mean_us : 0.0) << "\n";
    }
    return static_cast<int>(kOk);
  });
}

struct SynthArgs {
  std::string kind = "lissajous";
  std::size_t frames = 100;
  std::size_t dims = 2;
  double noise = 0.0;
  double speed = 1.0;
  std::uint64_t seed = 1;
  double rate = 30.0;
  std::string id = "synth";
  std::string clip;  // empty: action template; "joint" or "blend": motion clip
  std::string out_path;
};

inline oracle::SynthKind ParseKind(const std::string &k) {
  if (k == "lissajous") return oracle::SynthKind::kLissajous;
  if (k == "ramp") return oracle::SynthKind::kRamp;
  if (k == "random_walk") return oracle::SynthKind::kRandomWalk;
  throw InvariantError("unknown --kind '" + k + "'");
}

inline std::string Synthesize(const SynthArgs &args) {
  oracle::SynthSpec spec;
  spec.kind = ParseKind(args.kind);
  spec.frames = args.frames;
  spec.dims = args.dims;
  spec.noise_sigma = args.noise;
  spec.speed = args.speed;
  spec.seed = args.seed;
  spec.rate = args.rate;
  spec.id = args.id;
  ActionTemplate tpl = oracle::gen_synthetic(spec);
  if (args.clip.empty()) return io::save_sequence(tpl);

  MotionClip clip;
  clip.id = tpl.id;
  clip.rate = tpl.rate;
  const bool blend = args.clip == "blend";
  if (!blend && args.clip != "joint")
    throw InvariantError("--clip must be 'joint' or 'blend'");
  for (std::size_t k = 0; k < tpl.dims(); ++k)
    clip.channels.push_back({(blend ? "w" : "q") + std::to_string(k),
                             blend ? ChannelKind::kBlend : ChannelKind::kJoint});
  for (auto &f : tpl.frames) {
    if (blend)
      for (double &v : f.features) v = 0.5 + 0.5 * std::tanh(v);
    clip.frames.push_back(f);
  }
  return io::save_sequence(clip);
}

inline int run_synth(const SynthArgs &args, std::ostream &out,
                     std::ostream &err) {
  return Guard(err, [&] {
    const std::string text = Synthesize(args);
    if (args.out_path.empty() || args.out_path == "-") {
      out << text;
    } else {
      WriteOutput(args.out_path, text);
      out << "wrote " << args.out_path << "\n";
    }
    return static_cast<int>(kOk);
  });
}

/// Loads every *.seq (templates and clips) and *.model file in `dir`.
inline void LoadAssets(const std::string &dir, service::AssetRegistry &reg) {
  if (dir.empty()) return;
  if (!std::filesystem::is_directory(dir))
    throw IoFailure("asset directory '" + dir + "' not found");
  std::vector<std::filesystem::path> files;
  for (const auto &e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto &p : files) {
    if (p.extension() == ".seq") {
      io::Sequence s = io::load_sequence(ReadInput(p.string()));
      if (auto *t = std::get_if<ActionTemplate>(&s)) {
        reg.put_template(std::move(*t));
      } else {
        reg.put_clip(std::get<MotionClip>(std::move(s)));
      }
    } else if (p.extension() == ".model") {
      auto m = std::make_shared<const FollowerModel>(
          io::load_model(ReadInput(p.string())));
      reg.put_model({m, SourceLayout{{"default", m->dims()}}, ConfidenceGate{}});
    }
  }
}

}  // namespace mop::cli

#endif  // MOP_TOOLS_CLI_HPP_
