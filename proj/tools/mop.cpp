// tools/mop.cpp

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

// Command-line front end: train, follow, bench, synth, serve.

#include <csignal>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "cli.hpp"
#include "mop/http_bridge.hpp"

namespace {

int Serve(std::uint16_t port, std::uint16_t http_port, bool any_address,
          const std::string &assets, const std::string &static_dir) {
  return mop::cli::Guard(std::cerr, [&] {
    auto registry = std::make_shared<mop::service::AssetRegistry>();
    mop::cli::LoadAssets(assets, *registry);
    if (http_port != 0) {
      mop::service::HttpBridge bridge(registry);
      if (!static_dir.empty() && !bridge.mount(static_dir))
        throw mop::cli::IoFailure("cannot serve '" + static_dir + "'");
      const auto bound = bridge.listen(http_port, any_address);
      std::cerr << "http bridge on port " << bound << std::endl;
      bridge.run();
      return 0;
    }
    if (port == 0) {
      mop::service::serve_stream(std::cin, std::cout, registry);
      return 0;
    }
    mop::service::TcpServer server(registry);
    const auto bound = server.listen(port, any_address);
    std::cerr << "listening on port " << bound << std::endl;
    server.run();
    return 0;
  });
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"mop: live action following and puppet control"};
  app.require_subcommand(1);

  mop::cli::TrainArgs train;
  auto *t = app.add_subcommand("train", "train a follower model from a template");
  t->add_option("template", train.template_path, "template sequence file")->required();
  t->add_option("-o,--output", train.out_path, "model file to write");
  t->add_option("--sigma", train.sigma, "fixed:V, template:F or step:F")
      ->capture_default_str();
  t->add_option("--prior", train.prior, "start_state or uniform_first_window")
      ->capture_default_str();
  t->add_option("--window", train.window, "half window p in states")
      ->capture_default_str();
  t->add_flag("--standardize", train.standardize, "per-source standardization");

  mop::cli::FollowArgs follow;
  std::size_t follow_window = 0;
  auto *f = app.add_subcommand("follow", "replay a recording against models");
  f->add_option("models", follow.model_paths, "model files")->required();
  f->add_option("-i,--input", follow.input_path, "action sequence file or -")
      ->required();
  f->add_option("--report", follow.report_path, "write the report here");
  f->add_option("--window", follow_window, "override half window");
  f->add_option("--margin", follow.margin, "hysteresis margin")->capture_default_str();
  f->add_option("--loglik-floor", follow.loglik_floor)->capture_default_str();
  f->add_option("--var-threshold", follow.var_threshold)->capture_default_str();

  mop::cli::BenchArgs bench;
  auto *b = app.add_subcommand("bench", "time decoder steps on a synthetic model");
  b->add_option("--states", bench.states)->capture_default_str();
  b->add_option("--dims", bench.dims)->capture_default_str();
  b->add_option("--window", bench.window)->capture_default_str();
  b->add_option("--frames", bench.frames)->capture_default_str();
  b->add_option("--seed", bench.seed)->capture_default_str();
  b->add_flag("--compare", bench.compare_full, "also time p = N");

  mop::cli::SynthArgs synth;
  auto *s = app.add_subcommand("synth", "generate a synthetic sequence");
  s->add_option("--kind", synth.kind, "lissajous, ramp or random_walk")
      ->capture_default_str();
  s->add_option("--frames", synth.frames)->capture_default_str();
  s->add_option("--dims", synth.dims)->capture_default_str();
  s->add_option("--noise", synth.noise)->capture_default_str();
  s->add_option("--speed", synth.speed)->capture_default_str();
  s->add_option("--seed", synth.seed)->capture_default_str();
  s->add_option("--rate", synth.rate)->capture_default_str();
  s->add_option("--id", synth.id)->capture_default_str();
  s->add_option("--clip", synth.clip, "write a motion clip: joint or blend");
  s->add_option("-o,--output", synth.out_path, "output file (default stdout)");

  std::uint16_t port = 0;
  bool any_address = false;
  std::uint16_t http_port = 0;
  std::string assets, static_dir;
  auto *v = app.add_subcommand("serve", "run the session service");
  v->add_option("--port", port, "TCP port (default: stdio)");
  v->add_flag("--any-address", any_address, "listen on all interfaces");
  v->add_option("--http", http_port, "HTTP bridge port for browser clients");
  v->add_option("--static", static_dir, "directory served at / by the bridge");
  v->add_option("--assets", assets, "directory of .seq and .model files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mop::cli::kInputError;
  }

  if (*t) return mop::cli::run_train(train, std::cout, std::cerr);
  if (*f) {
    if (follow_window > 0) follow.window = follow_window;
    return mop::cli::run_follow(follow, std::cout, std::cerr);
  }
  if (*b) return mop::cli::run_bench(bench, std::cout, std::cerr);
  if (*s) return mop::cli::run_synth(synth, std::cout, std::cerr);
  if (*v) {
    std::signal(SIGPIPE, SIG_IGN);
    return Serve(port, http_port, any_address, assets, static_dir);
  }
  return mop::cli::kInputError;
}
