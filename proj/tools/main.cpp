// Copyright 2026 The ugw-local Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ugw/cli/config.hpp"
#include "ugw/cli/runner.hpp"
#include "ugw/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Interacting diffusions on sparse graphs and their local equations"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", check;
  std::optional<std::uint64_t> seed;
  auto add_run = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key=value configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "seed, overrides the configuration");
    return sub;
  };
  add_run("simulate-graph", "simulate the particle system on a finite graph");
  add_run("simulate-tree", "simulate the particle system on sampled UGW trees");
  add_run("solve-local", "solve the local equation by ensemble regression");
  CLI::App* verify = add_run("verify", "run a verification check");
  verify->add_option("check", check, "check name (see list-builders)")->required();
  app.add_subcommand("list-builders", "list coefficient builders and checks");

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();
  if (sub->get_name() == "list-builders") {
    std::cout << ugw::cli::list_builders();
    return 0;
  }

  try {
    std::ifstream in(config_path);
    std::stringstream text;
    text << in.rdbuf();
    std::vector<std::pair<std::string, std::string>> overrides = {{"kind", sub->get_name()}};
    if (!check.empty()) overrides.emplace_back("check", check);
    if (seed) overrides.emplace_back("seed", std::to_string(*seed));
    const ugw::cli::RunConfig config = ugw::cli::parse_config(text.str(), overrides);
    for (const auto& w : config.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    const ugw::cli::RunManifest manifest = ugw::cli::run(config, {out_dir, 0});
    if (manifest.status == "error") std::fprintf(stderr, "error: %s\n", manifest.error.c_str());
    std::printf("%s%s%s: %s (%s/manifest.json)\n", manifest.kind.c_str(), manifest.check.empty() ? "" : " ",
                manifest.check.c_str(), manifest.status.c_str(), out_dir.c_str());
    return manifest.exit_code();
  } catch (const ugw::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
