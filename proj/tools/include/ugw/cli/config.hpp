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


#ifndef UGW_CLI_CONFIG_HPP_
#define UGW_CLI_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ugw/coefficients.hpp"
#include "ugw/knn.hpp"
#include "ugw/topology.hpp"

namespace ugw::cli {

enum class RunKind { kSimulateGraph, kSimulateTree, kSolveLocal, kVerify };

const char* to_string(RunKind kind);
RunKind parse_kind(std::string_view text);

// Names accepted by `verify <check>`.
const std::vector<std::string>& check_names();

// A fully resolved run. Every field has a default except the seed.
struct RunConfig {
  RunKind kind = RunKind::kSimulateGraph;
  std::string check;  // verify only
  std::uint64_t seed = 0;

  std::size_t dim = 1;
  double horizon = 1.0;
  std::size_t steps = 100;

  // simulate-graph
  std::string model = "er";  // er | regular | configuration | file
  std::size_t n = 100;
  double p = 0.02;
  std::size_t kappa = 3;
  std::string degree_file;  // configuration: one degree per line
  std::string graph_file;   // file: read_graph format

  // trees and local equations
  std::string rho_text = "poisson(2)";
  OffspringLaw rho = OffspringLaw::poisson(2.0);
  std::size_t depth = 6;
  std::size_t width = 64;
  std::size_t replicas = 100;
  std::string local_mode = "ugw";  // ugw | regular

  std::string drift = "zero";
  Params drift_params;
  std::string sigma = "identity";
  Params sigma_params;
  std::string init = "dirac";
  Params init_params = {{"x", 0.0}};

  GammaEstimatorConfig estimator;

  // verification
  double alpha = 0.01;
  double sigmas = 3.0;
  std::size_t samples = 100000;
  std::string h = "identity";  // reweight-identity test function
  int mrf_order = 2;
  std::size_t mrf_bins = 4;
  std::size_t mrf_permutations = 199;
  std::size_t trials = 20;
  std::size_t n_small = 250;
  std::size_t n_large = 2000;
  double tolerance = 0.08;
  std::size_t child_a = 1, child_b = 2;  // exchangeability

  // Canonical key=value lines, sorted by key, as read (after overrides).
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::string> warnings;

  DriftSpec make_drift() const { return ugw::make_drift(drift, drift_params, dim); }
  DiffusionSpec make_diffusion() const { return ugw::make_diffusion(sigma, sigma_params, dim); }
  InitialLaw make_initial() const { return ugw::make_initial(init, init_params, dim); }
  TimeGrid grid() const { return TimeGrid(horizon, steps); }
  // Canonical text of `entries`; identical configs give identical text.
  std::string canonical() const;
};

// Parses `key = value` lines; '#' starts a comment. Keys may be dotted
// (`estimator.k`, `drift.theta`). Errors are ugw::Error with kind kConfig and
// a message naming the key. `overrides` are applied on top of the text.
RunConfig parse_config(std::string_view text,
                       const std::vector<std::pair<std::string, std::string>>& overrides = {});

// rho syntax: poisson(mean), dirac(k), pmf(p0,p1,...), with optional cap.
OffspringLaw parse_offspring_law(std::string_view text, std::size_t cap,
                                 std::vector<std::string>* warnings = nullptr);

}  // namespace ugw::cli

#endif  // UGW_CLI_CONFIG_HPP_
