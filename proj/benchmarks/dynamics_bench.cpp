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


#include <benchmark/benchmark.h>

#include "ugw/coefficients.hpp"
#include "ugw/dynamics.hpp"
#include "ugw/localeq.hpp"
#include "ugw/topology.hpp"

namespace {

void BM_SimulateRegularGraph(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto topology = ugw::SimTopology::from_graph(ugw::sample_regular(n, 3, 5));
  const auto drift = ugw::ou_pairwise(1.0, 0.5);
  const auto diffusion = ugw::identity_diffusion();
  const auto init = ugw::gaussian_initial(0.0, 1.0);
  const ugw::TimeGrid grid(1.0, 50);
  ugw::SimulationOptions options;
  options.threads = 1;
  for (auto _ : state) {
    auto bundle = ugw::simulate_system(topology, drift, diffusion, init, grid, 9, options);
    benchmark::DoNotOptimize(bundle.raw().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * grid.steps()));
}
BENCHMARK(BM_SimulateRegularGraph)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

// range(0): replicas, range(1): 1 to condition on dyadic lags
void BM_SolveLocalRegular(benchmark::State& state) {
  const auto replicas = static_cast<std::size_t>(state.range(0));
  const auto drift = ugw::ou_pairwise(1.0, 0.5);
  const auto diffusion = ugw::identity_diffusion();
  const auto init = ugw::gaussian_initial(0.0, 1.0);
  const ugw::TimeGrid grid(1.0, 10);
  ugw::GammaEstimatorConfig config;
  config.dyadic_lags = state.range(1) != 0;
  ugw::LocalSolveOptions options;
  options.threads = 1;
  for (auto _ : state) {
    auto ensemble = ugw::solve_local_regular(3, drift, diffusion, init, replicas, grid, config, 9,
                                             options);
    benchmark::DoNotOptimize(&ensemble);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(replicas * grid.steps()));
}
BENCHMARK(BM_SolveLocalRegular)
    ->Args({1000, 0})
    ->Args({1000, 1})
    ->Args({4000, 1})
    ->Unit(benchmark::kMillisecond);

}  // namespace
