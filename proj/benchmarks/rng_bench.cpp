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

#include <cstdint>
#include <vector>

#include "ugw/rng.hpp"

namespace {

void BM_Philox(benchmark::State& state) {
  ugw::rng::Counter c{0, 0, 0, 0};
  const ugw::rng::Key key = ugw::rng::derive_key(7, 1);
  for (auto _ : state) {
    c = ugw::rng::philox4x32(c, key);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * 4);
}
BENCHMARK(BM_Philox);

void BM_Gaussians(benchmark::State& state) {
  std::vector<double> out(static_cast<std::size_t>(state.range(0)));
  std::uint64_t index = 0;
  for (auto _ : state) {
    ugw::rng::gaussians(7, 1, ugw::rng::Domain::kNoise, index++, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Gaussians)->Arg(1)->Arg(16)->Arg(1024);

}  // namespace
